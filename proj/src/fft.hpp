#ifndef BIPHOTON_SRC_FFT_HPP
#define BIPHOTON_SRC_FFT_HPP

#include <complex>
#include <span>

namespace biphoton::detail {

// Unnormalized 2D complex DFT of a row-major width x height array, in place.
// Plans are created once per shape under a global lock; execution is
// thread-safe.
class Fft2d {
  public:
    Fft2d(int width, int height);
    ~Fft2d();
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

    void forward(std::span<std::complex<double>> data) const;
    void inverse(std::span<std::complex<double>> data) const;

    int width() const { return width_; }
    int height() const { return height_; }

  private:
    int width_;
    int height_;
    void* forward_plan_;
    void* inverse_plan_;
};

// Swap quadrants so that index 0 moves to (width/2, height/2) (fftshift), or
// back (ifftshift).
void fftshift(std::span<std::complex<double>> data, int width, int height);
void ifftshift(std::span<std::complex<double>> data, int width, int height);

}  // namespace biphoton::detail

#endif  // BIPHOTON_SRC_FFT_HPP
