#include "biphoton/cli.hpp"
#include "biphoton/core_model.hpp"
#include "biphoton/frame_stack.hpp"
#include "biphoton/reconstruction.hpp"
#include "biphoton/scenario.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace biphoton;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(BIPHOTON_SOURCE_DIR) / "scenarios";

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch()
{
    const fs::path d = fs::temp_directory_path() / "biphoton_cli";
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_cfg(const std::string& name, const std::string& text)
{
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

const std::string kSmallMomentum = "name = small\nmode = momentum\nframes = 300\nseed = 5\n"
                                   "biphoton.sigma_r_um = 7.9\nbiphoton.sigma_k_rad_per_mm = 9.7\ncamera.size = 24\n";

}  // namespace

TEST_CASE("help lists the output columns")
{
    const Outcome o = run_cli({"--help"});
    CHECK(o.code == 0);
    CHECK(o.out.find("scenario,lc_um,sigma_k_rad_per_mm,sigma_r_um,K_exp,K_exp_err,K_theory") != std::string::npos);
    CHECK(run_cli({"frobnicate"}).code == cli::kConfigError);
    CHECK(run_cli({}).code == cli::kConfigError);
}

TEST_CASE("simulate is deterministic and writes a manifest")
{
    const fs::path cfg = write_cfg("small.cfg", kSmallMomentum);
    const fs::path a = scratch() / "a.bpfs", b = scratch() / "b.bpfs";
    REQUIRE(run_cli({"--out", a.string(), "simulate", cfg.string()}).code == 0);
    REQUIRE(run_cli({"--out", b.string(), "--threads", "1", "simulate", cfg.string()}).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(read_frame_stack(a).frame_count == 300);

    const auto j = nlohmann::json::parse(slurp(a.string() + ".json"));
    CHECK(j["frames"] == 300);
    CHECK(j["seed"] == 5);
    CHECK(j["parameters"]["camera.width"] == "24");
    CHECK(j["parameters"].size() == scenario_keys().size() - 3);  // no size aliases, no screen correlation
    const std::uint64_t photons = j["photons"]["deposited"].get<std::uint64_t>() +
                                  j["photons"]["off_sensor"].get<std::uint64_t>() +
                                  j["photons"]["undetected"].get<std::uint64_t>();
    CHECK(photons == 2 * j["photons"]["pairs"].get<std::uint64_t>());

    // --seed overrides the file.
    const fs::path c = scratch() / "c.bpfs";
    REQUIRE(run_cli({"--out", c.string(), "--seed", "6", "simulate", cfg.string()}).code == 0);
    CHECK(slurp(a) != slurp(c));
}

TEST_CASE("config errors exit 2 with a line number")
{
    const fs::path zero = write_cfg("zero.cfg", "name = z\nframes = 0\n");
    Outcome o = run_cli({"--out", (scratch() / "z.bpfs").string(), "simulate", zero.string()});
    CHECK(o.code == cli::kConfigError);
    CHECK(o.err.find("zero.cfg:2:") != std::string::npos);

    const fs::path junk = write_cfg("junk.cfg", "name = j\n\nthis is not config\n");
    o = run_cli({"simulate", junk.string()});
    CHECK(o.code == cli::kConfigError);
    CHECK(o.err.find("junk.cfg:3:") != std::string::npos);

    CHECK(run_cli({"simulate", (scratch() / "nonexistent.cfg").string()}).code == cli::kConfigError);
}

TEST_CASE("reconstruct: identical frames give a zero covariance")
{
    FrameStack s;
    s.spec = default_camera(Mode::momentum, 6, 6);
    s.frame_count = 2;
    s.pixels.assign(72, 0);
    for (std::size_t k = 0; k < 36; ++k) {
        s.pixels[k] = s.pixels[36 + k] = static_cast<std::uint16_t>(100 + 13 * k);
    }
    const fs::path stack = scratch() / "same.bpfs", gamma = scratch() / "same.bpgm";
    write_frame_stack(stack, s);
    REQUIRE(run_cli({"--out", gamma.string(), "reconstruct", stack.string(), "--raw"}).code == 0);
    const JointDistribution g = read_gamma(gamma);
    CHECK(g.frame_count == 2);
    for (double v : g.values) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("file format and mode errors")
{
    const fs::path notstack = write_cfg("not_a_stack.bpfs", "hello");
    CHECK(run_cli({"reconstruct", notstack.string()}).code == cli::kFormatError);
    CHECK(run_cli({"project", notstack.string(), "--kind", "sum"}).code == cli::kFormatError);

    const fs::path cfg = write_cfg("pos.cfg", "name = p\nmode = position\nframes = 50\ncamera.size = 12\n");
    const fs::path stack = scratch() / "pos.bpfs", gamma = scratch() / "pos.bpgm";
    REQUIRE(run_cli({"--out", stack.string(), "simulate", cfg.string()}).code == 0);
    REQUIRE(run_cli({"--out", gamma.string(), "reconstruct", stack.string()}).code == 0);
    CHECK(run_cli({"--out", (scratch() / "x.csv").string(), "project", gamma.string(), "--kind", "xplus"}).code ==
          cli::kModeMismatch);
    CHECK(run_cli({"--out", (scratch() / "x.csv").string(), "project", gamma.string(), "--kind", "xminus"}).code == 0);
    CHECK(run_cli({"project", gamma.string(), "--kind", "diagonal"}).code == cli::kConfigError);
    CHECK(run_cli({"--out", (scratch() / "x.csv").string(), "project", gamma.string(), "--kind", "xminus",
                   "--acceptance"})
              .code == cli::kConfigError);

    // A MINUS of a position run fed to analyze as if it were a SUM.
    const fs::path minus = scratch() / "minus.csv";
    REQUIRE(run_cli({"--out", minus.string(), "project", gamma.string(), "--kind", "minus"}).code == 0);
    CHECK(run_cli({"analyze", (scratch() / "x.csv").string()}).code == cli::kModeMismatch);
}

TEST_CASE("project SUM then analyze gives a sigma_k row")
{
    const fs::path cfg = kScenarios / "momentum_64.cfg";
    const fs::path stack = scratch() / "m.bpfs", gamma = scratch() / "m.bpgm", sum = scratch() / "m_sum.csv";
    REQUIRE(run_cli({"--out", stack.string(), "simulate", cfg.string(), "--frames", "3000"}).code == 0);
    REQUIRE(run_cli({"--out", gamma.string(), "reconstruct", stack.string(), "--raw"}).code == 0);
    REQUIRE(run_cli({"--out", sum.string(), "project", gamma.string(), "--kind", "sum", "--pgm",
                 (scratch() / "m_sum.pgm").string()})
                .code == 0);
    const Outcome o = run_cli({"analyze", sum.string(), "--config", cfg.string()});
    REQUIRE(o.code == 0);
    std::istringstream lines(o.out);
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    CHECK(header == "scenario,lc_um,sigma_k_rad_per_mm,sigma_r_um,K_exp,K_exp_err,K_theory");
    CHECK(row.rfind("momentum_64,inf,", 0) == 0);
    const double sk = std::stod(row.substr(std::string("momentum_64,inf,").size()));
    CHECK(sk == doctest::Approx(9.7).epsilon(0.1));
}

TEST_CASE("--strict turns a failed fit into exit 5")
{
    ProjectionImage flat;
    flat.kind = ProjectionKind::sum;
    flat.mode = Mode::momentum;
    flat.image = Image(15, 15, Affine2::centered(15, 15, 3e3));
    std::fill(flat.image.values.begin(), flat.image.values.end(), 1.0);
    flat.valid.assign(225, 1);
    flat.diagonal_affected.assign(225, 0);
    const fs::path p = scratch() / "flat.csv";
    write_projection_csv(p, flat);
    const Outcome loose = run_cli({"analyze", p.string()});
    CHECK(loose.code == 0);
    CHECK(loose.err.find("did not converge") != std::string::npos);
    CHECK(run_cli({"--strict", "analyze", p.string()}).code == cli::kNotConverged);
}

TEST_CASE("sweep writes one row per value")
{
    const fs::path cfg = write_cfg("sweep.cfg", kSmallMomentum);
    const fs::path dir = scratch() / "sweep";
    const Outcome o = run_cli({"--out", dir.string(), "sweep", cfg.string(), "--key", "biphoton.sigma_k_rad_per_mm",
                           "--values", "8, 12"});
    REQUIRE(o.code == 0);
    std::istringstream csv(slurp(dir / "sweep.csv"));
    std::string line;
    int rows = 0;
    std::getline(csv, line);
    CHECK(line == "scenario,key,value,mode,width,width_err,generator_width,converged");
    while (std::getline(csv, line)) {
        ++rows;
    }
    CHECK(rows == 2);
    CHECK(run_cli({"sweep", cfg.string(), "--key", "camera.colour", "--values", "1"}).code == cli::kConfigError);
}

TEST_CASE("table1 emits the table, regression and panels")
{
    const fs::path dir = scratch() / "t1";
    fs::remove_all(dir);
    const Outcome o = run_cli({"--out", dir.string(), "--reproducible", "table1", "--frames", "400", "--artifacts"});
    REQUIRE(o.code == 0);
    std::istringstream csv(slurp(dir / "table1.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "scenario,lc_um,sigma_k_rad_per_mm,sigma_r_um,K_exp,K_exp_err,K_theory");
    const auto rows = table1_scenarios();
    for (const auto& s : rows) {
        REQUIRE(std::getline(csv, line));
        CHECK(line.rfind(s.name + ",", 0) == 0);
        // K_theory is the closed form, printed to full precision.
        const double kt = std::stod(line.substr(line.rfind(',') + 1));
        CHECK(kt == schmidt_theory(s.crystal, s.pump));
        CHECK(fs::exists(dir / (s.name + "_sum.pgm")));
        CHECK(fs::exists(dir / (s.name + "_xplus.pgm")));
        CHECK(fs::exists(dir / (s.name + "_position_minus.pgm")));
        CHECK(fs::exists(dir / (s.name + "_position_xminus.pgm")));
        CHECK(fs::exists(dir / (s.name + ".bpgm")));
    }
    CHECK(fs::exists(dir / "regression.csv"));
    CHECK(fs::exists(dir / "regression_points.csv"));
    CHECK(fs::exists(dir / "table1_diagnostics.csv"));

    // The SUM width in the table is recomputable from the stored Γ.
    const fs::path sum = scratch() / "row2_sum.csv";
    REQUIRE(run_cli({"--out", sum.string(), "project", (dir / "table1_row2.bpgm").string(), "--kind", "sum",
                     "--acceptance"})
                .code == 0);
    const Outcome a = run_cli({"analyze", sum.string()});
    REQUIRE(a.code == 0);
    std::istringstream table(slurp(dir / "table1.csv"));
    std::getline(table, line);
    std::getline(table, line);
    std::getline(table, line);  // row 2
    const auto field = [](const std::string& l, int n) {
        std::istringstream s(l);
        std::string f;
        for (int i = 0; i <= n; ++i) {
            std::getline(s, f, ',');
        }
        return f;
    };
    std::istringstream ar(a.out);
    std::string arow;
    std::getline(ar, arow);
    std::getline(ar, arow);
    CHECK(std::stod(field(arow, 2)) == doctest::Approx(std::stod(field(line, 2))).epsilon(1e-9));
}
