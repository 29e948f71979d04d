#ifndef BIPHOTON_CAMPAIGN_HPP
#define BIPHOTON_CAMPAIGN_HPP

// Multi-scenario runs: the Table 1 campaign (momentum and position run per
// coherence setting, Schmidt numbers, σ_k² vs 1/ℓ_c² regression) and
// one-key parameter sweeps.

#include "biphoton/analysis.hpp"
#include "biphoton/pipeline.hpp"
#include "biphoton/scenario.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace biphoton {

struct Table1Row {
    std::string scenario;
    CoherenceLength lc = CoherenceLength::infinite();
    WidthEstimate sigma_k;  // [rad/m]
    WidthEstimate sigma_r;  // [m], after the √β correction
    SchmidtEstimate k_exp;
    double k_theory = 0.0;
    BiphotonGaussian generator;  // widths the frames were drawn with
    std::uint64_t seed_momentum = 0;
    std::uint64_t seed_position = 0;
};

struct CampaignReport {
    std::vector<Table1Row> rows;
    std::optional<RegressionResult> regression;  // needs >= 3 rows
    std::vector<std::filesystem::path> files;
};

struct CampaignOptions {
    std::filesystem::path out_dir = ".";
    std::optional<std::size_t> frames;  // overrides every scenario
    bool write_images = true;           // PGM panels per run
    bool write_artifacts = false;       // unclipped BPGM per run
    RunOptions run;
    std::function<void(const std::string&)> log;
};

CampaignReport run_table1(std::span<const Scenario> momentum_rows, const CampaignOptions& options);

// Column names: scenario,lc_um,sigma_k_rad_per_mm,sigma_r_um,K_exp,K_exp_err,K_theory
void write_table1_csv(const std::filesystem::path& path, const CampaignReport& report);
// Diagnostics per row: uncertainties, unmasked widths, generator widths, seeds.
void write_table1_diagnostics_csv(const std::filesystem::path& path, const CampaignReport& report);
// Column names: slope,intercept,r_squared,slope_stderr,points
void write_regression_csv(const std::filesystem::path& path, const CampaignReport& report);
// Column names: scenario,inv_lc2_per_mm2,sigma_k2_rad2_per_mm2,fit_sigma_k2_rad2_per_mm2
void write_regression_points_csv(const std::filesystem::path& path, const CampaignReport& report);

struct SweepPoint {
    std::string value;
    Scenario scenario;
    WidthEstimate width;  // σ_k (momentum) or σ_r (position) [SI]
    double generator_width = 0.0;
};

// Runs `base` once per value of `key`. Static-speckle scenarios are not
// swept (they produce a correlation, not a width).
std::vector<SweepPoint> run_sweep(const Config& base, const std::string& key, std::span<const std::string> values,
                                  const CampaignOptions& options);
// Column names: scenario,key,value,mode,width,width_err,generator_width,converged
// (widths in rad/mm for momentum, µm for position)
void write_sweep_csv(const std::filesystem::path& path, const std::string& key, std::span<const SweepPoint> points);

}  // namespace biphoton

#endif  // BIPHOTON_CAMPAIGN_HPP
