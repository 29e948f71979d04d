#include "biphoton/campaign.hpp"

#include "biphoton/errors.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace biphoton {

namespace {

std::ofstream open_csv(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
}

void note(const CampaignOptions& o, const std::string& msg)
{
    if (o.log) {
        o.log(msg);
    }
}

Scenario with_overrides(Scenario s, const CampaignOptions& o)
{
    if (o.frames) {
        s.frames = *o.frames;
    }
    return s;
}

// Momentum run: SUM and XPLUS panels, σ_k from the acceptance-corrected
// SUM spot.
WidthEstimate analyze_momentum(const Scenario& s, const CampaignOptions& o, CampaignReport& report)
{
    note(o, s.name + ": simulating " + std::to_string(s.frames) + " momentum frames");
    const RunResult run = run_scenario(s, o.run);
    const JointDistribution gamma = finalize(run.accumulator);
    const AcceptanceCorrected c = correct_acceptance(gamma, {.path = o.run.path});
    const ProjectionImage& sum = c.sum;
    const WidthEstimate w = estimate_sigma_k(sum);
    if (o.write_images) {
        const auto p1 = o.out_dir / (s.name + "_sum.pgm");
        const auto p2 = o.out_dir / (s.name + "_xplus.pgm");
        write_pgm16(p1, sum.image);
        write_pgm16(p2, project_xplus(gamma, {.path = o.run.path}).image);
        report.files.insert(report.files.end(), {p1, p2});
    }
    if (o.write_artifacts) {
        const auto p = o.out_dir / (s.name + ".bpgm");
        write_gamma(p, gamma, false);
        report.files.push_back(p);
    }
    return w;
}

// Position run: MINUS and XMINUS panels, σ_r from the acceptance-corrected
// MINUS peak.
WidthEstimate analyze_position(const Scenario& s, const CampaignOptions& o, CampaignReport& report)
{
    note(o, s.name + ": simulating " + std::to_string(s.frames) + " position frames");
    const RunResult run = run_scenario(s, o.run);
    const JointDistribution gamma = finalize(run.accumulator);
    const AcceptanceCorrected c = correct_acceptance(gamma, {.path = o.run.path});
    const ProjectionImage& minus = c.minus;
    const WidthEstimate w = estimate_sigma_r(minus, s.beta());
    if (o.write_images) {
        const auto p1 = o.out_dir / (s.name + "_minus.pgm");
        const auto p2 = o.out_dir / (s.name + "_xminus.pgm");
        write_pgm16(p1, minus.image);
        write_pgm16(p2, project_xminus(gamma, {.path = o.run.path}).image);
        report.files.insert(report.files.end(), {p1, p2});
    }
    if (o.write_artifacts) {
        const auto p = o.out_dir / (s.name + ".bpgm");
        write_gamma(p, gamma, false);
        report.files.push_back(p);
    }
    return w;
}

}  // namespace

CampaignReport run_table1(std::span<const Scenario> momentum_rows, const CampaignOptions& options)
{
    std::filesystem::create_directories(options.out_dir);
    CampaignReport report;
    // Scenarios run one after another; each uses every thread internally,
    // which keeps peak memory at one accumulator.
    for (const Scenario& row_in : momentum_rows) {
        if (row_in.mode != ScenarioMode::momentum) {
            throw ConfigError(row_in.name + ": Table 1 rows must be momentum-mode scenarios");
        }
        const Scenario mom = with_overrides(row_in, options);
        const Scenario pos = with_overrides(position_twin(row_in), options);
        Table1Row row;
        row.scenario = mom.name;
        row.lc = mom.pump.coherence_length;
        row.generator = mom.model();
        row.seed_momentum = mom.seed;
        row.seed_position = pos.seed;
        row.sigma_k = analyze_momentum(mom, options, report);
        row.sigma_r = analyze_position(pos, options, report);
        if (row.sigma_k.fit.converged && row.sigma_r.fit.converged) {
            row.k_exp = schmidt_from_widths(row.sigma_r.value, row.sigma_k.value, row.sigma_r.uncertainty,
                                            row.sigma_k.uncertainty);
        }
        else {
            row.k_exp = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        }
        row.k_theory = schmidt_theory(mom.crystal, mom.pump);
        report.rows.push_back(row);
    }
    std::vector<RegressionPoint> points;
    for (const auto& r : report.rows) {
        if (r.sigma_k.fit.converged) {
            const double k_mm = r.sigma_k.value * 1e-3;
            points.push_back({r.lc.inverse_square() * 1e-6, k_mm * k_mm});
        }
    }
    if (points.size() >= 3) {
        report.regression = regress_sigma_k2_vs_inv_lc2(points);
    }
    return report;
}

namespace {

std::string lc_text(CoherenceLength lc)
{
    if (lc.is_infinite()) {
        return "inf";
    }
    std::ostringstream s;
    s << std::setprecision(10) << lc.value() * 1e6;
    return s.str();
}

}  // namespace

void write_table1_csv(const std::filesystem::path& path, const CampaignReport& report)
{
    auto out = open_csv(path);
    out << "scenario,lc_um,sigma_k_rad_per_mm,sigma_r_um,K_exp,K_exp_err,K_theory\n";
    for (const auto& r : report.rows) {
        out << r.scenario << ',' << lc_text(r.lc) << ',' << r.sigma_k.value * 1e-3 << ',' << r.sigma_r.value * 1e6
            << ',' << r.k_exp.k_value << ',' << r.k_exp.k_uncertainty << ',' << r.k_theory << '\n';
    }
}

void write_table1_diagnostics_csv(const std::filesystem::path& path, const CampaignReport& report)
{
    auto out = open_csv(path);
    out << "scenario,lc_um,sigma_k_rad_per_mm,sigma_k_err,sigma_k_unmasked,sigma_k_generator,sigma_k_converged,"
           "sigma_r_um,sigma_r_err,sigma_r_generator,sigma_r_converged,seed_momentum,seed_position\n";
    for (const auto& r : report.rows) {
        out << r.scenario << ',' << lc_text(r.lc) << ',' << r.sigma_k.value * 1e-3 << ','
            << r.sigma_k.uncertainty * 1e-3 << ',' << r.sigma_k.unmasked_fit.width_sigma * 1e-3 << ','
            << r.generator.sigma_k * 1e-3 << ',' << r.sigma_k.fit.converged << ',' << r.sigma_r.value * 1e6 << ','
            << r.sigma_r.uncertainty * 1e6 << ',' << r.generator.sigma_r * 1e6 << ',' << r.sigma_r.fit.converged
            << ',' << r.seed_momentum << ',' << r.seed_position << '\n';
    }
}

void write_regression_csv(const std::filesystem::path& path, const CampaignReport& report)
{
    auto out = open_csv(path);
    out << "slope,intercept,r_squared,slope_stderr,points\n";
    if (report.regression) {
        const auto& g = *report.regression;
        std::size_t n = 0;
        for (const auto& r : report.rows) {
            n += r.sigma_k.fit.converged ? 1 : 0;
        }
        out << g.slope << ',' << g.intercept << ',' << g.r_squared << ',' << g.slope_stderr << ',' << n << '\n';
    }
}

void write_regression_points_csv(const std::filesystem::path& path, const CampaignReport& report)
{
    auto out = open_csv(path);
    out << "scenario,inv_lc2_per_mm2,sigma_k2_rad2_per_mm2,fit_sigma_k2_rad2_per_mm2\n";
    for (const auto& r : report.rows) {
        if (!r.sigma_k.fit.converged) {
            continue;
        }
        const double x = r.lc.inverse_square() * 1e-6;
        const double k_mm = r.sigma_k.value * 1e-3;
        out << r.scenario << ',' << x << ',' << k_mm * k_mm << ',';
        if (report.regression) {
            out << report.regression->intercept + report.regression->slope * x;
        }
        out << '\n';
    }
}

std::vector<SweepPoint> run_sweep(const Config& base, const std::string& key, std::span<const std::string> values,
                                  const CampaignOptions& options)
{
    if (std::find(scenario_keys().begin(), scenario_keys().end(), key) == scenario_keys().end()) {
        throw ConfigError("sweep: unknown key '" + key + "'");
    }
    if (values.empty()) {
        throw ConfigError("sweep: no values given");
    }
    std::filesystem::create_directories(options.out_dir);
    std::vector<SweepPoint> points;
    for (std::size_t i = 0; i < values.size(); ++i) {
        Config cfg = base;
        cfg.set(key, values[i]);
        Scenario s = with_overrides(scenario_from_config(cfg), options);
        s.name += "_" + std::to_string(i + 1);
        if (s.mode == ScenarioMode::static_speckle) {
            throw ConfigError("sweep: static_speckle scenarios are not supported");
        }
        CampaignReport scratch;
        SweepPoint p{values[i], s, {}, 0.0};
        if (s.mode == ScenarioMode::momentum) {
            p.width = analyze_momentum(s, options, scratch);
            p.generator_width = s.model().sigma_k;
        }
        else {
            p.width = analyze_position(s, options, scratch);
            p.generator_width = s.model().sigma_r;
        }
        points.push_back(std::move(p));
    }
    return points;
}

void write_sweep_csv(const std::filesystem::path& path, const std::string& key, std::span<const SweepPoint> points)
{
    auto out = open_csv(path);
    out << "scenario,key,value,mode,width,width_err,generator_width,converged\n";
    for (const auto& p : points) {
        const double scale = p.scenario.mode == ScenarioMode::position ? 1e6 : 1e-3;
        out << p.scenario.name << ',' << key << ',' << p.value << ',' << to_string(p.scenario.mode) << ','
            << p.width.value * scale << ',' << p.width.uncertainty * scale << ',' << p.generator_width * scale
            << ',' << p.width.fit.converged << '\n';
    }
}

}  // namespace biphoton
