#include "biphoton/cli.hpp"

#include "biphoton/analysis.hpp"
#include "biphoton/campaign.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/frame_stack.hpp"
#include "biphoton/pipeline.hpp"
#include "biphoton/reconstruction.hpp"
#include "biphoton/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace biphoton::cli {

namespace {

constexpr const char* kColumnHelp = R"(Output columns:
  table1.csv       scenario,lc_um,sigma_k_rad_per_mm,sigma_r_um,K_exp,K_exp_err,K_theory
  table1_diagnostics.csv
                   scenario,lc_um,sigma_k_rad_per_mm,sigma_k_err,sigma_k_unmasked,
                   sigma_k_generator,sigma_k_converged,sigma_r_um,sigma_r_err,
                   sigma_r_generator,sigma_r_converged,seed_momentum,seed_position
  regression.csv   slope,intercept,r_squared,slope_stderr,points
                   (sigma_k^2 in rad^2/mm^2 against 1/lc^2 in 1/mm^2)
  regression_points.csv
                   scenario,inv_lc2_per_mm2,sigma_k2_rad2_per_mm2,fit_sigma_k2_rad2_per_mm2
  sweep.csv        scenario,key,value,mode,width,width_err,generator_width,converged
                   (widths in rad/mm for momentum, um for position)
  projection csv   ix,iy,x,y,value,valid,diagonal_affected after a '# kind=...' line
  analyze          same columns as table1.csv; blank where an input is missing
Exit codes: 0 ok, 2 config error, 3 file format error, 4 mode mismatch,
  5 fit did not converge (with --strict), 1 anything else.)";

struct NotConverged : Error {
    using Error::Error;
};

struct Globals {
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool reproducible = false;
    std::string out;
    bool strict = false;

    Reduction reduction() const { return reproducible ? Reduction::fixed_tree : Reduction::thread_local_; }
    std::string out_or(const std::string& fallback) const { return out.empty() ? fallback : out; }
};

void require_converged(const Globals& g, const FitResult& fit, const std::string& what, std::ostream& err)
{
    if (fit.converged) {
        return;
    }
    const std::string msg = what + ": fit did not converge" + (fit.note.empty() ? "" : " (" + fit.note + ")");
    if (g.strict) {
        throw NotConverged(msg);
    }
    err << "warning: " << msg << '\n';
}

std::string fmt(double v)
{
    if (!std::isfinite(v)) {
        return std::isnan(v) ? "nan" : "inf";
    }
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

nlohmann::ordered_json manifest(const Scenario& s, const RunResult& run, const std::string& stack)
{
    nlohmann::ordered_json params;
    const Config resolved = Config::parse(scenario_to_config(s));
    for (const auto& key : resolved.keys()) {
        params[key] = *resolved.text(key);
    }
    const BiphotonGaussian m = s.model();
    nlohmann::ordered_json j;
    j["stack"] = stack;
    j["format"] = "BPFS";
    j["mode"] = std::string(to_string(s.mode));
    j["frames"] = run.accumulator.frame_count();
    j["seed"] = s.seed;
    j["parameters"] = params;
    j["generator"] = {{"sigma_r_um", m.sigma_r * 1e6}, {"sigma_k_rad_per_mm", m.sigma_k * 1e-3}};
    j["photons"] = {{"pairs", run.stats.pairs},
                    {"deposited", run.stats.deposited},
                    {"off_sensor", run.stats.off_sensor},
                    {"undetected", run.stats.undetected}};
    return j;
}

int cmd_simulate(const Globals& g, const std::string& config, std::optional<std::size_t> frames, std::ostream& out)
{
    Scenario s = load_scenario(config);
    if (g.seed) {
        s.seed = *g.seed;
    }
    if (frames) {
        s.frames = *frames;
    }
    const std::string stack = g.out_or(s.name + ".bpfs");
    RunOptions opt;
    opt.reduction = g.reduction();
    opt.stack_path = stack;
    const RunResult run = run_scenario(s, opt);
    {
        std::ofstream m(stack + ".json");
        if (!m) {
            throw FormatError("cannot write " + stack + ".json");
        }
        m << manifest(s, run, stack).dump(2) << '\n';
    }
    if (run.pump_farfield) {
        write_pgm16(stack + ".pump.pgm", *run.pump_farfield);
    }
    out << "wrote " << stack << " (" << s.frames << " frames, " << run.stats.deposited << " photons deposited, "
        << run.stats.dropped() << " dropped)\n";
    return kOk;
}

int cmd_reconstruct(const Globals& g, const std::string& input, bool raw, std::size_t batch, std::ostream& out)
{
    const GammaAccumulator acc = accumulate_stack_file(input, batch);
    const JointDistribution gamma = finalize(acc);
    const std::string path = g.out_or("gamma.bpgm");
    write_gamma(path, gamma, !raw);
    out << "wrote " << path << " (" << acc.spec().width << "x" << acc.spec().height << ", " << acc.frame_count()
        << " frames, " << (raw ? "unclipped" : "clipped") << ")\n";
    return kOk;
}

int cmd_project(const Globals& g, const std::string& input, const std::string& kind_text, bool include_diagonal,
                bool clip, bool acceptance, const std::string& pgm, std::ostream& out)
{
    const auto kind = parse_projection_kind(kind_text);
    if (!kind) {
        throw ConfigError("unknown projection kind '" + kind_text + "' (sum, minus, xplus, xminus)");
    }
    const JointDistribution gamma = read_gamma(input);
    const ProjectionOptions po{.include_diagonal = include_diagonal, .clip_negative = clip};
    ProjectionImage p;
    if (acceptance) {
        if (*kind != ProjectionKind::sum && *kind != ProjectionKind::minus) {
            throw ConfigError("--acceptance applies to sum and minus only");
        }
        AcceptanceCorrected c = correct_acceptance(gamma, po);
        p = std::move(*kind == ProjectionKind::sum ? c.sum : c.minus);
    }
    else {
        p = project(gamma, *kind, po);
    }
    const std::string path = g.out_or(std::string(to_string(*kind)) + ".csv");
    write_projection_csv(path, p);
    if (!pgm.empty()) {
        write_pgm16(pgm, p.image);
    }
    out << "wrote " << path << '\n';
    return kOk;
}

int cmd_analyze(const Globals& g, const std::vector<std::string>& inputs, const std::string& config, double alpha,
                std::ostream& out, std::ostream& err)
{
    std::optional<Scenario> s;
    if (!config.empty()) {
        s = load_scenario(config);
        alpha = s->crystal.alpha;
    }
    std::optional<WidthEstimate> sk, sr;
    for (const auto& path : inputs) {
        const ProjectionImage p = read_projection_csv(path);
        if (p.kind == ProjectionKind::sum) {
            sk = estimate_sigma_k(p);
            require_converged(g, sk->fit, path, err);
        }
        else if (p.kind == ProjectionKind::minus) {
            sr = estimate_sigma_r(p, Beta::from_alpha(alpha));
            require_converged(g, sr->fit, path, err);
        }
        else {
            throw ModeMismatchError(path + ": analyze takes SUM or MINUS projections, got " +
                                    std::string(to_string(p.kind)));
        }
    }
    std::ostringstream row;
    row << (s ? s->name : std::string("projection")) << ',';
    if (s) {
        row << (s->pump.coherence_length.is_infinite() ? "inf" : fmt(s->pump.coherence_length.value() * 1e6));
    }
    row << ',' << (sk ? fmt(sk->value * 1e-3) : "") << ',' << (sr ? fmt(sr->value * 1e6) : "") << ',';
    if (sk && sr && sk->fit.converged && sr->fit.converged) {
        const SchmidtEstimate k = schmidt_from_widths(sr->value, sk->value, sr->uncertainty, sk->uncertainty);
        row << fmt(k.k_value) << ',' << fmt(k.k_uncertainty);
    }
    else {
        row << ',';
    }
    row << ',' << (s ? fmt(schmidt_theory(s->crystal, s->pump)) : "") << '\n';

    const std::string header = "scenario,lc_um,sigma_k_rad_per_mm,sigma_r_um,K_exp,K_exp_err,K_theory\n";
    if (g.out.empty()) {
        out << header << row.str();
    }
    else {
        std::ofstream f(g.out);
        if (!f) {
            throw FormatError("cannot open " + g.out + " for writing");
        }
        f << header << row.str();
    }
    return kOk;
}

CampaignOptions campaign_options(const Globals& g, std::optional<std::size_t> frames, std::ostream& err)
{
    CampaignOptions o;
    o.frames = frames;
    o.run.reduction = g.reduction();
    o.log = [&err](const std::string& m) { err << m << '\n'; };
    return o;
}

int cmd_table1(const Globals& g, std::optional<std::size_t> frames, bool artifacts, bool no_images,
               const std::vector<std::string>& configs, std::ostream& out, std::ostream& err)
{
    std::vector<Scenario> rows;
    if (configs.empty()) {
        rows = table1_scenarios();
    }
    else {
        for (const auto& c : configs) {
            rows.push_back(load_scenario(c));
        }
    }
    if (g.seed) {
        // Row i gets seed + 1000·i, its position twin one more.
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i].seed = *g.seed + 1000 * i;
        }
    }
    CampaignOptions o = campaign_options(g, frames, err);
    o.out_dir = g.out_or("table1_out");
    o.write_artifacts = artifacts;
    o.write_images = !no_images;
    CampaignReport report = run_table1(rows, o);
    for (const auto& r : report.rows) {
        require_converged(g, r.sigma_k.fit, r.scenario + " sigma_k", err);
        require_converged(g, r.sigma_r.fit, r.scenario + " sigma_r", err);
    }
    const std::filesystem::path dir = o.out_dir;
    write_table1_csv(dir / "table1.csv", report);
    write_table1_diagnostics_csv(dir / "table1_diagnostics.csv", report);
    write_regression_csv(dir / "regression.csv", report);
    write_regression_points_csv(dir / "regression_points.csv", report);

    out << std::left << std::setw(14) << "scenario" << std::setw(8) << "lc_um" << std::setw(12) << "sigma_k"
        << std::setw(10) << "sigma_r" << std::setw(18) << "K_exp" << "K_theory\n";
    for (const auto& r : report.rows) {
        out << std::setw(14) << r.scenario << std::setw(8)
            << (r.lc.is_infinite() ? std::string("inf") : fmt(r.lc.value() * 1e6)) << std::setw(12)
            << fmt(r.sigma_k.value * 1e-3) << std::setw(10) << fmt(r.sigma_r.value * 1e6) << std::setw(18)
            << (fmt(r.k_exp.k_value) + " +- " + fmt(r.k_exp.k_uncertainty)) << fmt(r.k_theory) << '\n';
    }
    if (report.regression) {
        out << "regression: slope " << fmt(report.regression->slope) << " +- "
            << fmt(report.regression->slope_stderr) << ", r^2 " << fmt(report.regression->r_squared) << '\n';
    }
    out << "outputs in " << dir.string() << '\n';
    return kOk;
}

std::vector<std::string> split_values(const std::string& text)
{
    std::vector<std::string> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto a = item.find_first_not_of(" \t");
        const auto b = item.find_last_not_of(" \t");
        if (a != std::string::npos) {
            v.push_back(item.substr(a, b - a + 1));
        }
    }
    return v;
}

int cmd_sweep(const Globals& g, const std::string& config, const std::string& key, const std::string& values,
              std::optional<std::size_t> frames, std::ostream& out, std::ostream& err)
{
    Config base = Config::load(config);
    if (g.seed) {
        base.set("seed", std::to_string(*g.seed));
    }
    CampaignOptions o = campaign_options(g, frames, err);
    o.out_dir = g.out_or("sweep_out");
    const auto vals = split_values(values);
    const auto points = run_sweep(base, key, vals, o);
    for (const auto& p : points) {
        require_converged(g, p.width.fit, p.scenario.name, err);
    }
    const auto path = std::filesystem::path(o.out_dir) / "sweep.csv";
    write_sweep_csv(path, key, points);
    out << "wrote " << path.string() << '\n';
    return kOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Biphoton entanglement simulator: EMCCD frames, covariance reconstruction, widths and Schmidt numbers",
                 "biphoton"};
    app.footer(kColumnHelp);
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Override the scenario seed");
    app.add_option("--threads", g.threads, "OpenMP threads (default: runtime choice)")->check(CLI::NonNegativeNumber);
    app.add_flag("--reproducible", g.reproducible, "Fixed-order reductions everywhere (bitwise reproducible)");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_flag("--strict", g.strict, "Exit 5 when a fit does not converge");

    std::string config;
    std::optional<std::size_t> frames;

    auto* sim = app.add_subcommand("simulate", "Simulate a scenario into a BPFS frame stack plus JSON manifest");
    sim->add_option("config", config, "Scenario config file")->required();
    sim->add_option("--frames", frames, "Override the frame count");

    std::string input;
    bool raw = false;
    std::size_t batch = 256;
    auto* rec = app.add_subcommand("reconstruct", "Covariance reconstruction of a BPFS stack into BPGM");
    rec->add_option("stack", input, "BPFS file")->required();
    rec->add_flag("--raw", raw, "Keep negative covariance entries");
    rec->add_option("--batch", batch, "Frames per accumulation batch")->check(CLI::PositiveNumber);

    std::string kind;
    bool include_diagonal = false;
    bool clip = false;
    bool acceptance = false;
    std::string pgm;
    auto* proj = app.add_subcommand("project", "Project a BPGM into SUM, MINUS, XPLUS or XMINUS (CSV)");
    proj->add_option("gamma", input, "BPGM file")->required();
    proj->add_option("--kind", kind, "sum | minus | xplus | xminus")->required();
    proj->add_flag("--include-diagonal", include_diagonal, "Include same-pixel entries");
    proj->add_flag("--clip", clip, "Clip negative entries before projecting");
    proj->add_flag("--acceptance", acceptance, "Divide out the finite-sensor pair acceptance (sum, minus)");
    proj->add_option("--pgm", pgm, "Also write a 16-bit PGM image");

    std::vector<std::string> inputs;
    double alpha = kDefaultAlpha;
    auto* ana = app.add_subcommand("analyze", "Fit SUM (sigma_k) and/or MINUS (sigma_r) projection CSVs");
    ana->add_option("projections", inputs, "Projection CSV files")->required()->expected(1, 2);
    ana->add_option("--config", config, "Scenario config (name, lc and K_theory columns; alpha)");
    ana->add_option("--alpha", alpha, "Crystal alpha for the sqrt(beta) correction");

    bool artifacts = false;
    bool no_images = false;
    std::vector<std::string> configs;
    auto* t1 = app.add_subcommand("table1", "Coherent + three diffuser settings, momentum and position runs each");
    t1->add_option("--frames", frames, "Override the frame count of every run");
    t1->add_flag("--artifacts", artifacts, "Write unclipped BPGM files for every run");
    t1->add_flag("--no-images", no_images, "Skip PGM panels");
    t1->add_option("--config", configs, "Momentum scenario configs to use instead of the built-in rows");

    std::string key, values;
    auto* sw = app.add_subcommand("sweep", "Run a scenario once per value of one config key");
    sw->add_option("config", config, "Base scenario config")->required();
    sw->add_option("--key", key, "Config key to vary")->required();
    sw->add_option("--values", values, "Comma-separated values")->required();
    sw->add_option("--frames", frames, "Override the frame count");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    if (g.threads > 0) {
        omp_set_num_threads(g.threads);
    }
    try {
        if (*sim) {
            return cmd_simulate(g, config, frames, out);
        }
        if (*rec) {
            return cmd_reconstruct(g, input, raw, batch, out);
        }
        if (*proj) {
            return cmd_project(g, input, kind, include_diagonal, clip, acceptance, pgm, out);
        }
        if (*ana) {
            return cmd_analyze(g, inputs, config, alpha, out, err);
        }
        if (*t1) {
            return cmd_table1(g, frames, artifacts, no_images, configs, out, err);
        }
        if (*sw) {
            return cmd_sweep(g, config, key, values, frames, out, err);
        }
    }
    catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kFormatError;
    }
    catch (const ModeMismatchError& e) {
        err << "mode mismatch: " << e.what() << '\n';
        return kModeMismatch;
    }
    catch (const NotConverged& e) {
        err << "error: " << e.what() << '\n';
        return kNotConverged;
    }
    catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace biphoton::cli
