#pragma once

// Command-line front end. `run` parses arguments, dispatches to a subcommand
// and maps failures to the exit-code contract:
//   0 ok, 2 bad input, 3 I/O, 4 solver, 5 time integration.

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "starkladder/anticontinuum.hpp"
#include "starkladder/continuation.hpp"
#include "starkladder/dynamics.hpp"
#include "starkladder/error.hpp"
#include "starkladder/lattice.hpp"
#include "starkladder/partitions.hpp"

namespace starkladder::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kInputError = 2, kIoError = 3, kSolverError = 4, kIntegrationError = 5 };

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string subcommand;
    std::optional<double> x, nu, f;
    double beta = 0.0;
    double x_min = 0.0, x_max = 10.0;
    int samples = 1001;
    int max_n = anticontinuum::kDefaultMaxN;
    std::string set;
    int steps = 20;
    double dt = dynamics::kDefaultDt;
    double t_end = 20.0 * dynamics::kBlochPeriod;
    int stride = 0; // 0: choose so that at most kMaxOutputTimes rows per site are written
    int site = 0;
    int margin = kDefaultWindowMargin;
    std::string mode = "independent";
    std::string in;
    std::string out;
    std::string format;
    std::string signs;
    std::optional<std::uint64_t> seed;
};

inline constexpr long long kMaxOutputTimes = 4096;

/// 17 significant digits: exact round trip for doubles.
inline std::string fmt_double(double v)
{
    return fmt::format("{:.17g}", v);
}

/// Write `content` to `path` via a temporary file and rename. Empty or "-" writes to `out`.
inline void write_output(const std::string& path, const std::string& content, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw IoError("cannot open " + tmp.string() + " for writing");
        f << content;
        f.flush();
        if (!f)
            throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move output into place at " + path);
    }
}

inline std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// "0,1,3" -> {0,1,3}; sites are sorted, duplicates rejected.
inline SolutionSet parse_set(const std::string& text)
{
    std::vector<int> sites;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            throw DomainError("invalid site '" + item + "' in --set");
        }
        if (used != item.size())
            throw DomainError("invalid site '" + item + "' in --set");
        sites.push_back(v);
    }
    std::sort(sites.begin(), sites.end());
    return SolutionSet(std::move(sites));
}

/// Signs from --signs: explicit "+-+", or "random" drawn from --seed.
inline SignPattern resolve_signs(const RunConfig& cfg, int n)
{
    if (cfg.signs.empty())
        return SignPattern::all_plus(n);
    if (cfg.signs == "random") {
        if (!cfg.seed)
            throw DomainError("--signs random needs --seed");
        std::mt19937_64 gen(*cfg.seed);
        std::vector<std::int8_t> s;
        for (int k = 0; k < n; ++k)
            s.push_back((gen() >> 63) ? -1 : 1);
        return SignPattern(std::move(s));
    }
    auto s = SignPattern::parse(cfg.signs);
    if (s.size() != n)
        throw DomainError("--signs has " + std::to_string(s.size()) + " entries for "
                          + std::to_string(n) + " sites");
    return s;
}

/// nu and f from any two of (x, nu, f); x alone means nu = x, f = 1.
inline std::pair<double, double> resolve_nu_f(const RunConfig& cfg)
{
    double nu = 0.0, f = 0.0;
    if (cfg.nu && cfg.f) {
        nu = *cfg.nu;
        f = *cfg.f;
        if (cfg.x && std::abs(*cfg.x - nu / f) > 1e-12 * std::abs(*cfg.x))
            throw DomainError("--x is inconsistent with --nu / --f");
    } else if (cfg.x && cfg.nu) {
        nu = *cfg.nu;
        f = nu / *cfg.x;
    } else if (cfg.x && cfg.f) {
        f = *cfg.f;
        nu = *cfg.x * f;
    } else if (cfg.x) {
        nu = *cfg.x;
        f = 1.0;
    } else {
        throw DomainError("give --x, or two of --x/--nu/--f");
    }
    if (!(std::isfinite(nu) && nu > 0.0 && std::isfinite(f) && f > 0.0))
        throw DomainError("nu and f must be finite and > 0");
    return {nu, f};
}

// ---------------------------------------------------------------- count

inline std::string cmd_count(double x, const std::string& format)
{
    using boost::multiprecision::cpp_int;
    const cpp_int f_value = partitions::counting_function<cpp_int>(x);
    const cpp_int branches = f_value + 1;
    std::optional<double> estimate;
    if (x >= 1.0)
        estimate = partitions::f_asymptotic(static_cast<int>(std::ceil(x)));
    if (format == "json") {
        json j;
        j["x"] = x;
        j["F"] = f_value.str();
        j["branches"] = branches.str();
        j["asymptotic_F"] = estimate ? json(*estimate) : json(nullptr);
        return j.dump(2) + "\n";
    }
    std::string text = "F = " + f_value.str() + ", branches = " + branches.str() + "\n";
    if (estimate)
        text += "asymptotic F ~ " + fmt::format("{:.6g}", *estimate) + "\n";
    return text;
}

// ---------------------------------------------------------------- tree

inline std::string cmd_tree(double x_min, double x_max, int samples, int max_n,
                            const std::string& format)
{
    const auto tree = anticontinuum::bifurcation_tree(x_min, x_max, samples, max_n);
    if (format == "json") {
        json j;
        j["x_grid"] = tree.x_grid;
        j["branches"] = json::array();
        for (std::size_t b = 0; b < tree.branches.size(); ++b) {
            const auto& br = tree.branches[b];
            json jb;
            jb["branch_id"] = b;
            jb["set"] = br.set.sites();
            jb["n_modes"] = br.set.size();
            jb["birth_x"] = br.birth;
            jb["x"] = json::array();
            jb["mu_over_f"] = json::array();
            for (const auto& s : br.samples) {
                jb["x"].push_back(s.x);
                jb["mu_over_f"].push_back(s.mu_over_f);
            }
            j["branches"].push_back(std::move(jb));
        }
        return j.dump(2) + "\n";
    }
    // Row order: by x, then branch id.
    std::string csv = "x,branch_id,set,mu_over_f,n_modes,birth_x\n";
    std::vector<std::size_t> cursor(tree.branches.size(), 0);
    for (double x : tree.x_grid) {
        for (std::size_t b = 0; b < tree.branches.size(); ++b) {
            const auto& br = tree.branches[b];
            auto& k = cursor[b];
            if (k < br.samples.size() && br.samples[k].x == x) {
                csv += fmt::format("{},{},{},{},{},{}\n", fmt_double(x), b, br.set.to_string(),
                                   fmt_double(br.samples[k].mu_over_f), br.set.size(),
                                   fmt_double(static_cast<double>(br.birth)));
                ++k;
            }
        }
    }
    return csv;
}

// ---------------------------------------------------------------- state / continue

inline json state_to_json(const StationaryState& state, const SolutionSet& set)
{
    json j;
    j["set"] = set.sites();
    j["signs"] = state.signs.to_string();
    j["nu"] = state.params.nu;
    j["f"] = state.params.f;
    j["x"] = state.params.ratio();
    j["beta"] = state.params.beta;
    j["mu"] = state.mu;
    j["window"] = {state.params.window.lo, state.params.window.hi};
    json coeffs = json::object();
    for (std::size_t i = 0; i < state.coefficients.size(); ++i)
        if (state.coefficients[i] != 0.0)
            coeffs[std::to_string(state.params.window.site(i))] = state.coefficients[i];
    j["coefficients"] = std::move(coeffs);
    j["residual_norm"] = max_norm(dnls_residual(state, state.params));
    return j;
}

/// Inverse of state_to_json for the fields evolve needs. Unlisted sites are zero.
inline StationaryState state_from_json(const json& j)
{
    try {
        StationaryState s;
        s.params.nu = j.at("nu").get<double>();
        s.params.f = j.at("f").get<double>();
        s.params.beta = j.at("beta").get<double>();
        s.params.window = Window{j.at("window").at(0).get<int>(), j.at("window").at(1).get<int>()};
        s.params.validate();
        s.mu = j.at("mu").get<double>();
        s.coefficients.assign(static_cast<std::size_t>(s.params.window.size()), 0.0);
        for (const auto& [key, value] : j.at("coefficients").items()) {
            const int site = std::stoi(key);
            if (!s.params.window.contains(site))
                throw DomainError("coefficient site " + key + " outside window");
            s.coefficients[s.params.window.index(site)] = value.get<double>();
        }
        if (j.contains("signs"))
            s.signs = SignPattern::parse(j.at("signs").get<std::string>());
        return s;
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed state file: ") + e.what());
    }
}

inline json path_to_json(const std::vector<continuation::PathEntry>& path)
{
    json arr = json::array();
    for (const auto& e : path)
        arr.push_back({{"beta", e.beta},
                       {"residual_norm", e.residual_norm},
                       {"iterations", e.iterations},
                       {"mu", e.mu}});
    return arr;
}

inline LatticeParams state_params(const RunConfig& cfg, const SolutionSet& set)
{
    const auto [nu, f] = resolve_nu_f(cfg);
    if (cfg.margin < kMinWindowMargin)
        throw DomainError("window margin must be >= " + std::to_string(kMinWindowMargin));
    return LatticeParams{nu, f, 0.0, default_window(set, cfg.margin)};
}

inline std::string state_csv(const StationaryState& s)
{
    std::string csv = "site,coefficient\n";
    for (std::size_t i = 0; i < s.coefficients.size(); ++i)
        csv += fmt::format("{},{}\n", s.params.window.site(i), fmt_double(s.coefficients[i]));
    return csv;
}

/// Stationary state on --set at --beta (continued from beta = 0 when beta > 0).
inline json cmd_state(const RunConfig& cfg)
{
    const auto set = parse_set(cfg.set);
    const auto params = state_params(cfg, set);
    const auto signs = resolve_signs(cfg, set.size());
    const auto result = continuation::continue_in_beta(set, params, cfg.beta, cfg.steps, signs);
    json j = state_to_json(result.state, set);
    j["certificate"] = result.certificate;
    return j;
}

inline json cmd_continue(const RunConfig& cfg)
{
    const auto set = parse_set(cfg.set);
    const auto params = state_params(cfg, set);
    const auto signs = resolve_signs(cfg, set.size());
    const auto result = continuation::continue_in_beta(set, params, cfg.beta, cfg.steps, signs);
    json j;
    j["converged"] = true;
    j["set"] = set.sites();
    j["beta_target"] = cfg.beta;
    j["beta_prime_target"] = cfg.beta / anticontinuum::energy_of_set(set, params.nu, params.f);
    j["certificate"] = result.certificate;
    j["path"] = path_to_json(result.path);
    j["state"] = state_to_json(result.state, set);
    j["state"]["certificate"] = result.certificate;
    return j;
}

// ---------------------------------------------------------------- evolve

struct EvolveOutput {
    std::string csv;
    json report;
};

inline EvolveOutput cmd_evolve(const RunConfig& cfg)
{
    dynamics::DynamicsTrace trace;
    json report;
    int site = cfg.site;
    std::optional<double> x;
    if (!cfg.in.empty()) {
        const auto state = state_from_json(json::parse(read_file(cfg.in)));
        LatticeParams p = state.params;
        trace = dynamics::evolve(dynamics::to_complex(state.coefficients), p, cfg.t_end, cfg.dt);
        report["source"] = cfg.in;
        x = p.ratio();
    } else {
        const auto [nu, f] = resolve_nu_f(cfg);
        x = nu / f;
        LatticeParams p{nu, f, cfg.beta, Window{site - 1 - cfg.margin, site + 1 + cfg.margin}};
        if (cfg.mode == "independent") {
            trace = dynamics::superposition_trace(*x, site, p, cfg.t_end, cfg.dt);
        } else if (cfg.mode == "joint") {
            trace = dynamics::evolve(dynamics::superposition_state(*x, site, p), p, cfg.t_end,
                                     cfg.dt);
        } else {
            throw DomainError("--mode must be independent or joint");
        }
        report["source"] = "superposition";
        report["mode"] = cfg.mode;
    }
    if (!trace.window.contains(site))
        throw DomainError("--site outside the lattice window");

    report["site"] = site;
    report["x"] = *x;
    report["dt"] = trace.dt();
    report["steps"] = trace.times.size() - 1;
    report["norm_drift"] = trace.norm_drift;
    report["energy_drift"] = trace.energy_drift;
    if (*x > 1.0) {
        const auto p = dynamics::beat_periods(*x);
        const double two_pi = 2.0 * std::numbers::pi;
        report["predicted"] = {{"bloch_period", p.bloch},
                               {"t1", p.t1},
                               {"t2", p.t2},
                               {"omega_bloch", two_pi / p.bloch},
                               {"omega_1", two_pi / p.t1},
                               {"omega_2", two_pi / p.t2}};
    } else {
        report["predicted"] = nullptr;
    }
    if (trace.times.size() >= dynamics::kMinSpectrumSamples) {
        const auto spec = dynamics::spectrum(trace, site);
        report["bin_width"] = spec.bin_width;
        json peaks = json::array();
        for (const auto& pk : spec.peaks)
            peaks.push_back({{"frequency", pk.frequency}, {"power", pk.power}, {"bin", pk.bin}});
        report["peaks"] = std::move(peaks);
    } else {
        report["bin_width"] = nullptr;
        report["peaks"] = nullptr;
    }

    const long long n_times = static_cast<long long>(trace.times.size());
    const long long stride =
        cfg.stride > 0 ? cfg.stride : std::max(1LL, (n_times + kMaxOutputTimes - 1) / kMaxOutputTimes);
    report["stride"] = stride;
    std::string csv = "t_prime,site,abs2\n";
    for (long long t = 0; t < n_times; t += stride)
        for (std::size_t i = 0; i < trace.states[t].size(); ++i)
            csv += fmt::format("{},{},{}\n", fmt_double(trace.times[t]), trace.window.site(i),
                               fmt_double(std::norm(trace.states[t][i])));
    return {std::move(csv), std::move(report)};
}

// ---------------------------------------------------------------- dispatch

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    RunConfig cfg;
    CLI::App app{"Bifurcation trees of Stark-Wannier states in the tilted DNLS", "starkladder"};
    app.require_subcommand(1);

    auto ratio_options = [&](CLI::App* sub) {
        sub->add_option("--x", cfg.x, "ratio nu/f");
        sub->add_option("--nu", cfg.nu, "nonlinearity nu");
        sub->add_option("--f", cfg.f, "tilt f");
    };

    auto* count = app.add_subcommand("count", "branch counting function F(x)");
    count->add_option("--x", cfg.x, "ratio nu/f")->required();
    count->add_option("--format", cfg.format, "text|json");
    count->add_option("--out", cfg.out, "output path (default stdout)");

    auto* tree = app.add_subcommand("tree", "energy branches mu/f over a range of nu/f (CSV)");
    tree->add_option("--x-min", cfg.x_min, "lower end of nu/f range");
    tree->add_option("--x-max", cfg.x_max, "upper end of nu/f range");
    tree->add_option("--samples", cfg.samples, "uniform grid points");
    tree->add_option("--max-n", cfg.max_n, "largest partition size to enumerate");
    tree->add_option("--format", cfg.format, "csv|json");
    tree->add_option("--out", cfg.out, "output path (default stdout)");

    auto* state = app.add_subcommand("state", "stationary state on a solution set (JSON)");
    auto* cont = app.add_subcommand("continue", "continuation in beta with per-step diagnostics");
    for (auto* sub : {state, cont}) {
        sub->add_option("--set", cfg.set, "comma-separated sites, e.g. 0,1,3")->required();
        ratio_options(sub);
        sub->add_option("--beta", cfg.beta, "hopping beta");
        sub->add_option("--steps", cfg.steps, "continuation steps");
        sub->add_option("--signs", cfg.signs, "sign pattern like +-+, or 'random'");
        sub->add_option("--seed", cfg.seed, "seed for --signs random");
        sub->add_option("--margin", cfg.margin, "window margin around the set");
        sub->add_option("--out", cfg.out, "output path (default stdout)");
    }
    state->add_option("--format", cfg.format, "json|csv");

    auto* evolve = app.add_subcommand("evolve", "time evolution and beat spectrum");
    ratio_options(evolve);
    evolve->add_option("--in", cfg.in, "state JSON written by 'state' (else the three-state superposition)");
    evolve->add_option("--beta", cfg.beta, "hopping beta (superposition mode)");
    evolve->add_option("--dt", cfg.dt, "time step in t'");
    evolve->add_option("--t-end", cfg.t_end, "final time in t'");
    evolve->add_option("--site", cfg.site, "well j carrying the superposition / spectrum site");
    evolve->add_option("--mode", cfg.mode, "independent|joint superposition dynamics");
    evolve->add_option("--stride", cfg.stride, "write every k-th time step");
    evolve->add_option("--margin", cfg.margin, "window margin");
    evolve->add_option("--out", cfg.out, "CSV path; spectrum goes to <out>.spectrum.json")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }

    try {
        if (count->parsed()) {
            const std::string fmt = cfg.format.empty() ? "text" : cfg.format;
            if (fmt != "text" && fmt != "json")
                throw DomainError("--format must be text or json");
            write_output(cfg.out, cmd_count(*cfg.x, fmt), out);
        } else if (tree->parsed()) {
            const std::string fmt = cfg.format.empty() ? "csv" : cfg.format;
            if (fmt != "csv" && fmt != "json")
                throw DomainError("--format must be csv or json");
            write_output(cfg.out, cmd_tree(cfg.x_min, cfg.x_max, cfg.samples, cfg.max_n, fmt), out);
        } else if (state->parsed()) {
            const std::string fmt = cfg.format.empty() ? "json" : cfg.format;
            if (fmt != "json" && fmt != "csv")
                throw DomainError("--format must be json or csv");
            const json j = cmd_state(cfg);
            if (fmt == "json") {
                write_output(cfg.out, j.dump(2) + "\n", out);
            } else {
                const auto s = state_from_json(j);
                write_output(cfg.out, state_csv(s), out);
            }
        } else if (cont->parsed()) {
            try {
                write_output(cfg.out, cmd_continue(cfg).dump(2) + "\n", out);
            } catch (const continuation::ContinuationError& e) {
                json j;
                j["converged"] = false;
                j["error"] = e.what();
                j["failure_beta_reached"] = e.last_beta();
                j["path"] = path_to_json(e.path());
                write_output(cfg.out, j.dump(2) + "\n", out);
                throw;
            }
        } else if (evolve->parsed()) {
            if (cfg.out == "-")
                throw DomainError("evolve writes two files; --out must be a path");
            const auto result = cmd_evolve(cfg);
            write_output(cfg.out, result.csv, out);
            write_output(cfg.out + ".spectrum.json", result.report.dump(2) + "\n", out);
        }
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoError;
    } catch (const continuation::ContinuationError& e) {
        err << "solver error: " << e.what() << "\n";
        for (const auto& p : e.path())
            err << "  beta = " << fmt_double(p.beta) << "  residual = " << p.residual_norm
                << "  iterations = " << p.iterations << "\n";
        return kSolverError;
    } catch (const ResonanceError& e) {
        err << "solver error: " << e.what() << "\n";
        return kSolverError;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << "\n";
        return kSolverError;
    } catch (const IntegrationError& e) {
        err << "integration error: " << e.what() << "\n";
        return kIntegrationError;
    } catch (const std::overflow_error& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::domain_error& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::invalid_argument& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    }
    return kOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, out, err);
}

} // namespace starkladder::cli
