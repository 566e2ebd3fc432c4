#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "kelly/admissibility.hpp"
#include "kelly/errors.hpp"
#include "kelly/exact_solver.hpp"
#include "kelly/kelly_solver.hpp"
#include "kelly/simulator.hpp"
#include "portfolio_spec.hpp"

namespace kelly::cli {

namespace {

struct CommonOptions {
    std::string spec;
    std::string out;
    std::uint64_t seed = 0;
    bool verbose = false;
};

void add_common(CLI::App& cmd, CommonOptions& opt, bool spec_required = true) {
    auto* s = cmd.add_option("--spec", opt.spec, "portfolio spec (JSON)");
    if (spec_required) s->required();
    cmd.add_option("--out", opt.out, "write the report to this file instead of stdout");
    cmd.add_option("--seed", opt.seed, "random seed");
    cmd.add_flag("--verbose", opt.verbose, "more detail");
}

std::string flag_list(const FlagSet<AllocationFlag>& flags) {
    std::vector<std::string> names;
    for (auto f : {AllocationFlag::SingularSystem, AllocationFlag::FractionExceedsOne, AllocationFlag::TotalExceedsOne,
                   AllocationFlag::NegativeFraction, AllocationFlag::TaylorRegimeWarning})
        if (flags.has(f)) names.emplace_back(to_string(f));
    return names.empty() ? "none" : fmt::format("{}", fmt::join(names, ","));
}

std::string flag_list(const FlagSet<ExactFlag>& flags) {
    std::vector<std::string> names;
    for (auto f : {ExactFlag::NoEdge, ExactFlag::AtBoundary})
        if (flags.has(f)) names.emplace_back(to_string(f));
    return names.empty() ? "none" : fmt::format("{}", fmt::join(names, ","));
}

std::size_t name_width(const std::vector<std::string>& names, std::size_t at_least) {
    std::size_t w = at_least;
    for (const auto& n : names) w = std::max(w, n.size());
    return w + 2;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v))
            throw ValidationError(fmt::format("{}: '{}' is not a finite number", what, cell));
        values.push_back(v);
    }
    if (values.empty()) throw ValidationError(fmt::format("{}: empty list", what));
    return values;
}

bool exact_supported(const PortfolioModel& p) {
    if (std::holds_alternative<EmpiricalSamples>(p.dependence)) return false;
    if (p.size() > static_cast<std::size_t>(max_exact_dimension)) return false;
    return std::all_of(p.assets.begin(), p.assets.end(), [](const AssetModel& a) { return a.family == Family::LogNormal; });
}

ExactMultiResult solve_exact(const PortfolioModel& p) {
    if (p.size() == 1) {
        const auto s = solve_exact_single(p.assets[0]);
        ExactMultiResult r;
        r.f = Eigen::VectorXd::Constant(1, s.f);
        r.residual_norm = std::abs(s.residual);
        r.iterations = s.iterations;
        r.flags = s.flags;
        return r;
    }
    return solve_exact_multi(p);
}

// ---- solve -------------------------------------------------------------

void cmd_solve(const CommonOptions& opt, std::ostream& out) {
    const auto spec = load_spec(opt.spec);
    const auto result = allocate(spec.model);
    const auto w = name_width(spec.names, 5);
    out << fmt::format("{:<{}}{}\n", "asset", w, "fraction");
    for (std::size_t l = 0; l < spec.names.size(); ++l)
        out << fmt::format("{:<{}}{}\n", spec.names[l], w, format_value(result.f[static_cast<Eigen::Index>(l)]));
    out << fmt::format("{:<{}}{}\n", "total", w, format_value(result.total));
    out << fmt::format("{:<{}}{}\n", "flags", w, flag_list(result.flags));
    if (opt.verbose) {
        const auto system = std::holds_alternative<EmpiricalSamples>(spec.model.dependence)
                                ? build_system(sample_moments(std::get<EmpiricalSamples>(spec.model.dependence).samples,
                                                              spec.model.initial_prices()))
                                : build_system(analytic_moments(spec.model));
        out << "\nM\n";
        for (Eigen::Index i = 0; i < system.M.rows(); ++i) {
            std::vector<std::string> row;
            for (Eigen::Index j = 0; j < system.M.cols(); ++j) row.push_back(format_value(system.M(i, j)));
            out << fmt::format("  {}\n", fmt::join(row, "  "));
        }
        out << "b\n";
        for (Eigen::Index i = 0; i < system.b.size(); ++i) out << fmt::format("  {}\n", format_value(system.b[i]));
    }
}

// ---- exact -------------------------------------------------------------

void cmd_exact(const CommonOptions& opt, std::ostream& out) {
    const auto spec = load_spec(opt.spec);
    const auto exact = solve_exact(spec.model);
    const auto linear = allocate(spec.model);
    const auto w = name_width(spec.names, 13);
    out << fmt::format("{:<{}}{:<18}{:<18}{}\n", "asset", w, "exact", "linear", "rel_diff");
    for (std::size_t l = 0; l < spec.names.size(); ++l) {
        const auto i = static_cast<Eigen::Index>(l);
        const double e = exact.f[i];
        const double g = linear.f[i];
        const std::string rel = e != 0.0 ? format_value((g - e) / std::abs(e)) : "n/a";
        out << fmt::format("{:<{}}{:<18}{:<18}{}\n", spec.names[l], w, format_value(e), format_value(g), rel);
    }
    out << fmt::format("{:<{}}{:<18}{}\n", "total", w, format_value(exact.f.sum()), format_value(linear.total));
    out << fmt::format("{:<{}}{}\n", "residual_norm", w, fmt::format("{:.3e}", exact.residual_norm));
    out << fmt::format("{:<{}}{}\n", "iterations", w, exact.iterations);
    out << fmt::format("{:<{}}{}\n", "exact_flags", w, flag_list(exact.flags));
    out << fmt::format("{:<{}}{}\n", "linear_flags", w, flag_list(linear.flags));
    if (opt.verbose) {
        const auto r = spec.model.size() == 1 ? residual_single(exact.f[0], spec.model.assets[0])
                                              : residual_multi(exact.f, spec.model);
        out << "\nresidual components\n";
        for (std::size_t l = 0; l < spec.names.size(); ++l)
            out << fmt::format("  {:<{}}{:.3e} (quadrature error {:.1e})\n", spec.names[l], w,
                               r.value[static_cast<Eigen::Index>(l)],
                               r.quadrature_error[static_cast<Eigen::Index>(l)]);
    }
}

// ---- simulate ----------------------------------------------------------

struct SimulateOptions {
    std::string f;
    std::size_t rounds = 1000;
    std::size_t replications = 200;
    bool verify = false;
    double delta = 0.1;
};

void cmd_simulate(const CommonOptions& opt, const SimulateOptions& sim, std::ostream& out) {
    const auto spec = load_spec(opt.spec);
    const auto& model = spec.model;
    Eigen::VectorXd f;
    std::string source;
    if (!sim.f.empty()) {
        const auto values = parse_list(sim.f, "--f");
        if (values.size() != model.size())
            throw ValidationError(fmt::format("--f has {} entries for {} assets", values.size(), model.size()));
        f = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
        source = "given";
    } else if (exact_supported(model)) {
        f = solve_exact(model).f;
        source = "exact solve";
    } else {
        f = allocate(model).f;
        source = "linear solve";
    }

    SimConfig config;
    config.rounds = sim.rounds;
    config.replications = sim.replications;
    config.seed = opt.seed;
    config.f = f;
    const auto g = growth_rate_mc(model, config);

    const auto w = name_width(spec.names, 13);
    out << fmt::format("fractions ({})\n", source);
    for (std::size_t l = 0; l < spec.names.size(); ++l)
        out << fmt::format("  {:<{}}{}\n", spec.names[l], w - 2, format_value(f[static_cast<Eigen::Index>(l)]));
    out << fmt::format("{:<{}}{}\n", "rounds", w, sim.rounds);
    out << fmt::format("{:<{}}{}\n", "replications", w, sim.replications);
    out << fmt::format("{:<{}}{}\n", "seed", w, opt.seed);
    out << fmt::format("{:<{}}{} +/- {}\n", "g", w, format_value(g.g_mean), format_value(g.g_stderr));

    if (!sim.verify) return;
    if (!(sim.delta > 0.0)) throw ValidationError("--delta must be positive");
    out << fmt::format("\nverify (delta {}, paired differences g(f) - g(f'))\n", format_value(sim.delta));
    bool all_beyond = true;
    std::size_t evaluated = 0;
    for (std::size_t l = 0; l < model.size(); ++l) {
        for (const double sign : {-1.0, 1.0}) {
            Eigen::VectorXd other = f;
            other[static_cast<Eigen::Index>(l)] += sign * sim.delta;
            const std::string label = fmt::format("{}{}{}", spec.names[l], sign < 0 ? '-' : '+', format_value(sim.delta));
            if (!is_admissible(other, model)) {
                out << fmt::format("  {:<{}}skipped (inadmissible)\n", label, w);
                continue;
            }
            const auto d = growth_difference_mc(model, f, other, config);
            const bool beyond = d.mean > 2.0 * d.std_error;
            all_beyond = all_beyond && beyond;
            ++evaluated;
            out << fmt::format("  {:<{}}{} +/- {}  {}\n", label, w, format_value(d.mean), format_value(d.std_error),
                               beyond ? "beyond 2 se" : "within 2 se");
        }
    }
    out << fmt::format("local maximum: {}\n", evaluated > 0 && all_beyond ? "yes" : "no");
}

// ---- sweep -------------------------------------------------------------

struct SweepOptions {
    double start = 0.0;
    double stop = 0.0;
    std::size_t steps = 0;
    std::string methods = "closed,conventional,gaussian,linear";
    bool link_sigma = false;
    std::vector<std::string> links;
    std::string rho;
};

enum class Method { Closed, Conventional, Gaussian, Linear, Exact };

Method parse_method(const std::string& name) {
    static const std::map<std::string, Method> table{{"closed", Method::Closed},
                                                     {"conventional", Method::Conventional},
                                                     {"gaussian", Method::Gaussian},
                                                     {"linear", Method::Linear},
                                                     {"exact", Method::Exact}};
    const auto it = table.find(name);
    if (it == table.end())
        throw ValidationError(
            fmt::format("--methods: unknown method '{}' (closed, conventional, gaussian, linear, exact)", name));
    return it->second;
}

// Fractions for every asset under one method, or nullopt when the point
// cannot be solved.
std::optional<Eigen::VectorXd> sweep_cell(Method method, const PortfolioModel& p, std::string& why) {
    try {
        Eigen::VectorXd f(static_cast<Eigen::Index>(p.size()));
        switch (method) {
            case Method::Closed:
            case Method::Conventional:
            case Method::Gaussian:
                for (std::size_t l = 0; l < p.size(); ++l) {
                    const auto& a = p.assets[l];
                    f[static_cast<Eigen::Index>(l)] = method == Method::Closed ? kelly_single_lognormal(a.mu, a.sigma)
                                                      : method == Method::Conventional
                                                          ? kelly_single_conventional(a.mu, a.sigma)
                                                          : kelly_single_gaussian(a.mu, a.sigma);
                }
                return f;
            case Method::Linear:
                return allocate(p).f;
            case Method::Exact:
                return solve_exact(p).f;
        }
    } catch (const Error& e) {
        why = e.what();
    }
    return std::nullopt;
}

void cmd_sweep(const CommonOptions& opt, const SweepOptions& sw, std::ostream& out, std::ostream& err) {
    auto spec = load_spec(opt.spec);
    if (std::holds_alternative<EmpiricalSamples>(spec.model.dependence))
        throw UnsupportedError("sweep needs a parametric model, not empirical samples");
    if (sw.steps < 2) throw ValidationError(fmt::format("--steps must be at least 2, got {}", sw.steps));
    if (!std::isfinite(sw.start) || !std::isfinite(sw.stop)) throw ValidationError("--start/--stop must be finite");

    std::vector<std::pair<std::string, Method>> methods;
    {
        std::stringstream ss(sw.methods);
        std::string name;
        while (std::getline(ss, name, ',')) methods.emplace_back(name, parse_method(name));
        if (methods.empty()) throw ValidationError("--methods: empty list");
    }

    // mu_l = coefficient * mu1 for linked assets.
    std::vector<std::optional<double>> link(spec.model.size());
    if (sw.link_sigma)
        for (std::size_t l = 1; l < spec.model.size(); ++l) link[l] = spec.model.assets[l].sigma;
    for (const auto& text : sw.links) {
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ValidationError(fmt::format("--link: expected NAME=COEF, got '{}'", text));
        const auto name = text.substr(0, eq);
        const auto it = std::find(spec.names.begin(), spec.names.end(), name);
        if (it == spec.names.end()) throw ValidationError(fmt::format("--link: unknown asset '{}'", name));
        const auto index = static_cast<std::size_t>(it - spec.names.begin());
        if (index == 0) throw ValidationError("--link: the first asset is the swept variable");
        link[index] = parse_list(text.substr(eq + 1), "--link")[0];
    }

    std::vector<std::optional<double>> rhos{std::nullopt};
    if (!sw.rho.empty()) {
        if (spec.model.size() != 2) throw ValidationError("--rho needs exactly 2 assets");
        rhos.clear();
        for (double r : parse_list(sw.rho, "--rho")) {
            if (!(r >= -1.0 && r <= 1.0)) throw ValidationError(fmt::format("--rho: {} is outside [-1, 1]", r));
            rhos.emplace_back(r);
        }
    }

    std::vector<std::string> header{"mu1"};
    for (const auto& rho : rhos)
        for (const auto& [mname, m] : methods)
            for (const auto& asset : spec.names)
                header.push_back(rho ? fmt::format("{}_{}@rho={}", asset, mname, format_value(*rho))
                                     : fmt::format("{}_{}", asset, mname));
    out << fmt::format("{}\n", fmt::join(header, ","));

    for (std::size_t i = 0; i < sw.steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(sw.steps - 1);
        const double mu1 = i + 1 == sw.steps ? sw.stop : sw.start + t * (sw.stop - sw.start);
        PortfolioModel p = spec.model;
        p.assets[0].mu = mu1;
        for (std::size_t l = 1; l < p.size(); ++l)
            if (link[l]) p.assets[l].mu = *link[l] * mu1;

        std::vector<std::string> row{format_value(mu1)};
        for (const auto& rho : rhos) {
            if (rho) p.dependence = BivariateLogNormal{*rho};
            for (const auto& [mname, m] : methods) {
                std::string why;
                const auto f = sweep_cell(m, p, why);
                if (!f) {
                    err << fmt::format("warning: mu1={}{}: {} failed: {}\n", format_value(mu1),
                                       rho ? fmt::format(" rho={}", format_value(*rho)) : "", mname, why);
                    row.insert(row.end(), p.size(), "");
                    continue;
                }
                for (Eigen::Index l = 0; l < f->size(); ++l) row.push_back(format_value((*f)[l]));
            }
        }
        out << fmt::format("{}\n", fmt::join(row, ","));
        if (opt.verbose) err << fmt::format("row {}/{} done\n", i + 1, sw.steps);
    }
}

}  // namespace

std::string format_value(double v) { return fmt::format("{:.10g}", v == 0.0 ? 0.0 : v); }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Kelly fractions for log-normal and Gaussian portfolios", "kelly");
    app.require_subcommand(1);

    CommonOptions common;
    auto* solve = app.add_subcommand("solve", "linear (moment matrix) allocation");
    add_common(*solve, common);

    auto* exact = app.add_subcommand("exact", "exact criterion by quadrature and Newton, compared with linear");
    add_common(*exact, common);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo growth rate at a fraction vector");
    add_common(*simulate, common);
    simulate->add_option("--f", sim.f, "comma-separated fractions (default: solved)");
    simulate->add_option("--rounds", sim.rounds, "rounds per replication")->check(CLI::PositiveNumber);
    simulate->add_option("--replications", sim.replications, "replications")->check(CLI::PositiveNumber);
    simulate->add_flag("--verify", sim.verify, "compare against f +/- delta per asset");
    simulate->add_option("--delta", sim.delta, "perturbation for --verify");

    SweepOptions sw;
    auto* sweep = app.add_subcommand("sweep", "fractions over a range of the first asset's mu (CSV)");
    add_common(*sweep, common);
    sweep->add_option("--start", sw.start, "first mu1")->required();
    sweep->add_option("--stop", sw.stop, "last mu1")->required();
    sweep->add_option("--steps", sw.steps, "number of rows (>= 2)")->required();
    sweep->add_option("--methods", sw.methods, "closed,conventional,gaussian,linear,exact");
    sweep->add_flag("--link-sigma", sw.link_sigma, "set mu_l = sigma_l * mu1 for every other asset");
    sweep->add_option("--link", sw.links, "NAME=COEF: mu_NAME = COEF * mu1 (repeatable)");
    sweep->add_option("--rho", sw.rho, "comma-separated correlations (two assets)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return exit_success;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    }

    std::ofstream file;
    if (!common.out.empty()) {
        file.open(common.out, std::ios::binary | std::ios::trunc);
        if (!file) {
            err << fmt::format("error: cannot write '{}'\n", common.out);
            return exit_validation;
        }
    }
    std::ostream& report = common.out.empty() ? out : file;

    try {
        if (solve->parsed()) cmd_solve(common, report);
        if (exact->parsed()) cmd_exact(common, report);
        if (simulate->parsed()) cmd_simulate(common, sim, report);
        if (sweep->parsed()) cmd_sweep(common, sw, report, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << "\n";
        return exit_solver;
    }
    report.flush();
    return exit_success;
}

}  // namespace kelly::cli
