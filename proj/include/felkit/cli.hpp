#pragma once

// Command-line front end: flag/config-file parsing into a RunConfig, grid
// evaluation of the series functions, solution and residual runs, and
// deterministic parallel parameter sweeps with CSV or JSON output.
//
// Exit codes: 0 success, 1 failed verification, 2 usage or invalid values,
// 3 non-convergence under --strict, 4 I/O failure.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "felkit/oracle.hpp"

namespace felkit::cli {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HelpRequested {
    std::string text;
};

// ---------------------------------------------------------------------------
// value parsers

// complex literals of the form `re`, `re+imi`, `re-imi`, or `imi`
inline std::complex<double> parse_complex(const std::string& raw) {
    auto fail = [&]() -> std::complex<double> {
        throw UsageError("bad complex literal '" + raw + "' (expected forms: 1.5, 0.2-0.3i, 2i)");
    };
    std::string s;
    for (char ch : raw)
        if (!std::isspace((unsigned char)ch)) s += ch;
    if (s.empty()) return fail();

    auto to_double = [&](const std::string& part) {
        if (part.empty() || part == "+" || part == "-") return fail(), 0.0;
        size_t used = 0;
        double v;
        try {
            v = std::stod(part, &used);
        } catch (const std::exception&) {
            return fail(), 0.0;
        }
        if (used != part.size()) return fail(), 0.0;
        return v;
    };

    // split at the last +/- that is not a leading sign or an exponent sign
    size_t split = std::string::npos;
    for (size_t i = s.size(); i-- > 1;) {
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    bool has_i = s.back() == 'i';
    if (!has_i) {
        if (split != std::string::npos) return fail();
        return {to_double(s), 0.0};
    }
    std::string im = s.substr(0, s.size() - 1);
    if (split == std::string::npos) return {0.0, to_double(im)};
    std::string re = s.substr(0, split);
    im = im.substr(split);
    return {to_double(re), to_double(im)};
}

struct GridSpec {
    double lo = 0.0, hi = 1.0;
    int points = 101;
};

// `lo:hi:points`, endpoints inclusive
inline GridSpec parse_grid(const std::string& raw) {
    GridSpec g;
    size_t c1 = raw.find(':'), c2 = raw.rfind(':');
    if (c1 == std::string::npos || c2 == c1)
        throw UsageError("bad --grid '" + raw + "' (expected lo:hi:points)");
    try {
        size_t used = 0;
        g.lo = std::stod(raw.substr(0, c1), &used);
        g.hi = std::stod(raw.substr(c1 + 1, c2 - c1 - 1), &used);
        g.points = std::stoi(raw.substr(c2 + 1), &used);
    } catch (const std::exception&) {
        throw UsageError("bad --grid '" + raw + "' (expected lo:hi:points)");
    }
    if (g.points < 1 || g.hi < g.lo || (g.points > 1 && g.hi == g.lo))
        throw UsageError("bad --grid '" + raw + "': need points >= 1 and hi > lo");
    return g;
}

inline std::vector<std::complex<double>> parse_complex_list(const std::string& raw) {
    std::vector<std::complex<double>> out;
    std::stringstream ss(raw);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(parse_complex(tok));
    if (out.empty()) throw UsageError("empty complex list '" + raw + "'");
    return out;
}

// `offset:slope` pairs for Wright gamma factors, comma separated
inline std::vector<WrightPair> parse_pair_list(const std::string& raw) {
    std::vector<WrightPair> out;
    if (raw.empty()) return out;
    std::stringstream ss(raw);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        size_t colon = tok.find(':');
        if (colon == std::string::npos)
            throw UsageError("bad gamma-factor '" + tok + "' (expected offset:slope)");
        try {
            out.push_back({std::stod(tok.substr(0, colon)), std::stod(tok.substr(colon + 1))});
        } catch (const std::exception&) {
            throw UsageError("bad gamma-factor '" + tok + "' (expected offset:slope)");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// configuration

struct SweepAxis {
    std::string key;
    std::vector<std::string> values;  // literal tokens, re-parsed per point
};

struct RunConfig {
    std::string command;

    std::string variant = "rl";  // rl | caputo
    FELParameters params{0.0, 2.0, 1.0, 1.0, 0.0, {0.0, 0.0}, {0.0, 0.0}, 0.0};
    std::vector<std::complex<double>> init;
    std::string forcing_kind = "exp";  // exp | const | poly
    double nu = 0.0;
    std::complex<double> forcing_amp{1.0, 0.0};
    std::vector<std::complex<double>> poly_coeffs;
    bool has_g0 = false;
    double g0 = 0.0;  // classical gain; binds omega = -i pi g0

    double ml_a = 1.0, ml_b = 1.0, ml_delta = 1.0;
    std::string ml_kind = "upper";  // upper | lower | complete

    std::string wright_upper, wright_lower;
    double wright_cutoff = 0.0, wright_lower_cutoff = -1.0;
    std::string wright_variant = "upper";

    double arg_phase = 0.0;  // radians; evaluation argument is t e^{i phase}

    GridSpec grid;
    std::string format = "csv";  // csv | json
    std::string output = "-";
    double tol_residual = 1e-3;
    bool strict = false;
    int jobs = 0;  // 0: hardware concurrency
    TruncationControl ctl;

    std::vector<SweepAxis> sweeps;
};

namespace detail {

// flat `key = value` file; '#' starts a comment; flags already on the command
// line win over file entries
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    auto trim = [](std::string s) {
        size_t b = s.find_first_not_of(" \t\r");
        size_t e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        std::string body = line.substr(0, line.find('#'));
        size_t eq = body.find('=');
        if (eq == std::string::npos) {
            if (!trim(body).empty())
                throw UsageError("config line without '=': '" + trim(body) + "'");
            continue;
        }
        std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
        if (key.empty()) throw UsageError("config line with empty key: '" + trim(body) + "'");
        entries.emplace_back(key, value);
    }
    return entries;
}

inline bool truthy(const std::string& v) {
    return v == "1" || v == "true" || v == "yes" || v == "on";
}

// overlay config-file entries as trailing flags for keys absent from argv
inline void apply_config_overlay(std::vector<std::string>& args) {
    std::string path;
    for (size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--config") path = args[i + 1];
    if (path.empty()) return;

    for (const auto& [key, value] : read_config_file(path)) {
        std::string flag = "--" + key;
        if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
        if (key == "strict") {
            if (truthy(value)) args.push_back(flag);
        } else if (key == "sweep") {
            args.push_back(flag);
            args.push_back(value);
        } else {
            args.push_back(flag);
            args.push_back(value);
        }
    }
}

inline const std::map<std::string, int>& sweep_keys() {
    // 0: real into FELParameters/forcing, 1: complex, 2: classical gain
    static const std::map<std::string, int> keys = {
        {"a", 0},    {"bkernel", 0}, {"c", 0},     {"rho", 0},   {"zeta", 0},
        {"x", 0},    {"nu", 0},      {"omega", 1}, {"delta", 1}, {"g0", 2},
    };
    return keys;
}

inline void bind_parameter(RunConfig& cfg, const std::string& key, const std::string& token) {
    auto real = [&] {
        try {
            size_t used = 0;
            double v = std::stod(token, &used);
            if (used != token.size()) throw std::invalid_argument(token);
            return v;
        } catch (const std::exception&) {
            throw UsageError("bad numeric value '" + token + "' for " + key);
        }
    };
    if (key == "a") cfg.params.a = real();
    else if (key == "bkernel") cfg.params.b_kernel = real();
    else if (key == "c") cfg.params.c = real();
    else if (key == "rho") cfg.params.rho = real();
    else if (key == "zeta") cfg.params.zeta = real();
    else if (key == "x") cfg.params.x_cut = real();
    else if (key == "nu") cfg.nu = real();
    else if (key == "omega") cfg.params.omega = parse_complex(token);
    else if (key == "delta") cfg.params.delta_f = parse_complex(token);
    else if (key == "g0") cfg.params.omega = std::complex<double>{0.0, -M_PI * real()};
    else throw UsageError("unknown sweep key '" + key + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// parsing

inline RunConfig parse_config(std::vector<std::string> args) {
    detail::apply_config_overlay(args);

    RunConfig cfg;
    std::string omega_s = "0+0i", delta_s = "0+0i", amp_s = "1+0i";
    std::string init_s, poly_s, grid_s = "0:1:101";
    std::string config_path;
    std::vector<std::string> sweep_specs;

    CLI::App app{"felkit: incomplete Mittag-Leffler series toolkit"};
    app.require_subcommand(1);

    auto add_output_opts = [&](CLI::App* sub) {
        sub->add_option("--format", cfg.format, "output format: csv | json")
            ->check(CLI::IsMember({"csv", "json"}))
            ->capture_default_str();
        sub->add_option("--output", cfg.output, "output path, '-' for stdout")
            ->capture_default_str();
        sub->add_option("--grid", grid_s, "evaluation grid lo:hi:points")->capture_default_str();
        sub->add_option("--max-terms", cfg.ctl.max_terms, "series term budget")
            ->capture_default_str();
        sub->add_option("--rel-tol", cfg.ctl.rel_tol, "series truncation tolerance")
            ->capture_default_str();
        sub->add_flag("--strict", cfg.strict, "exit 3 if any series fails to converge");
        sub->add_option("--config", config_path,
                        "flat key=value config file; flags take precedence");
    };
    auto add_solver_opts = [&](CLI::App* sub) {
        sub->add_option("--variant", cfg.variant, "initial-data convention: rl | caputo")
            ->check(CLI::IsMember({"rl", "caputo"}))
            ->required();
        sub->add_option("--a", cfg.params.a, "fractional derivative order (required)");
        sub->add_option("--bkernel", cfg.params.b_kernel, "kernel power exponent")
            ->capture_default_str();
        sub->add_option("--c", cfg.params.c, "incomplete symbol parameter")
            ->capture_default_str();
        sub->add_option("--rho", cfg.params.rho, "inner series order")->capture_default_str();
        sub->add_option("--zeta", cfg.params.zeta, "kernel oscillation factor")
            ->capture_default_str();
        sub->add_option("--x", cfg.params.x_cut, "incomplete cutoff")->capture_default_str();
        sub->add_option("--omega", omega_s, "coupling strength (complex, e.g. 0.2-0.3i)")
            ->capture_default_str();
        sub->add_option("--delta", delta_s, "forcing weight (complex)")->capture_default_str();
        sub->add_option("--g0", cfg.g0,
                        "classical small-signal gain; sets omega = -i*pi*g0");
        sub->add_option("--init", init_s,
                        "initial data, comma-separated complex, length ceil(a)");
        sub->add_option("--forcing", cfg.forcing_kind, "forcing kind: exp | const | poly")
            ->check(CLI::IsMember({"exp", "const", "poly"}))
            ->capture_default_str();
        sub->add_option("--nu", cfg.nu, "detuning of the e^{i nu mu} forcing")
            ->capture_default_str();
        sub->add_option("--forcing-amp", amp_s, "amplitude of the constant forcing (complex)")
            ->capture_default_str();
        sub->add_option("--poly-coeffs", poly_s,
                        "polynomial forcing coefficients, comma-separated complex");
    };

    CLI::App* eval_ml = app.add_subcommand("eval-ml", "evaluate incomplete Mittag-Leffler sums");
    eval_ml->add_option("--ml-a", cfg.ml_a, "weight order a")->capture_default_str();
    eval_ml->add_option("--ml-b", cfg.ml_b, "weight offset b")->capture_default_str();
    eval_ml->add_option("--ml-delta", cfg.ml_delta, "Pochhammer parameter")
        ->capture_default_str();
    eval_ml->add_option("--x", cfg.params.x_cut, "incomplete cutoff")->capture_default_str();
    eval_ml->add_option("--kind", cfg.ml_kind, "upper | lower | complete")
        ->check(CLI::IsMember({"upper", "lower", "complete"}))
        ->capture_default_str();
    eval_ml->add_option("--arg-phase", cfg.arg_phase,
                        "argument phase (radians): z = t e^{i phase}")
        ->capture_default_str();
    add_output_opts(eval_ml);

    CLI::App* eval_wr = app.add_subcommand("eval-wright", "evaluate incomplete Fox-Wright sums");
    eval_wr->add_option("--upper", cfg.wright_upper,
                        "numerator gamma factors offset:slope, comma-separated");
    eval_wr->add_option("--lower", cfg.wright_lower,
                        "denominator gamma factors offset:slope, comma-separated");
    eval_wr->add_option("--cutoff", cfg.wright_cutoff, "incomplete cutoff, first upper factor")
        ->capture_default_str();
    eval_wr->add_option("--lower-cutoff", cfg.wright_lower_cutoff,
                        "cutoff on the first lower factor (<0: complete)")
        ->capture_default_str();
    eval_wr->add_option("--wright-variant", cfg.wright_variant,
                        "which incomplete gamma enters: upper | lower")
        ->check(CLI::IsMember({"upper", "lower"}))
        ->capture_default_str();
    eval_wr->add_option("--arg-phase", cfg.arg_phase,
                        "argument phase (radians): z = t e^{i phase}")
        ->capture_default_str();
    add_output_opts(eval_wr);

    CLI::App* solve = app.add_subcommand("solve", "evaluate the series solution h(mu)");
    add_solver_opts(solve);
    add_output_opts(solve);

    CLI::App* verify = app.add_subcommand("verify", "solve, then residual-check independently");
    add_solver_opts(verify);
    add_output_opts(verify);
    verify->add_option("--tol-residual", cfg.tol_residual,
                       "acceptance threshold on rel_residual")
        ->capture_default_str();

    CLI::App* sweep = app.add_subcommand("sweep", "cartesian parameter sweep of solve");
    add_solver_opts(sweep);
    add_output_opts(sweep);
    sweep->add_option("--sweep", sweep_specs, "axis key=v1,v2,... (repeatable)");
    sweep->add_option("--jobs", cfg.jobs, "worker threads (0: hardware)")
        ->capture_default_str();

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    CLI::App* active = app.get_subcommands().front();
    cfg.command = active->get_name();

    cfg.grid = parse_grid(grid_s);
    if (cfg.ctl.max_terms < 1) throw UsageError("--max-terms must be >= 1");
    if (!(cfg.ctl.rel_tol > 0.0)) throw UsageError("--rel-tol must be positive");

    bool solver_cmd =
        cfg.command == "solve" || cfg.command == "verify" || cfg.command == "sweep";
    if (solver_cmd) {
        cfg.params.omega = parse_complex(omega_s);
        cfg.params.delta_f = parse_complex(delta_s);
        cfg.forcing_amp = parse_complex(amp_s);
        cfg.has_g0 = active->count("--g0") > 0;
        if (cfg.has_g0) cfg.params.omega = std::complex<double>{0.0, -M_PI * cfg.g0};
        if (!poly_s.empty()) cfg.poly_coeffs = parse_complex_list(poly_s);
        if (!init_s.empty()) cfg.init = parse_complex_list(init_s);

        for (const std::string& spec : sweep_specs) {
            size_t eq = spec.find('=');
            if (eq == std::string::npos || eq == 0)
                throw UsageError("bad --sweep '" + spec + "' (expected key=v1,v2,...)");
            SweepAxis axis;
            axis.key = spec.substr(0, eq);
            if (!detail::sweep_keys().count(axis.key))
                throw UsageError("unknown sweep key '" + axis.key + "'");
            std::stringstream ss(spec.substr(eq + 1));
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) axis.values.push_back(tok);
            if (axis.values.empty())
                throw UsageError("empty value list in --sweep '" + spec + "'");
            cfg.sweeps.push_back(std::move(axis));
        }

        bool a_swept = false;
        for (const SweepAxis& ax : cfg.sweeps) a_swept |= ax.key == "a";
        if (cfg.params.a == 0.0 && !a_swept)
            throw UsageError("missing required option --a");
        if (cfg.init.empty()) throw UsageError("missing required option --init");
        if (cfg.command == "sweep" && cfg.sweeps.empty())
            throw UsageError("sweep requires at least one --sweep axis");
        if (cfg.command == "verify") {
            if (cfg.grid.lo != 0.0)
                throw UsageError("verify needs --grid starting at 0 (full history)");
            if (cfg.grid.points < 17)
                throw UsageError("verify needs at least 17 grid points");
        }
    }
    if (cfg.command == "eval-wright" && cfg.wright_upper.empty() && cfg.wright_lower.empty())
        throw UsageError("eval-wright needs --upper and/or --lower gamma factors");

    return cfg;
}

// ---------------------------------------------------------------------------
// output

namespace detail {

inline std::string num17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
    }
    return out;
}

// streams rows in either format with stable, locale-free number rendering
struct RowWriter {
    std::ostream& os;
    bool json;
    std::vector<std::string> extra_names;
    bool first_row = true;

    void begin() {
        if (json) {
            os << "[";
            return;
        }
        for (const std::string& n : extra_names) os << n << ",";
        os << "mu,re_h,im_h,abs_h,err_estimate\n";
    }
    void row(const std::vector<std::string>& extra, double mu, std::complex<double> h,
             double err) {
        if (json) {
            os << (first_row ? "\n" : ",\n") << " {";
            for (size_t i = 0; i < extra_names.size(); ++i)
                os << "\"" << json_escape(extra_names[i]) << "\":\"" << json_escape(extra[i])
                   << "\",";
            os << "\"mu\":" << num17(mu) << ",\"re_h\":" << num17(h.real())
               << ",\"im_h\":" << num17(h.imag()) << ",\"abs_h\":" << num17(std::abs(h))
               << ",\"err_estimate\":" << num17(err) << "}";
        } else {
            for (const std::string& e : extra) os << e << ",";
            os << num17(mu) << "," << num17(h.real()) << "," << num17(h.imag()) << ","
               << num17(std::abs(h)) << "," << num17(err) << "\n";
        }
        first_row = false;
    }
    void end() {
        if (json) os << "\n]\n";
    }
};

inline std::vector<double> grid_nodes(const GridSpec& g) {
    std::vector<double> nodes(g.points);
    for (int i = 0; i < g.points; ++i)
        nodes[i] = g.points == 1 ? g.lo : g.lo + (g.hi - g.lo) * i / (g.points - 1);
    return nodes;
}

inline Forcing build_forcing(const RunConfig& cfg) {
    if (cfg.forcing_kind == "const") return Forcing::constant(cfg.forcing_amp);
    if (cfg.forcing_kind == "poly") {
        if (cfg.poly_coeffs.empty())
            throw UsageError("--forcing poly needs --poly-coeffs");
        return Forcing::polynomial(cfg.poly_coeffs);
    }
    return Forcing::exp_inu(cfg.nu);
}

inline InitialData build_init(const RunConfig& cfg) {
    int need = cfg.params.ceil_order();
    if ((int)cfg.init.size() != need)
        throw UsageError("--init needs exactly " + std::to_string(need) +
                         " coefficients for a=" + std::to_string(cfg.params.a));
    return cfg.variant == "caputo" ? InitialData::caputo(cfg.init)
                                   : InitialData::rl(cfg.init);
}

inline std::vector<SolutionEvaluation> solve_config(const RunConfig& cfg,
                                                    const std::vector<double>& nodes) {
    try {
        cfg.params.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    InitialData init = build_init(cfg);
    Forcing g = build_forcing(cfg);
    return cfg.variant == "caputo" ? solve_caputo(cfg.params, init, g, nodes, cfg.ctl)
                                   : solve_rl(cfg.params, init, g, nodes, cfg.ctl);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// execution

inline int run(const RunConfig& cfg) {
    std::ofstream file;
    if (cfg.output != "-") {
        file.open(cfg.output);
        if (!file) {
            std::cerr << "error: cannot open output '" << cfg.output << "'\n";
            return 4;
        }
    }
    std::ostream& os = cfg.output == "-" ? std::cout : file;

    bool solver_cmd =
        cfg.command == "solve" || cfg.command == "verify" || cfg.command == "sweep";
    if (solver_cmd && cfg.grid.hi > 1.0)
        std::cerr << "warning: grid extends beyond mu=1; series convergence degrades and "
                     "more terms may be needed\n";

    detail::RowWriter w{os, cfg.format == "json", {}};
    bool nonconverged = false;
    int rc = 0;

    if (cfg.command == "eval-ml" || cfg.command == "eval-wright") {
        WrightSpec wspec;
        if (cfg.command == "eval-wright") {
            wspec.upper = parse_pair_list(cfg.wright_upper);
            wspec.lower = parse_pair_list(cfg.wright_lower);
            wspec.cutoff = cfg.wright_cutoff;
            wspec.lower_cutoff = cfg.wright_lower_cutoff;
            wspec.variant = cfg.wright_variant == "lower" ? WrightSpec::Variant::lower
                                                          : WrightSpec::Variant::upper;
        }
        w.begin();
        std::complex<double> phase{std::cos(cfg.arg_phase), std::sin(cfg.arg_phase)};
        for (double t : detail::grid_nodes(cfg.grid)) {
            std::complex<double> z = t * phase;
            SeriesValue sv;
            if (cfg.command == "eval-wright") {
                sv = incomplete_wright(wspec, z, cfg.ctl);
            } else if (cfg.ml_kind == "complete") {
                sv = complete_prabhakar_ml(cfg.ml_delta, cfg.ml_a, cfg.ml_b, z, cfg.ctl);
            } else if (cfg.ml_kind == "lower") {
                sv = incomplete_ml_lower(cfg.ml_a, cfg.ml_b, cfg.ml_delta, cfg.params.x_cut, z,
                                         cfg.ctl);
            } else {
                sv = incomplete_ml_upper(cfg.ml_a, cfg.ml_b, cfg.ml_delta, cfg.params.x_cut, z,
                                         cfg.ctl);
            }
            nonconverged |= !sv.converged;
            w.row({}, t, sv.value, sv.err_estimate);
        }
        w.end();
    } else if (cfg.command == "solve") {
        auto evs = detail::solve_config(cfg, detail::grid_nodes(cfg.grid));
        w.begin();
        auto nodes = detail::grid_nodes(cfg.grid);
        for (size_t i = 0; i < evs.size(); ++i) {
            nonconverged |= !evs[i].converged;
            w.row({}, nodes[i], evs[i].h, evs[i].err_estimate);
        }
        w.end();
    } else if (cfg.command == "verify") {
        auto nodes = detail::grid_nodes(cfg.grid);
        auto evs = detail::solve_config(cfg, nodes);
        oracle::GridFunction sol;
        sol.step = (cfg.grid.hi - cfg.grid.lo) / (cfg.grid.points - 1);
        sol.values.resize(evs.size());
        for (size_t i = 0; i < evs.size(); ++i) {
            nonconverged |= !evs[i].converged;
            sol.values[i] = evs[i].h;
        }
        InitialData init = detail::build_init(cfg);
        Forcing g = detail::build_forcing(cfg);
        oracle::ResidualReport rep = cfg.variant == "caputo"
                                         ? oracle::residual_caputo(cfg.params, init, g, sol)
                                         : oracle::residual_rl(cfg.params, init, g, sol);
        if (cfg.format == "json") {
            os << "{\"max_abs_residual\":" << detail::num17(rep.max_abs_residual)
               << ",\"rel_residual\":" << detail::num17(rep.rel_residual) << ",\"rows\":";
            w.begin();
            for (size_t i = 0; i < evs.size(); ++i)
                w.row({}, nodes[i], evs[i].h, evs[i].err_estimate);
            w.end();
            os << "}\n";
        } else {
            w.begin();
            for (size_t i = 0; i < evs.size(); ++i)
                w.row({}, nodes[i], evs[i].h, evs[i].err_estimate);
            os << "# max_abs_residual=" << detail::num17(rep.max_abs_residual)
               << " rel_residual=" << detail::num17(rep.rel_residual) << "\n";
        }
        rc = rep.rel_residual <= cfg.tol_residual ? 0 : 1;
    } else {  // sweep
        size_t total = 1;
        for (const SweepAxis& ax : cfg.sweeps) total *= ax.values.size();
        std::vector<std::vector<std::string>> tokens(total);
        std::vector<RunConfig> points(total, cfg);
        for (size_t p = 0; p < total; ++p) {
            size_t rem = p;
            for (size_t a = cfg.sweeps.size(); a-- > 0;) {
                const SweepAxis& ax = cfg.sweeps[a];
                size_t idx = rem % ax.values.size();
                rem /= ax.values.size();
                detail::bind_parameter(points[p], ax.key, ax.values[idx]);
                tokens[p].insert(tokens[p].begin(), ax.values[idx]);
            }
        }

        auto nodes = detail::grid_nodes(cfg.grid);
        std::vector<std::vector<SolutionEvaluation>> results(total);
        std::vector<std::string> errors(total);
        std::atomic<size_t> cursor{0};
        unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        size_t n_workers = std::min<size_t>(cfg.jobs > 0 ? (size_t)cfg.jobs : hw, total);
        auto worker = [&] {
            for (size_t p = cursor.fetch_add(1); p < total; p = cursor.fetch_add(1)) {
                try {
                    results[p] = detail::solve_config(points[p], nodes);
                } catch (const std::exception& e) {
                    errors[p] = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        for (size_t i = 0; i + 1 < n_workers; ++i) pool.emplace_back(worker);
        worker();
        for (std::thread& t : pool) t.join();

        for (size_t p = 0; p < total; ++p)
            if (!errors[p].empty()) {
                std::cerr << "error: sweep point " << p << ": " << errors[p] << "\n";
                return 2;
            }

        for (const SweepAxis& ax : cfg.sweeps) w.extra_names.push_back(ax.key);
        w.begin();
        for (size_t p = 0; p < total; ++p)
            for (size_t i = 0; i < results[p].size(); ++i) {
                nonconverged |= !results[p][i].converged;
                w.row(tokens[p], nodes[i], results[p][i].h, results[p][i].err_estimate);
            }
        w.end();
    }

    os.flush();
    if (!os) {
        std::cerr << "error: write failure on '" << cfg.output << "'\n";
        return 4;
    }
    if (nonconverged) {
        std::cerr << "warning: some series evaluations did not converge within the term "
                     "budget\n";
        if (cfg.strict) return 3;
    }
    return rc;
}

inline int main_entry(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run(parse_config(std::move(args)));
    } catch (const HelpRequested& h) {
        std::cout << h.text;
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace felkit::cli
