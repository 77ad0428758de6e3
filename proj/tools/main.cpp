#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "demo_runner.hpp"
#include "ineqgp/csv.hpp"
#include "ineqgp/diagnostics.hpp"
#include "ineqgp/emulator.hpp"
#include "ineqgp/model_io.hpp"

namespace {

using namespace ineqgp;
using nlohmann::json;

constexpr double INF_D = std::numeric_limits<double>::infinity();

// ------------------------------------------------------------------ plumbing

// Input problems (bad files, bad flags, malformed data) exit 2; numeric
// failures inside the solvers and samplers exit 1.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

CsvTable read_data_cli(const std::string& path) {
    try {
        return read_csv(path);
    } catch (const CsvError&) {
        throw;  // carries its own line number; handled as an input error
    } catch (const std::runtime_error& e) {
        throw InputError(e.what());
    }
}

EmulatorModel load_model_cli(const std::string& path) {
    try {
        return load_model(path);
    } catch (const std::runtime_error& e) {
        throw InputError(e.what());
    }
}

double parse_real(const std::string& s) {
    if (s == "inf" || s == "+inf") return INF_D;
    if (s == "-inf") return -INF_D;
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InputError("cannot parse '" + s + "' as a number");
    }
    if (used != s.size()) throw InputError("cannot parse '" + s + "' as a number");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// Grammar: bounds(a,b) | positivity | monotone([dim=K,][up|down]) | convex[(dim=K)]
ConstraintChoice parse_constraint(const std::string& text) {
    const auto open = text.find('(');
    std::string head = text.substr(0, open);
    std::vector<std::string> args;
    if (open != std::string::npos) {
        const auto close = text.rfind(')');
        if (close == std::string::npos || close < open)
            throw InputError("constraint '" + text + "': unbalanced parentheses");
        const std::string inner = text.substr(open + 1, close - open - 1);
        if (!inner.empty()) args = split(inner, ',');
    }
    const auto dim_of = [&](const std::string& a) {
        const auto eq = a.find('=');
        const int dim = static_cast<int>(parse_real(a.substr(eq + 1)));
        if (dim < 1) throw InputError("constraint '" + text + "': dimensions are 1-based");
        return dim - 1;
    };
    if (head == "bounds") {
        if (args.size() != 2)
            throw InputError("constraint '" + text + "': expected bounds(lower,upper)");
        return bounds_choice(parse_real(args[0]), parse_real(args[1]));
    }
    if (head == "positivity") {
        if (!args.empty()) throw InputError("constraint '" + text + "': positivity takes no arguments");
        return bounds_choice(0.0, INF_D);
    }
    if (head == "monotone") {
        ConstraintChoice c = monotone_choice(0, true);
        for (const auto& a : args) {
            if (a.rfind("dim=", 0) == 0)
                c.dim = dim_of(a);
            else if (a == "up")
                c.increasing = true;
            else if (a == "down")
                c.increasing = false;
            else
                throw InputError("constraint '" + text + "': unknown argument '" + a + "'");
        }
        return c;
    }
    if (head == "convex") {
        ConstraintChoice c = convex_choice(0);
        for (const auto& a : args) {
            if (a.rfind("dim=", 0) == 0)
                c.dim = dim_of(a);
            else
                throw InputError("constraint '" + text + "': unknown argument '" + a + "'");
        }
        return c;
    }
    throw InputError("unknown constraint '" + text +
                     "' (known: bounds(a,b), positivity, monotone(dim=k,up|down), convex(dim=k))");
}

// Shared experiment settings: flags override config-file keys, which override
// the protocol defaults baked into the initializers below.
struct Settings {
    std::string kernel = "matern52";
    std::vector<int> knots;
    std::vector<std::string> constraints;
    std::vector<std::string> fixes;
    std::vector<std::string> domain;  // per-dim "lo:hi"
    std::string sampler = "hmc";
    long long count = 10000;
    int burn_in = 100;
    int thinning = 200;
    std::vector<double> quantiles = {0.025, 0.975};
    std::uint64_t seed = 7;
    int ml_starts = 10;
    int ml_iters = 80;
};

void apply_config_file(const std::string& path, const CLI::App& cmd, Settings& s) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("config file: " + std::string(e.what()));
    }
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw InputError("config file: missing or unsupported schema_version (expected 1)");
    const auto overridden = [&](const std::string& flag) { return cmd.count(flag) > 0; };
    try {
        if (j.contains("kernel") && !overridden("--kernel")) s.kernel = j["kernel"];
        if (j.contains("knots") && !overridden("--knots"))
            s.knots = j["knots"].get<std::vector<int>>();
        if (j.contains("constraints") && !overridden("--constraint"))
            s.constraints = j["constraints"].get<std::vector<std::string>>();
        // std::to_string would clip small values like 1e-8 to six decimals, so
        // format through a round-trip-precision stream instead
        const auto fmt = [](double v) {
            std::ostringstream ss;
            ss << std::setprecision(17) << v;
            return ss.str();
        };
        if (j.contains("fix") && !overridden("--fix"))
            for (const auto& [k, v] : j["fix"].items())
                s.fixes.push_back(k + "=" + fmt(v.get<double>()));
        if (j.contains("domain") && !overridden("--domain"))
            for (const auto& pair : j["domain"])
                s.domain.push_back(fmt(pair[0].get<double>()) + ":" + fmt(pair[1].get<double>()));
        if (j.contains("sampler") && !overridden("--sampler")) s.sampler = j["sampler"];
        if (j.contains("count") && !overridden("--count")) s.count = j["count"].get<long long>();
        if (j.contains("burn_in") && !overridden("--burn-in"))
            s.burn_in = j["burn_in"].get<int>();
        if (j.contains("thinning") && !overridden("--thinning"))
            s.thinning = j["thinning"].get<int>();
        if (j.contains("quantiles") && !overridden("--quantiles"))
            s.quantiles = j["quantiles"].get<std::vector<double>>();
        if (j.contains("seed") && !overridden("--seed"))
            s.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("ml_starts") && !overridden("--ml-starts"))
            s.ml_starts = j["ml_starts"].get<int>();
        if (j.contains("ml_iters") && !overridden("--ml-iters"))
            s.ml_iters = j["ml_iters"].get<int>();
    } catch (const json::exception& e) {
        throw InputError("config file: " + std::string(e.what()));
    }
}

FitConfig build_fit_config(const Settings& s, int d) {
    FitConfig fc;
    fc.family = parse_kernel_family(s.kernel);
    fc.knots = s.knots;
    for (const auto& c : s.constraints) fc.constraints.push_back(parse_constraint(c));
    for (const auto& f : s.fixes) {
        const auto eq = f.find('=');
        if (eq == std::string::npos)
            throw InputError("--fix expects name=value, got '" + f + "'");
        const std::string key = f.substr(0, eq);
        const double val = parse_real(f.substr(eq + 1));
        if (key == "sigma2") {
            fc.fixed.variance = val;
        } else if (key == "tau2") {
            fc.fixed.tau2 = val;
        } else if (key == "tau2rel") {
            fc.tau2_rel = val;
        } else if (key == "ell") {
            fc.fixed.lengthscales.assign(d, val);
        } else if (key.rfind("ell", 0) == 0) {
            const int dim = static_cast<int>(parse_real(key.substr(3)));
            if (dim < 1 || dim > d)
                throw InputError("--fix " + key + ": dimension out of range (1.." +
                                 std::to_string(d) + ")");
            if (fc.fixed.lengthscales.empty()) fc.fixed.lengthscales.resize(d);
            fc.fixed.lengthscales[dim - 1] = val;
        } else {
            throw InputError("--fix: unknown parameter '" + key +
                             "' (known: sigma2, tau2, tau2rel, ell, ell<k>)");
        }
    }
    if (!s.domain.empty()) {
        if (static_cast<int>(s.domain.size()) != d)
            throw InputError("--domain needs one lo:hi pair per input dimension");
        Eigen::VectorXd lo(d), hi(d);
        for (int k = 0; k < d; ++k) {
            const auto parts = split(s.domain[k], ':');
            if (parts.size() != 2)
                throw InputError("--domain: expected lo:hi, got '" + s.domain[k] + "'");
            lo[k] = parse_real(parts[0]);
            hi[k] = parse_real(parts[1]);
        }
        fc.domain = {lo, hi};
    }
    fc.ml.starts = s.ml_starts;
    fc.ml.max_iters = s.ml_iters;
    return fc;
}

SampleConfig build_sample_config(const Settings& s) {
    SampleConfig sc;
    sc.sampler = parse_sampler(s.sampler);
    sc.count = s.count;
    sc.burn_in = s.burn_in;
    sc.thinning = s.thinning;
    sc.seed = s.seed;
    return sc;
}

void check_quantiles(const Settings& s) {
    if (s.quantiles.size() != 2 || !(s.quantiles[0] > 0.0) ||
        !(s.quantiles[0] < s.quantiles[1]) || !(s.quantiles[1] < 1.0))
        throw InputError("--quantiles expects two levels with 0 < lo < hi < 1");
}

// Evaluation points for predict/sample/map: an explicit CSV or, in 1D, an
// equispaced grid over the fitted domain.
Eigen::MatrixXd resolve_points(const EmulatorModel& model, const std::string& points_path,
                               int grid_n) {
    const int d = model.norm.dim();
    if (!points_path.empty()) {
        const CsvTable t = read_data_cli(points_path);
        if (static_cast<int>(t.header.size()) != d)
            throw InputError("points file has " + std::to_string(t.header.size()) +
                             " columns, model expects " + std::to_string(d));
        if (t.values.rows() == 0) throw InputError("points file has no rows");
        return t.values;
    }
    if (d != 1) throw InputError("--grid is 1D only; give --points for d > 1");
    if (grid_n < 2) throw InputError("--grid needs at least 2 points");
    Eigen::MatrixXd x(grid_n, 1);
    for (int i = 0; i < grid_n; ++i)
        x(i, 0) = model.norm.lo[0] + (model.norm.hi[0] - model.norm.lo[0]) * i / (grid_n - 1.0);
    return x;
}

std::ostream& num(std::ostream& os) { return os << std::setprecision(10); }

// ---------------------------------------------------------------- subcommands

int cmd_fit(const Settings& s, const std::string& data_path, const std::string& out_path) {
    const CsvTable t = read_data_cli(data_path);
    if (t.header.size() < 2)
        throw InputError("data needs at least one input column and one output column");
    if (t.values.rows() == 0) throw InputError("no observations in '" + data_path + "'");
    const int d = static_cast<int>(t.header.size()) - 1;
    const Eigen::MatrixXd x = t.values.leftCols(d);
    const Eigen::VectorXd y = t.values.col(d);

    const FitConfig fc = build_fit_config(s, d);
    const EmulatorModel model = fit(x, y, fc);
    save_model(model, out_path);

    std::cout << "fitted " << kernel_family_name(model.kernel.family) << " model on "
              << x.rows() << " observations, " << model.knot_count() << " knots\n";
    num(std::cout) << "  sigma2 = " << model.kernel.variance << "\n";
    for (int k = 0; k < d; ++k)
        num(std::cout) << "  ell" << (k + 1) << "   = " << model.kernel.lengthscales[k] << "\n";
    num(std::cout) << "  tau2   = " << model.tau2 << "\n"
                   << "  loglik = " << model.loglik << "\n";
    for (const auto& w : model.warnings) std::cout << "warning: " << w << "\n";
    std::cout << "model written to " << out_path << "\n";
    return 0;
}

int cmd_predict(const Settings& s, const std::string& model_path, const std::string& points_path,
                int grid_n, const std::string& out_path) {
    check_quantiles(s);
    const EmulatorModel model = load_model_cli(model_path);
    const Eigen::MatrixXd x = resolve_points(model, points_path, grid_n);
    const SampleConfig sc = build_sample_config(s);
    const Prediction p =
        predict(model, x, s.quantiles[0], s.quantiles[1], nullptr,
                model.constrained() ? &sc : nullptr);

    std::vector<std::string> header;
    for (int k = 0; k < model.norm.dim(); ++k) header.push_back("x" + std::to_string(k + 1));
    header.insert(header.end(), {"mean", "mode", "q_lo", "q_hi"});
    Eigen::MatrixXd out(x.rows(), x.cols() + 4);
    out << x, p.mean, p.mode, p.q_lo, p.q_hi;
    write_csv(out_path, header, out);
    std::cout << "wrote " << x.rows() << " predictions to " << out_path
              << (model.constrained() ? " (sampler: " + s.sampler + ")" : " (closed form)")
              << "\n";
    return 0;
}

int cmd_sample(const Settings& s, const std::string& model_path, const std::string& points_path,
               int grid_n, const std::string& out_path) {
    const EmulatorModel model = load_model_cli(model_path);
    if (!model.constrained())
        throw InputError("model has no constraints; use predict for the Gaussian posterior");
    const Eigen::MatrixXd x = resolve_points(model, points_path, grid_n);
    const SampleConfig sc = build_sample_config(s);
    const PathSamples paths = sample_paths(model, sc);
    const Eigen::MatrixXd values = evaluate_paths(model, paths, x);  // draws x points

    std::vector<std::string> header;
    for (int k = 0; k < model.norm.dim(); ++k) header.push_back("x" + std::to_string(k + 1));
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        header.push_back("path_" + std::to_string(i + 1));
    Eigen::MatrixXd out(x.rows(), x.cols() + values.rows());
    out << x, values.transpose();
    write_csv(out_path, header, out);
    num(std::cout) << "wrote " << values.rows() << " paths at " << x.rows() << " points to "
                   << out_path << " (sampler: " << s.sampler
                   << ", recovery residual: " << paths.recovery_residual << ")\n";
    return 0;
}

int cmd_map(const Settings& /*s*/, const std::string& model_path, const std::string& points_path,
            int grid_n, const std::string& out_path) {
    const EmulatorModel model = load_model_cli(model_path);
    const Eigen::MatrixXd x = resolve_points(model, points_path, grid_n);
    const SparseRowMat phi = design_matrix(model.grid, model.norm.to_unit(x));
    const Eigen::VectorXd mode = phi * model.mode;

    std::vector<std::string> header;
    for (int k = 0; k < model.norm.dim(); ++k) header.push_back("x" + std::to_string(k + 1));
    header.push_back("mode");
    Eigen::MatrixXd out(x.rows(), x.cols() + 1);
    out << x, mode;
    write_csv(out_path, header, out);
    num(std::cout) << "MAP curve on " << x.rows() << " points written to " << out_path << "\n"
                   << "  active constraints: " << model.map_result.active.size() << "\n"
                   << "  kkt residual:       " << model.map_result.kkt_residual << "\n";
    return 0;
}

int cmd_diagnose(const Settings& s, const std::string& model_path, const std::string& out_path) {
    const EmulatorModel model = load_model_cli(model_path);
    if (!model.constrained())
        throw InputError("model has no constraints; sampler diagnostics need a truncated posterior");
    const SampleConfig sc = build_sample_config(s);
    const PathSamples paths = sample_paths(model, sc);
    const EssReport report = ess_report(paths.xi, paths.chain.wall_seconds);

    num(std::cout) << "sampler:        " << s.sampler << "\n"
                   << "draws:          " << paths.chain.count() << "\n"
                   << "ess quantiles:  q10 = " << report.q10 << ", q50 = " << report.q50
                   << ", q90 = " << report.q90 << "\n"
                   << "sampling time:  " << report.wall_seconds << " s\n"
                   << "tn-ess:         " << report.tn_ess << " /s\n";
    if (sc.sampler == SamplerKind::Rsm)
        num(std::cout) << "acceptance:     " << paths.chain.acceptance_rate() << "\n";

    if (!out_path.empty()) {
        Eigen::MatrixXd out(report.per_coordinate.size(), 2);
        for (Eigen::Index j = 0; j < report.per_coordinate.size(); ++j)
            out.row(j) << double(j), report.per_coordinate[j];
        write_csv(out_path, {"coordinate", "ess"}, out);
        std::cout << "per-coordinate ESS written to " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian process emulation with linear inequality constraints"};
    app.require_subcommand(1);

    Settings s;
    std::string data_path, model_path, out_path, points_path, config_path;
    int grid_n = 101;

    const auto add_settings = [&](CLI::App* cmd, bool sampling) {
        cmd->add_option("--config", config_path, "JSON config file (schema_version 1)");
        if (sampling) {
            cmd->add_option("--sampler", s.sampler, "rsm | gibbs | hmc | naive");
            cmd->add_option("--count", s.count, "number of draws");
            cmd->add_option("--burn-in", s.burn_in, "burned sweeps/steps");
            cmd->add_option("--thinning", s.thinning, "Gibbs thinning");
            cmd->add_option("--seed", s.seed, "RNG seed");
        }
    };

    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model to CSV data");
    fit_cmd->add_option("--data", data_path, "training CSV (inputs..., output)")->required();
    fit_cmd->add_option("--out", out_path, "model file to write")->required();
    fit_cmd->add_option("--kernel", s.kernel, "se | matern52 | matern32");
    fit_cmd->add_option("--knots", s.knots, "knots per dimension")->delimiter(',');
    fit_cmd->add_option("--constraint", s.constraints,
                        "bounds(a,b) | positivity | monotone(dim=k,up|down) | convex(dim=k); "
                        "repeatable");
    fit_cmd->add_option("--fix", s.fixes, "fix a parameter: sigma2=, tau2=, tau2rel=, ell=");
    fit_cmd->add_option("--domain", s.domain, "input box, one lo:hi per dimension")
        ->delimiter(',');
    fit_cmd->add_option("--ml-starts", s.ml_starts, "optimizer restarts");
    fit_cmd->add_option("--ml-iters", s.ml_iters, "iterations per restart");
    fit_cmd->add_option("--seed", s.seed, "optimizer start-design seed");
    add_settings(fit_cmd, false);

    CLI::App* predict_cmd = app.add_subcommand("predict", "pointwise posterior summaries");
    predict_cmd->add_option("--model", model_path, "fitted model file")->required();
    predict_cmd->add_option("--out", out_path, "output CSV")->required();
    predict_cmd->add_option("--points", points_path, "CSV of evaluation points");
    predict_cmd->add_option("--grid", grid_n, "1D: equispaced point count over the domain");
    predict_cmd->add_option("--quantiles", s.quantiles, "band levels, e.g. 0.025,0.975")
        ->delimiter(',');
    add_settings(predict_cmd, true);

    CLI::App* sample_cmd = app.add_subcommand("sample", "constrained sample paths");
    sample_cmd->add_option("--model", model_path, "fitted model file")->required();
    sample_cmd->add_option("--out", out_path, "output CSV")->required();
    sample_cmd->add_option("--points", points_path, "CSV of evaluation points");
    sample_cmd->add_option("--grid", grid_n, "1D: equispaced point count over the domain");
    add_settings(sample_cmd, true);

    CLI::App* map_cmd = app.add_subcommand("map", "maximum a posteriori curve");
    map_cmd->add_option("--model", model_path, "fitted model file")->required();
    map_cmd->add_option("--out", out_path, "output CSV")->required();
    map_cmd->add_option("--points", points_path, "CSV of evaluation points");
    map_cmd->add_option("--grid", grid_n, "1D: equispaced point count over the domain");

    CLI::App* diag_cmd = app.add_subcommand("diagnose", "effective-sample-size report");
    diag_cmd->add_option("--model", model_path, "fitted model file")->required();
    diag_cmd->add_option("--out", out_path, "per-coordinate ESS CSV");
    add_settings(diag_cmd, true);

    CLI::App* demo_cmd = app.add_subcommand("demo", "run a named experiment end to end");
    std::string demo_name;
    ineqgp_cli::DemoOptions demo_opts;
    demo_cmd->add_option("name", demo_name, ineqgp_cli::demo_names())->required();
    demo_cmd->add_option("--outdir", demo_opts.outdir, "output directory");
    demo_cmd->add_option("--seed", demo_opts.seed, "experiment seed");
    demo_cmd->add_flag("--full", demo_opts.full, "full-scale protocol (slower)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        if (!config_path.empty()) apply_config_file(config_path, *active, s);
        if (fit_cmd->parsed()) return cmd_fit(s, data_path, out_path);
        if (predict_cmd->parsed()) return cmd_predict(s, model_path, points_path, grid_n, out_path);
        if (sample_cmd->parsed()) return cmd_sample(s, model_path, points_path, grid_n, out_path);
        if (map_cmd->parsed()) return cmd_map(s, model_path, points_path, grid_n, out_path);
        if (diag_cmd->parsed()) return cmd_diagnose(s, model_path, out_path);
        if (demo_cmd->parsed()) {
            if (demo_cmd->count("--outdir") == 0) demo_opts.outdir = "demo_" + demo_name;
            return ineqgp_cli::run_demo(demo_name, demo_opts);
        }
    } catch (const CsvError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
