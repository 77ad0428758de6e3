#include "ineqgp/model_io.hpp"

#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace ineqgp {

namespace {

using nlohmann::json;

constexpr int FORMAT_VERSION = 1;
constexpr double INF = std::numeric_limits<double>::infinity();

// JSON has no infinities; bound entries use string markers instead.
json real_out(double v) {
    if (v == INF) return "inf";
    if (v == -INF) return "-inf";
    return v;
}

double real_in(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return INF;
        if (s == "-inf") return -INF;
        throw std::runtime_error("model file: unrecognized numeric marker '" + s + "'");
    }
    return j.get<double>();
}

json vec_out(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json bound_vec_out(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(real_out(v[i]));
    return a;
}

Eigen::VectorXd vec_in(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = real_in(a[i]);
    return v;
}

json mat_out(const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
    return a;
}

Eigen::MatrixXd mat_in(const json& a, Eigen::Index rows, Eigen::Index cols) {
    if (static_cast<Eigen::Index>(a.size()) != rows * cols)
        throw std::runtime_error("model file: matrix size mismatch");
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a[k++].get<double>();
    return m;
}

}  // namespace

std::string model_to_json(const EmulatorModel& model) {
    json j;
    j["format_version"] = FORMAT_VERSION;
    j["kernel"] = {{"family", kernel_family_name(model.kernel.family)},
                   {"variance", model.kernel.variance},
                   {"lengthscales", vec_out(model.kernel.lengthscales)}};
    j["grid"] = model.grid.dims;
    j["tau2"] = model.tau2;
    j["normalization"] = {{"lo", vec_out(model.norm.lo)}, {"hi", vec_out(model.norm.hi)}};

    json rows = json::array();
    for (Eigen::Index r = 0; r < model.constraints.lambda.outerSize(); ++r)
        for (SparseRowMat::InnerIterator it(model.constraints.lambda, r); it; ++it)
            rows.push_back(json::array({it.row(), it.col(), it.value()}));
    json tags = json::array();
    for (const auto& t : model.constraints.tags)
        tags.push_back(json::array({static_cast<int>(t.kind), t.dim}));
    j["constraints"] = {{"rows", model.constraints.rows()},
                        {"cols", model.constraints.cols()},
                        {"entries", rows},
                        {"lower", bound_vec_out(model.constraints.lower)},
                        {"upper", bound_vec_out(model.constraints.upper)},
                        {"tags", tags}};

    j["conditioned"] = {{"mean", vec_out(model.conditioned.mean)},
                        {"cov", mat_out(model.conditioned.cov)},
                        {"chol", mat_out(model.conditioned.chol)},
                        {"jitter", model.conditioned.jitter_used}};
    j["mode"] = vec_out(model.mode);
    j["map"] = {{"active", model.map_result.active},
                {"kkt_residual", model.map_result.kkt_residual},
                {"iterations", model.map_result.iterations}};
    j["loglik"] = model.loglik;
    j["fitted_from"] = model.fitted_from;
    j["warnings"] = model.warnings;
    return j.dump(1);
}

EmulatorModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("model file: not valid JSON: ") + e.what());
    }
    if (!j.contains("format_version"))
        throw std::runtime_error("model file: missing format_version field");
    const int version = j["format_version"].get<int>();
    if (version != FORMAT_VERSION)
        throw std::runtime_error("model file: format version " + std::to_string(version) +
                                 " is not supported (this build reads version " +
                                 std::to_string(FORMAT_VERSION) + ")");

    EmulatorModel model;
    model.kernel.family = parse_kernel_family(j["kernel"]["family"].get<std::string>());
    model.kernel.variance = j["kernel"]["variance"].get<double>();
    model.kernel.lengthscales = vec_in(j["kernel"]["lengthscales"]);
    model.grid = make_grid(j["grid"].get<std::vector<int>>());
    model.tau2 = j["tau2"].get<double>();
    model.norm.lo = vec_in(j["normalization"]["lo"]);
    model.norm.hi = vec_in(j["normalization"]["hi"]);

    const auto& jc = j["constraints"];
    const Eigen::Index q = jc["rows"].get<Eigen::Index>();
    const Eigen::Index m = jc["cols"].get<Eigen::Index>();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(jc["entries"].size());
    for (const auto& e : jc["entries"])
        trips.emplace_back(e[0].get<Eigen::Index>(), e[1].get<Eigen::Index>(),
                           e[2].get<double>());
    model.constraints.lambda.resize(q, m);
    model.constraints.lambda.setFromTriplets(trips.begin(), trips.end());
    model.constraints.lower = vec_in(jc["lower"]);
    model.constraints.upper = vec_in(jc["upper"]);
    for (const auto& t : jc["tags"])
        model.constraints.tags.push_back(
            {static_cast<ConstraintKind>(t[0].get<int>()), t[1].get<int>()});
    if (q > 0) model.constraints.validate();

    const auto& cd = j["conditioned"];
    model.conditioned.mean = vec_in(cd["mean"]);
    const Eigen::Index mm = model.conditioned.mean.size();
    if (mm != model.grid.total_knots() || (q > 0 && m != mm))
        throw std::runtime_error("model file: inconsistent dimensions");
    model.conditioned.cov = mat_in(cd["cov"], mm, mm);
    model.conditioned.chol = mat_in(cd["chol"], mm, mm);
    model.conditioned.jitter_used = cd["jitter"].get<double>();

    model.mode = vec_in(j["mode"]);
    model.map_result.mode = model.mode;
    model.map_result.active = j["map"]["active"].get<std::vector<int>>();
    model.map_result.kkt_residual = j["map"]["kkt_residual"].get<double>();
    model.map_result.iterations = j["map"]["iterations"].get<int>();
    model.loglik = j["loglik"].get<double>();
    model.fitted_from = j["fitted_from"].get<std::uint64_t>();
    model.warnings = j["warnings"].get<std::vector<std::string>>();

    model.kernel.validate();
    return model;
}

void save_model(const EmulatorModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << model_to_json(model) << '\n';
    if (!out) throw std::runtime_error("failed writing model to '" + path + "'");
}

EmulatorModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_json(text);
}

}  // namespace ineqgp
