#include "ineqgp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ineqgp {

namespace {

// Lower convex hull of the points (i, v[i]), evaluated back at the integers.
// Used to replace the pair-sum sequence by its greatest convex minorant.
std::vector<double> convex_minorant(const std::vector<double>& v) {
    const int n = static_cast<int>(v.size());
    if (n <= 2) return v;
    std::vector<int> hull;
    for (int i = 0; i < n; ++i) {
        while (hull.size() >= 2) {
            const int a = hull[hull.size() - 2];
            const int b = hull[hull.size() - 1];
            // Drop b if it lies on or above the chord a -> i.
            const double lhs = (v[b] - v[a]) * static_cast<double>(i - b);
            const double rhs = (v[i] - v[b]) * static_cast<double>(b - a);
            if (lhs >= rhs)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    std::vector<double> out(v.size());
    for (std::size_t seg = 0; seg + 1 < hull.size(); ++seg) {
        const int a = hull[seg];
        const int b = hull[seg + 1];
        for (int i = a; i <= b; ++i) {
            const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
            out[i] = v[a] + t * (v[b] - v[a]);
        }
    }
    return out;
}

}  // namespace

double ess(const Eigen::VectorXd& series, bool* degenerate) {
    const Eigen::Index n = series.size();
    if (n < 10)
        throw std::invalid_argument("ess: need at least 10 draws, got " + std::to_string(n));
    if (degenerate) *degenerate = false;

    const Eigen::VectorXd c = series.array() - series.mean();
    const auto gamma = [&](Eigen::Index k) {
        return c.head(n - k).dot(c.tail(n - k)) / static_cast<double>(n);
    };

    // A pinned chain (e.g. a coordinate clamped to a bound the whole run) has no
    // variance to estimate. Centering a constant series leaves rounding residue
    // around 1e-16 * |value|, so compare g0 against that floor, not zero.
    const double g0 = gamma(0);
    const double scale = std::max(1.0, series.cwiseAbs().maxCoeff());
    if (series.minCoeff() == series.maxCoeff() || g0 <= 1e-28 * scale * scale) {
        if (degenerate) *degenerate = true;
        return static_cast<double>(n);
    }

    // Pair sums of autocovariances, computed lazily and kept while positive.
    // The lag window never exceeds n/2; running off it just truncates the sum.
    const Eigen::Index max_lag = n / 2;
    std::vector<double> pair_sums;
    for (Eigen::Index i = 0; 2 * i + 1 <= max_lag; ++i) {
        const double s = gamma(2 * i) + gamma(2 * i + 1);
        if (s <= 0.0) break;
        pair_sums.push_back(s);
    }
    if (pair_sums.empty()) {
        // Alternating chain: truncated variance estimate is non-positive, so the
        // chain mixes at least as well as independent draws.
        return static_cast<double>(n);
    }

    for (std::size_t i = 1; i < pair_sums.size(); ++i)
        pair_sums[i] = std::min(pair_sums[i], pair_sums[i - 1]);
    pair_sums = convex_minorant(pair_sums);

    double acc = 0.0;
    for (double s : pair_sums) acc += s;
    const double asym_var = -g0 + 2.0 * acc;
    if (asym_var <= 0.0) return static_cast<double>(n);

    const double value = static_cast<double>(n) * g0 / asym_var;
    return std::clamp(value, 1.0, static_cast<double>(n));
}

EssReport ess_report(const Eigen::MatrixXd& draws, double wall_seconds) {
    const Eigen::Index q = draws.cols();
    if (q == 0) throw std::invalid_argument("ess_report: empty chain");
    EssReport report;
    report.per_coordinate.resize(q);
    for (Eigen::Index j = 0; j < q; ++j)
        report.per_coordinate[j] = ess(draws.col(j));
    report.q10 = quantile(report.per_coordinate, 0.10);
    report.q50 = quantile(report.per_coordinate, 0.50);
    report.q90 = quantile(report.per_coordinate, 0.90);
    report.wall_seconds = wall_seconds;
    report.tn_ess = wall_seconds > 0.0 ? report.q10 / wall_seconds : 0.0;
    return report;
}

double q2(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
    if (truth.size() != pred.size())
        throw std::invalid_argument("q2: size mismatch");
    if (truth.size() == 0)
        throw std::invalid_argument("q2: empty input");
    const Eigen::VectorXd d = truth.array() - truth.mean();
    const double var = d.squaredNorm() / static_cast<double>(truth.size());
    if (var <= 0.0)
        throw std::invalid_argument("q2: truth is constant, predictivity undefined");
    const double mse = (pred - truth).squaredNorm() / static_cast<double>(truth.size());
    return 1.0 - mse / var;
}

double quantile(const Eigen::VectorXd& values, double p) {
    if (values.size() == 0) throw std::invalid_argument("quantile: empty input");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0, 1]");
    std::vector<double> s(values.data(), values.data() + values.size());
    std::sort(s.begin(), s.end());
    const double h = p * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= s.size()) return s.back();
    const double frac = h - static_cast<double>(lo);
    return s[lo] + frac * (s[lo + 1] - s[lo]);
}

}  // namespace ineqgp
