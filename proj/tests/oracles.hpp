#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here is deliberately naive: dense algebra, brute-force
// enumeration, textbook formulas. Slow is fine; wrong is not.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

// Central finite difference of a scalar function of a vector.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd hi = x, lo = x;
        hi[i] += h;
        lo[i] -= h;
        g[i] = (f(hi) - f(lo)) / (2.0 * h);
    }
    return g;
}

// Posterior of xi ~ N(0, K) given y = Phi xi + eps, eps ~ N(0, tau2 I),
// written out the long way.
struct DensePosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

inline DensePosterior condition_dense(const Eigen::MatrixXd& K, const Eigen::MatrixXd& Phi,
                                      const Eigen::VectorXd& y, double tau2) {
    const Eigen::MatrixXd KPt = K * Phi.transpose();
    Eigen::MatrixXd S = Phi * KPt;
    S.diagonal().array() += tau2;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    DensePosterior out;
    out.mean = KPt * ldlt.solve(y);
    out.cov = K - KPt * ldlt.solve(KPt.transpose());
    return out;
}

inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Mean and variance of a standard normal truncated to [a, b].
struct TnMoments {
    double mean;
    double var;
};

inline TnMoments tn_std_moments(double a, double b) {
    const double Z = norm_cdf(b) - norm_cdf(a);
    const double pa = std::isinf(a) ? 0.0 : norm_pdf(a);
    const double pb = std::isinf(b) ? 0.0 : norm_pdf(b);
    const double apa = std::isinf(a) ? 0.0 : a * norm_pdf(a);
    const double bpb = std::isinf(b) ? 0.0 : b * norm_pdf(b);
    TnMoments m;
    m.mean = (pa - pb) / Z;
    m.var = 1.0 + (apa - bpb) / Z - m.mean * m.mean;
    return m;
}

// Constrained mode by brute force: enumerate every assignment of each row to
// {inactive, at lower, at upper}, solve the equality-constrained minimizer of
// (x - mu)^T P (x - mu) for that face, and keep the best feasible candidate.
// P is the precision matrix. Exponential in rows, so keep q small.
inline Eigen::VectorXd qp_enumerate(const Eigen::VectorXd& mu, const Eigen::MatrixXd& P,
                                    const Eigen::MatrixXd& A, const Eigen::VectorXd& lower,
                                    const Eigen::VectorXd& upper, double feas_tol = 1e-7) {
    const Eigen::Index q = A.rows();
    const Eigen::Index m = A.cols();
    double best_obj = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best = mu;
    std::vector<int> state(static_cast<size_t>(q), 0);
    long long total = 1;
    for (Eigen::Index i = 0; i < q; ++i) total *= 3;
    for (long long code = 0; code < total; ++code) {
        long long c = code;
        int nact = 0;
        for (Eigen::Index i = 0; i < q; ++i) {
            state[static_cast<size_t>(i)] = static_cast<int>(c % 3);
            c /= 3;
            if (state[static_cast<size_t>(i)] != 0) ++nact;
        }
        Eigen::MatrixXd Aact(nact, m);
        Eigen::VectorXd bact(nact);
        int r = 0;
        for (Eigen::Index i = 0; i < q; ++i) {
            const int s = state[static_cast<size_t>(i)];
            if (s == 0) continue;
            Aact.row(r) = A.row(i);
            bact[r] = (s == 1) ? lower[i] : upper[i];
            ++r;
        }
        Eigen::VectorXd x;
        if (nact == 0) {
            x = mu;
        } else {
            // x = mu + P^-1 Aact^T (Aact P^-1 Aact^T)^-1 (bact - Aact mu)
            const Eigen::LDLT<Eigen::MatrixXd> Pld(P);
            const Eigen::MatrixXd PiAt = Pld.solve(Aact.transpose());
            const Eigen::MatrixXd G = Aact * PiAt;
            const Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
            if (!lu.isInvertible()) continue;
            x = mu + PiAt * lu.solve(bact - Aact * mu);
        }
        const Eigen::VectorXd Ax = A * x;
        bool feasible = true;
        for (Eigen::Index i = 0; i < q; ++i) {
            if (Ax[i] < lower[i] - feas_tol || Ax[i] > upper[i] + feas_tol) {
                feasible = false;
                break;
            }
        }
        if (!feasible) continue;
        const Eigen::VectorXd d = x - mu;
        const double obj = d.dot(P * d);
        if (obj < best_obj - 1e-12) {
            best_obj = obj;
            best = x;
        }
    }
    return best;
}

// Stationary AR(1) series with lag-one correlation rho. True ESS fraction for
// the sample mean is (1 - rho) / (1 + rho).
inline Eigen::VectorXd ar1_series(Eigen::Index n, double rho, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::VectorXd x(n);
    const double s = std::sqrt(1.0 - rho * rho);
    x[0] = nd(gen);
    for (Eigen::Index i = 1; i < n; ++i) x[i] = rho * x[i - 1] + s * nd(gen);
    return x;
}

inline double sample_mean(const Eigen::VectorXd& v) { return v.mean(); }

inline double sample_sd(const Eigen::VectorXd& v) {
    const double mu = v.mean();
    return std::sqrt((v.array() - mu).square().sum() / double(v.size() - 1));
}

}  // namespace oracle
