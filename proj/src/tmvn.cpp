#include "ineqgp/tmvn.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ineqgp/linalg.hpp"

namespace ineqgp {

namespace {

constexpr double INF = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_within_bounds(const TruncatedGaussianSpec& spec, const Eigen::VectorXd& z,
                         const char* what, double tol = 1e-8) {
    for (Eigen::Index i = 0; i < spec.size(); ++i)
        if (z[i] < spec.lower[i] - tol || z[i] > spec.upper[i] + tol)
            throw std::invalid_argument(std::string(what) + ": point violates the box bounds");
}

void assert_chain_in_bounds(const TruncatedGaussianSpec& spec, const Eigen::MatrixXd& draws) {
    for (Eigen::Index i = 0; i < draws.rows(); ++i)
        for (Eigen::Index j = 0; j < draws.cols(); ++j)
            if (draws(i, j) < spec.lower[j] - 1e-8 || draws(i, j) > spec.upper[j] + 1e-8)
                throw std::logic_error("sampler emitted a draw outside the bounds");
}

}  // namespace

const char* sampler_name(SamplerKind k) {
    switch (k) {
        case SamplerKind::Rsm: return "rsm";
        case SamplerKind::Gibbs: return "gibbs";
        case SamplerKind::Hmc: return "hmc";
        case SamplerKind::NaiveRejection: return "naive";
    }
    return "?";
}

SamplerKind parse_sampler(const std::string& name) {
    if (name == "rsm") return SamplerKind::Rsm;
    if (name == "gibbs") return SamplerKind::Gibbs;
    if (name == "hmc") return SamplerKind::Hmc;
    if (name == "naive") return SamplerKind::NaiveRejection;
    throw std::invalid_argument("unknown sampler '" + name + "' (expected rsm|gibbs|hmc|naive)");
}

double Rng::uniform() {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    double u = d(gen);
    while (u <= 0.0) u = d(gen);  // keep log(u) finite
    return u;
}

double Rng::normal() {
    std::normal_distribution<double> d(0.0, 1.0);
    return d(gen);
}

Eigen::VectorXd Rng::normal_vec(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
}

namespace detail {

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

static double norm_tail(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }  // P(X > x)

double norm_ppf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("norm_ppf: p outside (0,1)");
    // complementary form on whichever side is the tail, so both tails stay accurate
    if (p < 0.5) return -M_SQRT2 * boost::math::erfc_inv(2.0 * p);
    return M_SQRT2 * boost::math::erfc_inv(2.0 * (1.0 - p));
}

static double norm_tail_inv(double q) { return M_SQRT2 * boost::math::erfc_inv(2.0 * q); }

// One-sided/two-sided draw on [a, b] with 0 <= a < b via the complementary CDF;
// exact and stable arbitrarily deep in the tail.
static double rtnorm_tail_inverse(Rng& rng, double a, double b) {
    const double qa = norm_tail(a);
    const double qb = (b == INF) ? 0.0 : norm_tail(b);
    if (qa <= 0.0) return a;  // tail mass underflowed; the interval is effectively a point
    const double q = qa + rng.uniform() * (qb - qa);
    return norm_tail_inv(std::min(std::max(q, std::numeric_limits<double>::min()), 1.0));
}

// Exponential-proposal rejection for a >= 4 (Robert-style): propose
// a + Exp(lam) with lam = (a + sqrt(a^2+4))/2, accept with exp(-(x-lam)^2/2).
static double rtnorm_exp_reject(Rng& rng, double a, double b) {
    const double lam = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (int it = 0; it < 10000; ++it) {
        const double x = a - std::log(rng.uniform()) / lam;
        if (x > b) continue;
        const double d = x - lam;
        if (std::log(rng.uniform()) <= -0.5 * d * d) return x;
    }
    // interval too thin for rejection to land; fall back to the exact tail inverse
    return rtnorm_tail_inverse(rng, a, b);
}

double rtnorm_std(Rng& rng, double a, double b) {
    if (!(a <= b)) throw std::invalid_argument("rtnorm_std: empty interval");
    if (a == b) return a;
    if (a == -INF && b == INF) return rng.normal();
    if (a >= 4.0) return rtnorm_exp_reject(rng, a, b);
    if (b <= -4.0) return -rtnorm_exp_reject(rng, -b, -a);
    // moderate truncation: plain inverse CDF
    const double pa = (a == -INF) ? 0.0 : norm_cdf(a);
    const double pb = (b == INF) ? 1.0 : norm_cdf(b);
    const double p = pa + rng.uniform() * (pb - pa);
    const double x = norm_ppf(std::min(std::max(p, std::numeric_limits<double>::min()),
                                       1.0 - std::numeric_limits<double>::epsilon()));
    return std::min(std::max(x, a), b);
}

}  // namespace detail

SampleChain sample_rsm(const TruncatedGaussianSpec& spec, const Eigen::VectorXd& mode,
                       Eigen::Index count, std::uint64_t seed, long long max_proposals) {
    spec.validate();
    if (mode.size() != spec.size()) throw std::invalid_argument("sample_rsm: mode has wrong length");
    check_within_bounds(spec, mode, "sample_rsm mode");
    if (count <= 0) throw std::invalid_argument("sample_rsm: count must be positive");

    const Eigen::Index q = spec.size();
    const Eigen::Index r = spec.rank();

    // acceptance exponent in whitened coordinates: w^T (z - mode) = a . eta
    // with a the least-squares preimage of (mean - mode) under the factor
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(spec.factor);
    const Eigen::VectorXd a = qr.solve(spec.mean - mode);
    const double resid = (spec.factor * a - (spec.mean - mode)).norm();
    if (resid > 1e-6 * (1.0 + spec.mean.norm()))
        throw std::invalid_argument("sample_rsm: mode - mean is outside the covariance support");

    Rng rng(seed);
    SampleChain chain;
    chain.sampler = SamplerKind::Rsm;
    chain.seed = seed;
    chain.draws.resize(count, q);

    const auto t0 = Clock::now();
    Eigen::Index got = 0;
    while (got < count) {
        if (max_proposals > 0 && chain.proposals >= max_proposals) break;
        const Eigen::VectorXd eta = rng.normal_vec(r);
        ++chain.proposals;
        const Eigen::VectorXd z = mode + spec.factor * eta;
        bool feasible = true;
        for (Eigen::Index i = 0; i < q; ++i) {
            if (z[i] < spec.lower[i] || z[i] > spec.upper[i]) {
                feasible = false;
                break;
            }
        }
        if (feasible) {
            const double logp = a.dot(eta);
            if (logp >= 0.0 || std::log(rng.uniform()) <= logp) {
                chain.draws.row(got++) = z;
                ++chain.accepted;
            }
        }
        if (chain.proposals >= 10'000'000 &&
            chain.accepted < static_cast<long long>(1e-6 * double(chain.proposals))) {
            std::ostringstream msg;
            msg << "sample_rsm: acceptance rate " << chain.acceptance_rate() << " after "
                << chain.proposals << " proposals; the mode proposal cannot cover this box";
            throw std::runtime_error(msg.str());
        }
    }
    chain.wall_seconds = seconds_since(t0);
    chain.draws.conservativeResize(got, q);
    assert_chain_in_bounds(spec, chain.draws);
    return chain;
}

namespace {

// Interval the box rows allow for whitened coordinate j when the current row
// values are rowval and eta_j still contributes coef*eta_j to them. The Gaussian
// part of the conditional is a plain standard normal; every coupling between
// coordinates lives in this intersection over all rows.
void whitened_interval(const Eigen::MatrixXd& fac, const Eigen::VectorXd& rowval,
                       const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                       Eigen::Index j, double eta_j, double& a, double& b) {
    a = -INF;
    b = INF;
    for (Eigen::Index i = 0; i < fac.rows(); ++i) {
        const double coef = fac(i, j);
        if (coef == 0.0) continue;
        const double rest = rowval[i] - coef * eta_j;
        if (coef > 0.0) {
            if (lower[i] > -INF) a = std::max(a, (lower[i] - rest) / coef);
            if (upper[i] < INF) b = std::min(b, (upper[i] - rest) / coef);
        } else {
            if (upper[i] < INF) a = std::max(a, (upper[i] - rest) / coef);
            if (lower[i] > -INF) b = std::min(b, (lower[i] - rest) / coef);
        }
    }
}

}  // namespace

SampleChain sample_gibbs(const TruncatedGaussianSpec& spec, const Eigen::VectorXd& start,
                         Eigen::Index count, int burn_in, int thinning, std::uint64_t seed) {
    spec.validate();
    if (start.size() != spec.size()) throw std::invalid_argument("sample_gibbs: start has wrong length");
    check_within_bounds(spec, start, "sample_gibbs start");
    if (count <= 0 || burn_in < 0 || thinning < 1)
        throw std::invalid_argument("sample_gibbs: bad count/burn_in/thinning");

    const Eigen::Index q = spec.size();
    const Eigen::Index r = spec.rank();
    Eigen::LLT<Eigen::MatrixXd> llt(spec.cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(
            "sample_gibbs: covariance is singular (rank < q); sample through the minimal "
            "constraint form in xi coordinates instead");

    // scan in whitened coordinates z = mean + factor * eta, where the target is
    // iid standard normal and mixing does not degrade with posterior correlation
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(spec.factor);
    Eigen::VectorXd eta = qr.solve(start - spec.mean);
    if ((spec.factor * eta - (start - spec.mean)).norm() > 1e-6 * (1.0 + start.norm()))
        throw std::invalid_argument("sample_gibbs: start is outside the covariance support");

    Rng rng(seed);
    Eigen::VectorXd rowval = spec.mean + spec.factor * eta;

    SampleChain chain;
    chain.sampler = SamplerKind::Gibbs;
    chain.seed = seed;
    chain.burn_in = burn_in;
    chain.thinning = thinning;
    chain.draws.resize(count, q);

    const auto t0 = Clock::now();
    const long long total_sweeps = burn_in + static_cast<long long>(count) * thinning;
    Eigen::Index got = 0;
    for (long long sweep = 0; sweep < total_sweeps; ++sweep) {
        for (Eigen::Index j = 0; j < r; ++j) {
            double a, b;
            whitened_interval(spec.factor, rowval, spec.lower, spec.upper, j, eta[j], a, b);
            if (a > b) continue;  // floating-point pinch; keep the current value
            const double v = detail::rtnorm_std(rng, a, b);
            rowval += spec.factor.col(j) * (v - eta[j]);
            eta[j] = v;
        }
        if ((sweep & 1023) == 1023) rowval = spec.mean + spec.factor * eta;  // kill drift
        ++chain.proposals;
        if (sweep >= burn_in && (sweep - burn_in) % thinning == thinning - 1)
            chain.draws.row(got++) = rowval.cwiseMax(spec.lower).cwiseMin(spec.upper);
    }
    chain.accepted = got;
    chain.wall_seconds = seconds_since(t0);
    chain.draws.conservativeResize(got, q);
    assert_chain_in_bounds(spec, chain.draws);
    return chain;
}

SampleChain sample_gibbs_xi(const ConditionedGaussian& cg, const LinearConstraintSystem& sys,
                            const Eigen::VectorXd& start_xi, Eigen::Index count, int burn_in,
                            int thinning, std::uint64_t seed) {
    sys.validate();
    if (start_xi.size() != cg.size()) throw std::invalid_argument("sample_gibbs_xi: bad start length");
    if (count <= 0 || burn_in < 0 || thinning < 1)
        throw std::invalid_argument("sample_gibbs_xi: bad count/burn_in/thinning");
    if (!is_feasible(sys, start_xi, 1e-8))
        throw std::invalid_argument("sample_gibbs_xi: start violates the constraints");

    const Eigen::Index m = cg.size();
    const Eigen::Index q = sys.rows();

    // whitened scan with exact knot values: xi = mean + L eta with L the
    // (jittered) posterior factor, so the target over eta is iid standard
    // normal truncated by the rows of lambda * L
    const Eigen::MatrixXd fac = sys.lambda * cg.chol;  // q x m, dense
    Eigen::VectorXd eta = start_xi - cg.mean;
    cg.chol.triangularView<Eigen::Lower>().solveInPlace(eta);
    const Eigen::VectorXd base = sys.lambda * cg.mean;
    const Eigen::VectorXd lo_sh = sys.lower - base;  // bounds on fac * eta
    const Eigen::VectorXd hi_sh = sys.upper - base;

    Rng rng(seed);
    Eigen::VectorXd rowoff = fac * eta;

    SampleChain chain;
    chain.sampler = SamplerKind::Gibbs;
    chain.seed = seed;
    chain.burn_in = burn_in;
    chain.thinning = thinning;
    chain.draws.resize(count, q);
    chain.xi.resize(count, m);

    const auto t0 = Clock::now();
    const long long total_sweeps = burn_in + static_cast<long long>(count) * thinning;
    Eigen::Index got = 0;
    for (long long sweep = 0; sweep < total_sweeps; ++sweep) {
        for (Eigen::Index j = 0; j < m; ++j) {
            double a, b;
            whitened_interval(fac, rowoff, lo_sh, hi_sh, j, eta[j], a, b);
            if (a > b) continue;  // floating-point pinch; keep the current value
            const double v = detail::rtnorm_std(rng, a, b);
            rowoff += fac.col(j) * (v - eta[j]);
            eta[j] = v;
        }
        if ((sweep & 1023) == 1023) rowoff = fac * eta;  // kill drift
        ++chain.proposals;
        if (sweep >= burn_in && (sweep - burn_in) % thinning == thinning - 1) {
            chain.xi.row(got) = cg.mean + cg.chol.triangularView<Eigen::Lower>() * eta;
            chain.draws.row(got++) = base + rowoff;
        }
    }
    chain.accepted = got;
    chain.wall_seconds = seconds_since(t0);
    chain.draws.conservativeResize(got, q);
    chain.xi.conservativeResize(got, m);
    return chain;
}

SampleChain sample_hmc(const TruncatedGaussianSpec& spec, const Eigen::VectorXd& start,
                       Eigen::Index count, int burn_in, std::uint64_t seed) {
    spec.validate();
    if (start.size() != spec.size()) throw std::invalid_argument("sample_hmc: start has wrong length");
    check_within_bounds(spec, start, "sample_hmc start");
    if (count <= 0 || burn_in < 0) throw std::invalid_argument("sample_hmc: bad count/burn_in");

    const Eigen::Index q = spec.size();
    const Eigen::Index r = spec.rank();
    if (r == 0) throw std::invalid_argument("sample_hmc: covariance has rank zero");

    // whitened start: factor * x = start - mean (least squares; must be consistent)
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(spec.factor);
    Eigen::VectorXd x = qr.solve(start - spec.mean);
    if ((spec.factor * x - (start - spec.mean)).norm() > 1e-6 * (1.0 + start.norm()))
        throw std::invalid_argument("sample_hmc: start is outside the covariance support");

    // one-sided walls  f.x + g >= 0  from the finite box bounds
    std::vector<Eigen::Index> wall_coord;
    std::vector<double> wall_g;
    std::vector<int> wall_sign;  // +1: lower bound, -1: upper bound
    for (Eigen::Index i = 0; i < q; ++i) {
        if (spec.lower[i] > -INF) {
            wall_coord.push_back(i);
            wall_sign.push_back(+1);
            wall_g.push_back(spec.mean[i] - spec.lower[i]);
        }
        if (spec.upper[i] < INF) {
            wall_coord.push_back(i);
            wall_sign.push_back(-1);
            wall_g.push_back(spec.upper[i] - spec.mean[i]);
        }
    }
    const Eigen::Index nw = static_cast<Eigen::Index>(wall_coord.size());
    Eigen::MatrixXd walls(nw, r);
    Eigen::VectorXd gvec(nw), wall_sq(nw);
    for (Eigen::Index w = 0; w < nw; ++w) {
        walls.row(w) = double(wall_sign[w]) * spec.factor.row(wall_coord[w]);
        gvec[w] = wall_g[w];
        wall_sq[w] = walls.row(w).squaredNorm();
    }

    constexpr double TIME_TOL = 1e-12;
    constexpr double WALL_TOL = 1e-9;
    constexpr double PERIOD = M_PI / 2.0;
    constexpr int MAX_BOUNCES = 10000;

    Rng rng(seed);
    SampleChain chain;
    chain.sampler = SamplerKind::Hmc;
    chain.seed = seed;
    chain.burn_in = burn_in;
    chain.draws.resize(count, q);

    const auto t0 = Clock::now();
    Eigen::Index got = 0;
    const long long total_steps = burn_in + count;
    for (long long step = 0; step < total_steps; ++step) {
        const Eigen::VectorXd x_prev = x;
        bool ok = false;
        Eigen::VectorXd z;
        for (int attempt = 0; attempt < 50 && !ok; ++attempt) {
            Eigen::VectorXd pos = x_prev;
            Eigen::VectorXd vel = rng.normal_vec(r);

            // sitting on a wall and pointed outward: reflect before moving
            for (int guard = 0; guard < 200; ++guard) {
                bool fixed_any = false;
                const Eigen::VectorXd s = walls * pos + gvec;
                const Eigen::VectorXd fv = walls * vel;
                for (Eigen::Index w = 0; w < nw; ++w) {
                    if (s[w] <= WALL_TOL && fv[w] < 0.0 && wall_sq[w] > 0.0) {
                        vel -= (2.0 * fv[w] / wall_sq[w]) * walls.row(w).transpose();
                        fixed_any = true;
                        break;  // recompute dot products after each fix
                    }
                }
                if (!fixed_any) break;
            }

            double t_rem = PERIOD;
            int bounces = 0;
            while (true) {
                if (bounces > MAX_BOUNCES)
                    throw std::runtime_error("sample_hmc: more than 1e4 wall bounces in one trajectory");
                const Eigen::VectorXd pa = walls * vel;  // coefficient of sin t
                const Eigen::VectorXd pb = walls * pos;  // coefficient of cos t
                double t_hit = INF;
                Eigen::Index hit = -1;
                for (Eigen::Index w = 0; w < nw; ++w) {
                    const double u = std::hypot(pa[w], pb[w]);
                    if (u <= std::abs(gvec[w])) continue;  // trajectory never reaches this wall
                    const double phase = std::atan2(pb[w], pa[w]);
                    const double theta0 = std::asin(-gvec[w] / u);
                    for (const double theta : {theta0, M_PI - theta0}) {
                        double t = theta - phase;
                        while (t < TIME_TOL) t += 2.0 * M_PI;
                        while (t - 2.0 * M_PI >= TIME_TOL) t -= 2.0 * M_PI;
                        if (t < t_hit) {
                            t_hit = t;
                            hit = w;
                        }
                    }
                }
                if (t_hit >= t_rem) {
                    const double c = std::cos(t_rem), s = std::sin(t_rem);
                    pos = (vel * s + pos * c).eval();
                    break;
                }
                const double c = std::cos(t_hit), s = std::sin(t_hit);
                const Eigen::VectorXd new_pos = vel * s + pos * c;
                Eigen::VectorXd new_vel = vel * c - pos * s;
                const double fv = walls.row(hit).dot(new_vel);
                new_vel -= (2.0 * fv / wall_sq[hit]) * walls.row(hit).transpose();
                pos = new_pos;
                vel = new_vel;
                t_rem -= t_hit;
                ++bounces;
                if (t_rem <= TIME_TOL) break;
            }

            z = spec.mean + spec.factor * pos;
            double worst = 0.0;
            for (Eigen::Index i = 0; i < q; ++i)
                worst = std::max({worst, spec.lower[i] - z[i], z[i] - spec.upper[i]});
            if (worst <= 1e-8) {
                z = z.cwiseMax(spec.lower).cwiseMin(spec.upper);
                x = pos;
                ok = true;
            }
            // otherwise: floating-point trouble on this trajectory; redraw momentum
        }
        if (!ok)
            throw std::runtime_error("sample_hmc: could not complete a feasible trajectory");
        ++chain.proposals;
        if (step >= burn_in) chain.draws.row(got++) = z;
    }
    chain.accepted = got;
    chain.wall_seconds = seconds_since(t0);
    assert_chain_in_bounds(spec, chain.draws);
    return chain;
}

SampleChain sample_naive_rejection(const TruncatedGaussianSpec& spec, Eigen::Index count,
                                   std::uint64_t seed, long long max_proposals) {
    spec.validate();
    if (count <= 0) throw std::invalid_argument("sample_naive_rejection: count must be positive");
    const Eigen::Index q = spec.size();
    const Eigen::Index r = spec.rank();

    Rng rng(seed);
    SampleChain chain;
    chain.sampler = SamplerKind::NaiveRejection;
    chain.seed = seed;
    chain.draws.resize(count, q);

    const auto t0 = Clock::now();
    Eigen::Index got = 0;
    while (got < count) {
        if (max_proposals > 0 && chain.proposals >= max_proposals) {
            std::ostringstream msg;
            msg << "sample_naive_rejection: only " << got << "/" << count << " draws after "
                << chain.proposals << " proposals (acceptance ~" << chain.acceptance_rate() << ")";
            throw std::runtime_error(msg.str());
        }
        ++chain.proposals;
        const Eigen::VectorXd z = spec.mean + spec.factor * rng.normal_vec(r);
        bool feasible = true;
        for (Eigen::Index i = 0; i < q; ++i) {
            if (z[i] < spec.lower[i] || z[i] > spec.upper[i]) {
                feasible = false;
                break;
            }
        }
        if (feasible) {
            chain.draws.row(got++) = z;
            ++chain.accepted;
        }
    }
    chain.wall_seconds = seconds_since(t0);
    assert_chain_in_bounds(spec, chain.draws);
    return chain;
}

}  // namespace ineqgp
