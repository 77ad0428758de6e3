#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>

#include "ineqgp/posterior.hpp"

namespace ineqgp {

enum class SamplerKind { Rsm, Gibbs, Hmc, NaiveRejection };

const char* sampler_name(SamplerKind k);  // "rsm" | "gibbs" | "hmc" | "naive"
SamplerKind parse_sampler(const std::string& name);

struct SampleChain {
    Eigen::MatrixXd draws;        // one row per stored draw, in spec coordinates
    Eigen::MatrixXd xi;           // knot values, filled only by samplers that work in xi
    SamplerKind sampler = SamplerKind::Rsm;
    int burn_in = 0;
    int thinning = 1;
    long long proposals = 0;      // proposals (rejection samplers) or raw steps (MCMC)
    long long accepted = 0;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;

    Eigen::Index count() const { return draws.rows(); }
    double acceptance_rate() const { return proposals > 0 ? double(accepted) / double(proposals) : 0.0; }
};

// Deterministic RNG wrapper so chains are reproducible bit for bit.
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform();             // (0, 1)
    double normal();
    Eigen::VectorXd normal_vec(Eigen::Index n);
};

// Rejection sampling from the mode: propose N(mode, cov), reject infeasible
// draws, accept with probability exp((mean-mode)^T cov^+ (z-mode)), which is a
// valid bound exactly when `mode` maximizes the density over the box. Draws are
// independent. A `max_proposals` cap (0 = unlimited) returns a short chain once
// hit; a measured acceptance rate below 1e-6 after 1e7 proposals aborts.
SampleChain sample_rsm(const TruncatedGaussianSpec& spec, const Eigen::VectorXd& mode,
                       Eigen::Index count, std::uint64_t seed, long long max_proposals = 0);

// Gibbs scan in whitened coordinates (z = mean + factor * eta): each conditional
// is a standard normal truncated to the interval intersection over all box rows,
// so mixing does not degrade when cov is strongly correlated. Requires cov
// positive definite. Stores every `thinning`-th sweep after `burn_in` sweeps.
SampleChain sample_gibbs(const TruncatedGaussianSpec& spec, const Eigen::VectorXd& start,
                         Eigen::Index count, int burn_in, int thinning, std::uint64_t seed);

// Same whitened scan phrased over the knot posterior directly; handles q > m
// (singular image covariance) and fills chain.xi with exact knot values.
// Draws are returned in lambda coordinates.
SampleChain sample_gibbs_xi(const ConditionedGaussian& cg, const LinearConstraintSystem& sys,
                            const Eigen::VectorXd& start_xi, Eigen::Index count, int burn_in,
                            int thinning, std::uint64_t seed);

// Exact Hamiltonian dynamics with wall reflections: harmonic trajectories of
// duration pi/2 between analytically solved wall hits. No rejection step.
SampleChain sample_hmc(const TruncatedGaussianSpec& spec, const Eigen::VectorXd& start,
                       Eigen::Index count, int burn_in, std::uint64_t seed);

// Plain rejection against the untruncated Gaussian; the slow exact reference.
// Throws if `max_proposals` runs out before `count` draws are in.
SampleChain sample_naive_rejection(const TruncatedGaussianSpec& spec, Eigen::Index count,
                                   std::uint64_t seed, long long max_proposals = 100'000'000);

namespace detail {
double norm_cdf(double x);
double norm_ppf(double p);
// Standard normal restricted to [a, b]: inverse CDF for moderate intervals,
// exponential-proposal rejection past 4 sd, complementary inverse CDF as the
// deep-tail fallback.
double rtnorm_std(Rng& rng, double a, double b);
}  // namespace detail

}  // namespace ineqgp
