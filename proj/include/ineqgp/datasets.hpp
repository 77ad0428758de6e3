#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace ineqgp {

struct Dataset {
    Eigen::MatrixXd x;  // n x d
    Eigen::VectorXd y;
};

// Five-point 1D dataset used by the bounded-emulation experiments.
Dataset toy_dataset();
// Same points with additive N(0, 0.05^2) noise (5% of the output range).
Dataset toy_dataset_noisy(std::uint64_t seed);

// Steep sigmoid centered at 1/2.
double sigmoid(double x);
double sigmoid_range();  // sigmoid(1) - sigmoid(0)
// n uniform inputs on [0,1]; noise sd = noise_fraction * sigmoid_range().
Dataset sigmoid_dataset(int n, double noise_fraction, std::uint64_t seed);

// f(x1, x2) = x1 + x2^2: positive on the unit square, nondecreasing in both
// coordinates. noise sd = noise_fraction * 2 (the function's range).
double tensor2d_f(double x1, double x2);
Dataset tensor2d_dataset(int n, double noise_fraction, std::uint64_t seed);

// Positive 5D function, nondecreasing in dimensions 0 and 1 only.
double tensor5d_f(const Eigen::VectorXd& x);
Dataset tensor5d_dataset(int n, double noise_fraction, std::uint64_t seed);

// Uniform points on [0,1]^d, one row per point.
Eigen::MatrixXd uniform_points(int n, int d, std::uint64_t seed);

}  // namespace ineqgp
