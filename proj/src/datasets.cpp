#include "ineqgp/datasets.hpp"

#include <cmath>
#include <stdexcept>

#include "ineqgp/tmvn.hpp"

namespace ineqgp {

Dataset toy_dataset() {
    Dataset d;
    d.x.resize(5, 1);
    d.x << 0.0, 0.2, 0.5, 0.75, 1.0;
    d.y.resize(5);
    d.y << 0.0, -0.5, -0.3, 0.5, 0.4;
    return d;
}

Dataset toy_dataset_noisy(std::uint64_t seed) {
    Dataset d = toy_dataset();
    Rng rng(seed);
    for (Eigen::Index i = 0; i < d.y.size(); ++i) d.y[i] += 0.05 * rng.normal();
    return d;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-10.0 * (x - 0.5))); }

double sigmoid_range() { return sigmoid(1.0) - sigmoid(0.0); }

Dataset sigmoid_dataset(int n, double noise_fraction, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sigmoid_dataset: n must be positive");
    Rng rng(seed);
    Dataset d;
    d.x.resize(n, 1);
    d.y.resize(n);
    const double sd = noise_fraction * sigmoid_range();
    for (int i = 0; i < n; ++i) {
        d.x(i, 0) = rng.uniform();
        d.y[i] = sigmoid(d.x(i, 0)) + sd * rng.normal();
    }
    return d;
}

double tensor2d_f(double x1, double x2) { return x1 + x2 * x2; }

Dataset tensor2d_dataset(int n, double noise_fraction, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.x = uniform_points(n, 2, rng.gen());
    d.y.resize(n);
    const double sd = noise_fraction * 2.0;
    for (int i = 0; i < n; ++i)
        d.y[i] = tensor2d_f(d.x(i, 0), d.x(i, 1)) + sd * rng.normal();
    return d;
}

double tensor5d_f(const Eigen::VectorXd& x) {
    // Monotone terms in x0/x1; oscillatory and even terms elsewhere keep the
    // remaining coordinates active but unordered.
    return 0.2 + 2.0 * x[0] + x[1] * x[1] + 0.3 * std::sin(M_PI * x[2]) + 0.2 * x[3] * x[3] +
           0.1 * x[4];
}

Dataset tensor5d_dataset(int n, double noise_fraction, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.x = uniform_points(n, 5, rng.gen());
    d.y.resize(n);
    const double range = 3.6;  // sup - inf of tensor5d_f on the unit cube
    const double sd = noise_fraction * range;
    for (int i = 0; i < n; ++i) d.y[i] = tensor5d_f(d.x.row(i).transpose()) + sd * rng.normal();
    return d;
}

Eigen::MatrixXd uniform_points(int n, int d, std::uint64_t seed) {
    if (n < 1 || d < 1) throw std::invalid_argument("uniform_points: need n, d >= 1");
    Rng rng(seed);
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = rng.uniform();
    return x;
}

}  // namespace ineqgp
