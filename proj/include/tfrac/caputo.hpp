#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tfrac {

/// Weights of the L1 discretization of the Caputo derivative of order alpha
/// on a uniform grid t_n = n*dt, n = 0..steps.
///
///   D^alpha u(t_n) ~ 1/s * sum_{k=1}^{n} b_{n+1-k} (u^k - u^{k-1})
///
/// with s = dt^alpha * Gamma(2 - alpha), b_n = n^{1-alpha} - (n-1)^{1-alpha}
/// and the history weights c_k = 2k^{1-alpha} - (k+1)^{1-alpha} - (k-1)^{1-alpha}.
/// Immutable once built.
class CaputoScheme {
public:
    CaputoScheme(double alpha, double dt, int steps) : alpha_(alpha), dt_(dt), steps_(steps) {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw std::invalid_argument("fractional order must lie in (0,1), got " + std::to_string(alpha));
        }
        if (!(dt > 0.0) || !std::isfinite(dt)) {
            throw std::invalid_argument("time step must be positive, got " + std::to_string(dt));
        }
        if (steps < 1) throw std::invalid_argument("need at least one time step");

        s_ = std::pow(dt, alpha) * std::tgamma(2.0 - alpha);

        const double p = 1.0 - alpha;
        b_.resize(static_cast<std::size_t>(steps));
        for (int n = 1; n <= steps; ++n) {
            // n^p - (n-1)^p = -n^p * expm1(p*log1p(-1/n)), exact at n = 1 as well
            const double nd = n;
            b_[n - 1] = -std::pow(nd, p) * std::expm1(p * std::log1p(-1.0 / nd));
        }
        c_.resize(static_cast<std::size_t>(steps - 1));
        for (int k = 1; k < steps; ++k) {
            // k^p * (2 - (1+1/k)^p - (1-1/k)^p)
            const double kd = k;
            const double up = std::expm1(p * std::log1p(1.0 / kd));
            const double down = std::expm1(p * std::log1p(-1.0 / kd));
            c_[k - 1] = -std::pow(kd, p) * (up + down);
        }
    }

    double alpha() const { return alpha_; }
    double dt() const { return dt_; }
    int steps() const { return steps_; }
    double time(int n) const { return n * dt_; }

    /// dt^alpha * Gamma(2 - alpha)
    double s() const { return s_; }
    /// b_n, 1 <= n <= steps
    double b(int n) const { return b_.at(static_cast<std::size_t>(n - 1)); }
    /// c_k, 1 <= k <= steps - 1
    double c(int k) const { return c_.at(static_cast<std::size_t>(k - 1)); }

    const std::vector<double>& b_weights() const { return b_; }
    const std::vector<double>& c_weights() const { return c_; }

private:
    double alpha_;
    double dt_;
    int steps_;
    double s_ = 0.0;
    std::vector<double> b_;
    std::vector<double> c_;
};

inline CaputoScheme build_scheme(double alpha, double dt, int steps) { return CaputoScheme(alpha, dt, steps); }

/// c_1 beta^{n-1} + ... + c_{n-1} beta^1 + b_n beta^0, the memory term of step n.
/// `past` holds beta^0 .. beta^{n-1}.
inline Eigen::VectorXd history_combination(const CaputoScheme& scheme, int n,
                                           std::span<const Eigen::VectorXd> past) {
    if (n < 1 || n > scheme.steps()) {
        throw std::out_of_range("history step " + std::to_string(n) + " outside 1.." +
                                std::to_string(scheme.steps()));
    }
    if (past.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("history step " + std::to_string(n) + " needs " + std::to_string(n) +
                                    " past states, got " + std::to_string(past.size()));
    }
    const Eigen::Index dim = past[0].size();
    for (const auto& v : past) {
        if (v.size() != dim) throw std::invalid_argument("past states differ in dimension");
    }
    Eigen::VectorXd out = scheme.b(n) * past[0];
    for (int k = 1; k < n; ++k) out += scheme.c(k) * past[static_cast<std::size_t>(n - k)];
    return out;
}

}  // namespace tfrac
