#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace spamwatch {

// Solves the Yule-Walker system [autocov(|i-j|)] w = autocov(1..order) by
// Levinson-Durbin, falling back to a ridge-regularized dense solve when the
// recursion degenerates. autocov.size() must be order + 1.
std::vector<double> solve_yule_walker(std::span<const double> autocov, int order);

// Sequentially discounting AR model. With discount r in (0,1) the sufficient
// statistics follow the exponential-forgetting recursions
//   mu   <- (1-r) mu + r v
//   C_j  <- (1-r) C_j + r (v_i - mu)(v_{i-j} - mu)
//   sigma<- (1-r) sigma + r (v_i - vhat_i)^2
// and the coefficients solve the discounted Yule-Walker system each step.
// With r == 0 the objective reduces to the equal-weight likelihood, so the
// model maintains exact batch statistics incrementally (raw lagged sums),
// matching a from-scratch batch fit to floating-point accuracy.
class SdarModel {
public:
    SdarModel() = default;
    SdarModel(int order, double discount);

    // Folds in the next value and returns the squared one-step forecast
    // error (v - vhat)^2, or nothing during warm-up (< order+1 values seen).
    // The forecast uses coefficients updated with v, per the online scheme.
    std::optional<double> step(double v);

    std::optional<double> last_forecast() const { return last_forecast_; }
    int order() const { return order_; }
    double discount() const { return discount_; }
    std::int64_t count() const { return n_; }
    double mean() const;
    double error_variance() const;                 // sigma
    std::vector<double> autocovariances() const;   // C_0..C_k
    const std::vector<double>& coefficients() const { return omega_; }

    // Snapshot support: raw state, exact round-trip.
    struct State {
        int order = 0;
        double discount = 0.0;
        std::int64_t n = 0;
        std::vector<double> recent;
        double mu = 0.0;
        std::vector<double> cov;
        double sum = 0.0;
        std::vector<double> lag_products;
        std::vector<double> head;
        double sigma = 0.0;
        std::vector<double> omega;
    };
    State state() const;
    static SdarModel from_state(const State& s);

private:
    void refresh_coefficients();
    double forecast_from_recent() const;

    int order_ = 1;
    double discount_ = 0.0;
    std::int64_t n_ = 0;
    std::vector<double> recent_;  // last values, newest at back, size <= order+1

    // discounted mode (r > 0)
    double mu_ = 0.0;
    std::vector<double> cov_;  // C_0..C_k

    // equal-weight mode (r == 0): exact raw sums
    double sum_ = 0.0;
    std::vector<double> lag_products_;  // P_j = sum v_i * v_{i-j}
    std::vector<double> head_;          // first `order` values

    double sigma_ = 0.0;
    std::vector<double> omega_;
    std::optional<double> last_forecast_;
};

// Least-squares AR fit over a short window, used by the local detector.
// The window is mean-centered; the effective order is min(order, n-1) so a
// window of exactly `order` values still yields an informative fit; the
// normal equations carry a ridge term to survive constant or degenerate
// windows. Deterministic and closed-form.
struct WindowArFit {
    double mean = 0.0;
    std::vector<double> coefficients;  // lag 1 first

    // One-step forecast given the values immediately before the target,
    // newest last. Needs at least coefficients.size() values.
    double predict(std::span<const double> history) const;
};

WindowArFit fit_ar_window(std::span<const double> window, int order, double ridge = 1e-6);

}  // namespace spamwatch
