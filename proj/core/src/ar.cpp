#include "spamwatch/ar.hpp"

#include <cmath>
#include <stdexcept>

namespace spamwatch {

namespace {

// Dense solve of (A + ridge*I) x = b by Gaussian elimination with partial
// pivoting. Small systems only (order <= ~8).
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b,
                                double ridge) {
    const std::size_t n = b.size();
    for (std::size_t i = 0; i < n; ++i) a[i][i] += ridge;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        }
        if (std::fabs(a[pivot][col]) < 1e-300) {
            return std::vector<double>(n, 0.0);
        }
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    for (double& v : x) {
        if (!std::isfinite(v)) return std::vector<double>(n, 0.0);
    }
    return x;
}

std::vector<double> solve_toeplitz_regularized(std::span<const double> autocov, int order) {
    const auto n = static_cast<std::size_t>(order);
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    std::vector<double> b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        b[i] = autocov[i + 1];
        for (std::size_t j = 0; j < n; ++j) {
            a[i][j] = autocov[i >= j ? i - j : j - i];
        }
    }
    const double ridge = 1e-6 * std::fabs(autocov[0]) + 1e-30;
    return solve_dense(std::move(a), std::move(b), ridge);
}

}  // namespace

std::vector<double> solve_yule_walker(std::span<const double> autocov, int order) {
    if (order < 1 || autocov.size() != static_cast<std::size_t>(order) + 1) {
        throw std::invalid_argument("yule-walker: need autocovariances 0..order");
    }
    std::vector<double> phi(static_cast<std::size_t>(order), 0.0);
    const double c0 = autocov[0];
    if (!(c0 > 0.0) || !std::isfinite(c0)) {
        return phi;  // constant (or degenerate) series: flat predictor
    }

    double err = c0;
    std::vector<double> prev(phi.size(), 0.0);
    for (int m = 1; m <= order; ++m) {
        double acc = autocov[static_cast<std::size_t>(m)];
        for (int j = 1; j < m; ++j) {
            acc -= phi[static_cast<std::size_t>(j - 1)] * autocov[static_cast<std::size_t>(m - j)];
        }
        const double kappa = acc / err;
        if (!std::isfinite(kappa) || std::fabs(kappa) >= 1.0) {
            return solve_toeplitz_regularized(autocov, order);
        }
        prev = phi;
        phi[static_cast<std::size_t>(m - 1)] = kappa;
        for (int j = 1; j < m; ++j) {
            phi[static_cast<std::size_t>(j - 1)] =
                prev[static_cast<std::size_t>(j - 1)] - kappa * prev[static_cast<std::size_t>(m - j - 1)];
        }
        err *= (1.0 - kappa * kappa);
        if (!(err > 0.0) || !std::isfinite(err)) {
            return solve_toeplitz_regularized(autocov, order);
        }
    }
    return phi;
}

SdarModel::SdarModel(int order, double discount) : order_(order), discount_(discount) {
    if (order < 1) throw std::invalid_argument("AR order must be >= 1");
    if (discount < 0.0 || discount >= 1.0) {
        throw std::invalid_argument("discount must lie in [0, 1)");
    }
    cov_.assign(static_cast<std::size_t>(order) + 1, 0.0);
    lag_products_.assign(static_cast<std::size_t>(order) + 1, 0.0);
    omega_.assign(static_cast<std::size_t>(order), 0.0);
}

double SdarModel::mean() const {
    if (discount_ > 0.0) return mu_;
    return n_ > 0 ? sum_ / static_cast<double>(n_) : 0.0;
}

double SdarModel::error_variance() const { return sigma_; }

std::vector<double> SdarModel::autocovariances() const {
    if (discount_ > 0.0) return cov_;
    std::vector<double> c(static_cast<std::size_t>(order_) + 1, 0.0);
    if (n_ == 0) return c;
    const double n = static_cast<double>(n_);
    const double mu = sum_ / n;
    for (int j = 0; j <= order_; ++j) {
        if (n_ <= j) break;
        double tail = 0.0;  // sum of the last j values (newest included)
        for (int t = 0; t < j; ++t) tail += recent_[recent_.size() - 1 - static_cast<std::size_t>(t)];
        double head = 0.0;  // sum of the first j values
        for (int t = 0; t < j; ++t) head += head_[static_cast<std::size_t>(t)];
        const double nj = static_cast<double>(n_ - j);
        c[static_cast<std::size_t>(j)] =
            (lag_products_[static_cast<std::size_t>(j)] - mu * (sum_ - tail) -
             mu * (sum_ - head) + nj * mu * mu) / n;
    }
    return c;
}

void SdarModel::refresh_coefficients() {
    const auto cov = autocovariances();
    omega_ = solve_yule_walker(cov, order_);
    if (discount_ == 0.0) {
        double resid = cov[0];
        for (int j = 1; j <= order_; ++j) {
            resid -= omega_[static_cast<std::size_t>(j - 1)] * cov[static_cast<std::size_t>(j)];
        }
        sigma_ = resid > 0.0 ? resid : 0.0;
    }
}

double SdarModel::forecast_from_recent() const {
    // recent_ holds ... v_{i-1}, v_i; regressors are the order_ values before v_i.
    const double mu = mean();
    double vhat = mu;
    const std::size_t sz = recent_.size();
    for (int j = 1; j <= order_; ++j) {
        vhat += omega_[static_cast<std::size_t>(j - 1)] *
                (recent_[sz - 1 - static_cast<std::size_t>(j)] - mu);
    }
    return vhat;
}

std::optional<double> SdarModel::step(double v) {
    n_ += 1;
    if (discount_ > 0.0) {
        const double r = discount_;
        mu_ = (1.0 - r) * mu_ + r * v;
        for (int j = 0; j <= order_; ++j) {
            if (n_ <= j) break;
            const double lagged =
                j == 0 ? v : recent_[recent_.size() - static_cast<std::size_t>(j)];
            cov_[static_cast<std::size_t>(j)] =
                (1.0 - r) * cov_[static_cast<std::size_t>(j)] + r * (v - mu_) * (lagged - mu_);
        }
    } else {
        sum_ += v;
        lag_products_[0] += v * v;
        for (int j = 1; j <= order_; ++j) {
            if (recent_.size() < static_cast<std::size_t>(j)) break;
            lag_products_[static_cast<std::size_t>(j)] +=
                v * recent_[recent_.size() - static_cast<std::size_t>(j)];
        }
        if (head_.size() < static_cast<std::size_t>(order_)) head_.push_back(v);
    }

    recent_.push_back(v);
    if (recent_.size() > static_cast<std::size_t>(order_) + 1) {
        recent_.erase(recent_.begin());
    }

    if (n_ >= 2) refresh_coefficients();

    if (n_ < static_cast<std::int64_t>(order_) + 1) {
        last_forecast_.reset();
        return std::nullopt;
    }
    const double vhat = forecast_from_recent();
    const double err = (v - vhat) * (v - vhat);
    if (discount_ > 0.0) {
        sigma_ = (1.0 - discount_) * sigma_ + discount_ * err;
    }
    last_forecast_ = vhat;
    return err;
}

SdarModel::State SdarModel::state() const {
    return State{order_, discount_, n_,     recent_, mu_,    cov_,
                 sum_,   lag_products_, head_, sigma_,  omega_};
}

SdarModel SdarModel::from_state(const State& s) {
    SdarModel m(s.order, s.discount);
    m.n_ = s.n;
    m.recent_ = s.recent;
    m.mu_ = s.mu;
    m.cov_ = s.cov;
    m.sum_ = s.sum;
    m.lag_products_ = s.lag_products;
    m.head_ = s.head;
    m.sigma_ = s.sigma;
    m.omega_ = s.omega;
    return m;
}

double WindowArFit::predict(std::span<const double> history) const {
    double vhat = mean;
    const std::size_t p = coefficients.size();
    for (std::size_t l = 1; l <= p; ++l) {
        vhat += coefficients[l - 1] * (history[history.size() - l] - mean);
    }
    return vhat;
}

WindowArFit fit_ar_window(std::span<const double> window, int order, double ridge) {
    WindowArFit fit;
    const std::size_t n = window.size();
    if (n == 0) return fit;
    double sum = 0.0;
    for (double v : window) sum += v;
    fit.mean = sum / static_cast<double>(n);

    const int p = std::min<int>(order, static_cast<int>(n) - 1);
    if (p < 1) return fit;  // flat predictor

    const auto np = static_cast<std::size_t>(p);
    std::vector<std::vector<double>> a(np, std::vector<double>(np, 0.0));
    std::vector<double> b(np, 0.0);
    for (std::size_t m = np; m < n; ++m) {
        const double y = window[m] - fit.mean;
        for (std::size_t i = 0; i < np; ++i) {
            const double xi = window[m - 1 - i] - fit.mean;
            b[i] += xi * y;
            for (std::size_t j = i; j < np; ++j) {
                const double xj = window[m - 1 - j] - fit.mean;
                a[i][j] += xi * xj;
            }
        }
    }
    for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t j = 0; j < i; ++j) a[i][j] = a[j][i];
    }
    fit.coefficients = solve_dense(std::move(a), std::move(b), ridge);
    return fit;
}

}  // namespace spamwatch
