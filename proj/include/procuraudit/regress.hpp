#pragma once

// Regression-residual detector: OLS via normal equations, standardized
// residuals, iterative outlier-excluding refit.

#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procuraudit/errors.hpp"

namespace procuraudit::regress {

struct LinearModel {
    std::vector<double> coefficients; // first entry pairs with the leading 1s column
    double residual_std = 0.0;
    std::size_t n_used = 0;
    std::set<std::size_t> excluded_rows;
};

struct Design {
    std::size_t n = 0, p = 0;
    std::vector<double> data; // row-major n x p, first column all 1s
    double at(std::size_t r, std::size_t c) const { return data[r * p + c]; }
};

namespace detail {

// Solve A x = b (symmetric positive semi-definite A from X^T X) by Gaussian
// elimination with partial pivoting. Near-zero pivot -> rank deficiency.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t p = b.size();
    double scale = 0.0;
    for (const auto& row : a)
        for (double v : row) scale = std::max(scale, std::fabs(v));
    const double tol = scale * p * 1e-13;
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) <= tol)
            throw SingularDesign("design matrix is rank-deficient");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            double factor = a[r][col] / a[col][col];
            for (std::size_t c = col; c < p; ++c) a[r][c] -= factor * a[col][c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(p);
    for (std::size_t i = 0; i < p; ++i) x[i] = b[i] / a[i][i];
    return x;
}

} // namespace detail

// OLS restricted to `rows` (all rows when empty mask not given).
inline LinearModel fit_ols_rows(const Design& X, const std::vector<double>& y,
                                const std::vector<std::size_t>& rows) {
    const std::size_t n = rows.size(), p = X.p;
    if (n <= p) throw SingularDesign("need more rows than coefficients");

    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (std::size_t r : rows) {
        for (std::size_t i = 0; i < p; ++i) {
            double xi = X.at(r, i);
            xty[i] += xi * y[r];
            for (std::size_t j = i; j < p; ++j) xtx[i][j] += xi * X.at(r, j);
        }
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < i; ++j) xtx[i][j] = xtx[j][i];

    LinearModel model;
    model.coefficients = detail::solve_linear(std::move(xtx), std::move(xty));
    model.n_used = n;
    double rss = 0.0;
    for (std::size_t r : rows) {
        double pred = 0.0;
        for (std::size_t i = 0; i < p; ++i) pred += X.at(r, i) * model.coefficients[i];
        double res = y[r] - pred;
        rss += res * res;
    }
    model.residual_std = std::sqrt(std::max(rss, 0.0) / static_cast<double>(n - p));
    return model;
}

inline LinearModel fit_ols(const Design& X, const std::vector<double>& y) {
    if (X.n != y.size()) throw DimensionError("X and y row counts differ");
    std::vector<std::size_t> rows(X.n);
    for (std::size_t i = 0; i < X.n; ++i) rows[i] = i;
    return fit_ols_rows(X, y, rows);
}

struct ResidualScores {
    std::vector<double> residual;
    std::vector<double> z;
    std::vector<int> overspend_flag; // one-sided: z > threshold
};

inline ResidualScores residual_scores(const LinearModel& model, const Design& X,
                                      const std::vector<double>& y, double z_threshold = 3.0) {
    if (X.n != y.size() || model.coefficients.size() != X.p)
        throw DimensionError("residual_scores dimension mismatch");
    ResidualScores out;
    out.residual.resize(X.n);
    out.z.resize(X.n);
    out.overspend_flag.resize(X.n);
    for (std::size_t r = 0; r < X.n; ++r) {
        double pred = 0.0;
        for (std::size_t i = 0; i < X.p; ++i) pred += X.at(r, i) * model.coefficients[i];
        double res = y[r] - pred;
        out.residual[r] = res;
        out.z[r] = model.residual_std > 0.0 ? res / model.residual_std : 0.0;
        out.overspend_flag[r] = out.z[r] > z_threshold ? 1 : 0;
    }
    return out;
}

// Fit, drop |z| > threshold rows from the fitting set, refit; repeat until
// stable or max_iter. The final model still scores every row.
inline LinearModel robust_fit(const Design& X, const std::vector<double>& y,
                              double z_threshold = 3.0, std::size_t max_iter = 5) {
    if (X.n != y.size()) throw DimensionError("X and y row counts differ");
    std::vector<std::size_t> rows(X.n);
    for (std::size_t i = 0; i < X.n; ++i) rows[i] = i;

    LinearModel model = fit_ols_rows(X, y, rows);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // sigma at numerical-noise level means an effectively exact fit;
        // z-scores would be pure rounding error
        double y_scale = 0.0;
        for (std::size_t r : rows) y_scale = std::max(y_scale, std::fabs(y[r]));
        if (model.residual_std <= 1e-12 * y_scale) break;
        std::vector<std::size_t> kept;
        kept.reserve(rows.size());
        std::vector<std::size_t> dropped;
        for (std::size_t r : rows) {
            double pred = 0.0;
            for (std::size_t i = 0; i < X.p; ++i) pred += X.at(r, i) * model.coefficients[i];
            double res = y[r] - pred;
            double z = model.residual_std > 0.0 ? res / model.residual_std : 0.0;
            if (std::fabs(z) > z_threshold)
                dropped.push_back(r);
            else
                kept.push_back(r);
        }
        if (dropped.empty()) break;
        if (kept.size() <= X.p)
            throw DegenerateAfterExclusion("outlier exclusion left too few rows");
        for (std::size_t r : dropped) model.excluded_rows.insert(r);
        auto excluded = model.excluded_rows;
        rows = std::move(kept);
        model = fit_ols_rows(X, y, rows);
        model.excluded_rows = std::move(excluded);
    }
    return model;
}

inline nlohmann::json model_to_json(const LinearModel& model) {
    return nlohmann::json{{"coefficients", model.coefficients},
                          {"sigma", model.residual_std},
                          {"n_used", model.n_used},
                          {"excluded", model.excluded_rows}};
}

} // namespace procuraudit::regress
