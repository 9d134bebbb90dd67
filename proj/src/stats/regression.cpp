#include <algorithm>
#include <cmath>
#include <numeric>

#include "trichome/dataset.hpp"
#include "trichome/error.hpp"
#include "trichome/linalg.hpp"
#include "trichome/stats.hpp"

namespace trichome::stats {

double quantile_type7(std::vector<double> values, double q) {
    if (values.empty()) {
        throw InputError("quantile of empty sample");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw InputError("quantile level must be in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

LinearFit ols(std::span<const std::vector<double>> columns, std::span<const double> y) {
    const std::size_t n = y.size();
    const std::size_t p = columns.size() + 1;
    for (const auto& c : columns) {
        if (c.size() != n) {
            throw InputError("ols: column length mismatch");
        }
    }
    if (n < p) {
        throw InputError("ols: fewer rows than parameters");
    }
    auto x_at = [&](std::size_t row, std::size_t j) { return j == 0 ? 1.0 : columns[j - 1][row]; };
    const int pi = static_cast<int>(p);
    linalg::Matrix xtx(pi, pi, 0.0);
    std::vector<double> xty(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            const double xa = x_at(i, a);
            xty[a] += xa * y[i];
            for (std::size_t b = 0; b < p; ++b) {
                xtx(static_cast<int>(a), static_cast<int>(b)) += xa * x_at(i, b);
            }
        }
    }
    LinearFit fit;
    const auto beta = linalg::solve(xtx, xty);
    if (!beta) {
        fit.singular = true;
        fit.coefficients.assign(p, 0.0);
        fit.r2 = 1.0;
        return fit;
    }
    fit.coefficients = *beta;
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = 0.0;
        for (std::size_t a = 0; a < p; ++a) {
            pred += fit.coefficients[a] * x_at(i, a);
        }
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

VifResult vif(std::span<const std::vector<double>> columns) {
    const std::size_t k = columns.size();
    if (k < 2) {
        throw InputError("vif: need at least 2 features");
    }
    const std::size_t n = columns.front().size();
    if (n < k + 2) {
        throw InputError("vif: need at least features + 2 rows");
    }
    VifResult out;
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<std::vector<double>> others;
        for (std::size_t m = 0; m < k; ++m) {
            if (m != j) {
                others.push_back(columns[m]);
            }
        }
        const LinearFit fit = ols(others, columns[j]);
        // A constant target has zero variance: R^2 is undefined, which we
        // treat like exact dependence on the intercept.
        double r2 = fit.r2;
        bool capped = fit.singular;
        const double mean = std::accumulate(columns[j].begin(), columns[j].end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double v : columns[j]) {
            ss += (v - mean) * (v - mean);
        }
        if (ss == 0.0) {
            capped = true;
        }
        r2 = std::min(r2, 1.0 - 1e-12);
        double value = 1.0 / (1.0 - r2);
        if (capped || value >= kVifCap) {
            capped = true;
            value = kVifCap;
        }
        out.vif.push_back(value);
        out.capped.push_back(capped);
    }
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw InputError("fit_line: length mismatch");
    }
    if (x.size() < 2) {
        throw InputError("fit_line: need at least 2 points");
    }
    std::vector<std::vector<double>> cols{std::vector<double>(x.begin(), x.end())};
    const LinearFit fit = ols(cols, y);
    if (fit.singular) {
        throw InputError("fit_line: x has no variation");
    }
    return {fit.coefficients[1], fit.coefficients[0], fit.r2, x.size()};
}

std::vector<Stratum> stratified_ols(const ml::Dataset& ds, std::vector<double> percentile_cuts) {
    if (ds.records.empty()) {
        throw InputError("stratified_ols: empty dataset");
    }
    if (!std::is_sorted(percentile_cuts.begin(), percentile_cuts.end())) {
        throw InputError("stratified_ols: cuts must be ascending");
    }
    std::vector<double> res;
    for (const auto& r : ds.records) {
        res.push_back(r.resolution);
    }
    std::vector<double> cut_values;
    for (double c : percentile_cuts) {
        if (!(c > 0.0 && c < 100.0)) {
            throw InputError("stratified_ols: percentile cuts must lie in (0, 100)");
        }
        cut_values.push_back(quantile_type7(res, c / 100.0));
    }
    const std::size_t strata = cut_values.size() + 1;
    // Stratum 0: res < cut0; last: res > cut_last; middle: everything else
    // between consecutive cuts (inclusive at both ends where not claimed).
    auto stratum_of = [&](double v) -> std::size_t {
        if (cut_values.empty()) {
            return 0;
        }
        if (v < cut_values.front()) {
            return 0;
        }
        if (v > cut_values.back()) {
            return strata - 1;
        }
        for (std::size_t i = 1; i < cut_values.size(); ++i) {
            if (v < cut_values[i]) {
                return i;
            }
        }
        return cut_values.size() - 1;
    };
    std::vector<std::vector<double>> xs(strata);
    std::vector<std::vector<double>> ys(strata);
    for (const auto& r : ds.records) {
        const std::size_t s = stratum_of(r.resolution);
        xs[s].push_back(r.nitrate_ppm);
        ys[s].push_back(r.nnd);
    }
    std::vector<Stratum> out;
    for (std::size_t s = 0; s < strata; ++s) {
        Stratum st;
        if (strata == 1) {
            st.name = "all";
        } else if (s == 0) {
            st.name = "below_p" + ml::format_number(percentile_cuts.front());
        } else if (s == strata - 1) {
            st.name = "above_p" + ml::format_number(percentile_cuts.back());
        } else {
            st.name = "p" + ml::format_number(percentile_cuts[s - 1]) + "_p" + ml::format_number(percentile_cuts[s]);
        }
        st.n = xs[s].size();
        std::vector<double> rs;
        for (const auto& r : ds.records) {
            if (stratum_of(r.resolution) == s) {
                rs.push_back(r.resolution);
            }
        }
        if (!rs.empty()) {
            st.resolution_lo = *std::min_element(rs.begin(), rs.end());
            st.resolution_hi = *std::max_element(rs.begin(), rs.end());
        }
        if (st.n >= 3) {
            const double x0 = xs[s].front();
            const bool varies = std::any_of(xs[s].begin(), xs[s].end(), [&](double v) { return v != x0; });
            if (varies) {
                st.fit = fit_line(xs[s], ys[s]);
            }
        }
        out.push_back(std::move(st));
    }
    return out;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InputError("pearson_r: need two equal-length samples of size >= 2");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

double rmse(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size() || truth.empty()) {
        throw InputError("rmse: need two equal-length nonempty samples");
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ss += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    }
    return std::sqrt(ss / static_cast<double>(truth.size()));
}

double r_squared(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size() || truth.empty()) {
        throw InputError("r_squared: need two equal-length nonempty samples");
    }
    const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
        ss_tot += (truth[i] - mean) * (truth[i] - mean);
    }
    if (ss_tot == 0.0) {
        return ss_res == 0.0 ? 1.0 : 0.0;
    }
    return 1.0 - ss_res / ss_tot;
}

}  // namespace trichome::stats
