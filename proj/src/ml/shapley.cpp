#include <bit>

#include "trichome/error.hpp"
#include "trichome/ml.hpp"

namespace trichome::ml {

ShapleyResult shapley(const GbdtModel& model, std::span<const double> x, const FeatureMatrix& background) {
    const auto m = static_cast<std::size_t>(model.n_features);
    if (x.size() != m) {
        throw InputError("shapley: feature count mismatch");
    }
    if (background.empty()) {
        throw InputError("shapley: empty background");
    }
    if (m > 20) {
        throw InputError("shapley: too many features for exact enumeration");
    }
    const std::size_t coalitions = std::size_t{1} << m;
    std::vector<double> value(coalitions, 0.0);
    std::vector<double> row(m);
    for (std::size_t mask = 0; mask < coalitions; ++mask) {
        double sum = 0.0;
        for (const auto& b : background) {
            if (b.size() != m) {
                throw InputError("shapley: background row has the wrong width");
            }
            for (std::size_t j = 0; j < m; ++j) {
                row[j] = (mask >> j) & 1U ? x[j] : b[j];
            }
            sum += model.margin(row);
        }
        value[mask] = sum / static_cast<double>(background.size());
    }
    // weight(s) = s! (m - s - 1)! / m!
    std::vector<double> fact(m + 1, 1.0);
    for (std::size_t k = 1; k <= m; ++k) {
        fact[k] = fact[k - 1] * static_cast<double>(k);
    }
    std::vector<double> weight(m);
    for (std::size_t s = 0; s < m; ++s) {
        weight[s] = fact[s] * fact[m - s - 1] / fact[m];
    }
    ShapleyResult r;
    r.base = value[0];
    r.phi.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        for (std::size_t mask = 0; mask < coalitions; ++mask) {
            if ((mask & bit) != 0) {
                continue;
            }
            const auto s = static_cast<std::size_t>(std::popcount(mask));
            r.phi[i] += weight[s] * (value[mask | bit] - value[mask]);
        }
    }
    return r;
}

}  // namespace trichome::ml
