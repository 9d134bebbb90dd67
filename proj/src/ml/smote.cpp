#include <algorithm>
#include <numeric>
#include <random>

#include "trichome/error.hpp"
#include "trichome/ml.hpp"

namespace trichome::ml {

Resampled smote(const FeatureMatrix& x, std::span<const int> y, int k, std::uint64_t seed) {
    if (x.size() != y.size()) {
        throw InputError("smote: row and label counts differ");
    }
    if (k < 1) {
        throw InputError("smote: k must be positive");
    }
    std::vector<std::size_t> ones;
    std::vector<std::size_t> zeros;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1) {
            ones.push_back(i);
        } else if (y[i] == 0) {
            zeros.push_back(i);
        } else {
            throw InputError("smote: labels must be 0 or 1");
        }
    }
    if (ones.empty() || zeros.empty()) {
        throw InputError("smote: both classes must be present");
    }
    Resampled out{x, std::vector<int>(y.begin(), y.end()), 0};
    if (ones.size() == zeros.size()) {
        return out;
    }
    const bool minority_is_one = ones.size() < zeros.size();
    const auto& minority = minority_is_one ? ones : zeros;
    const std::size_t deficit = (minority_is_one ? zeros.size() : ones.size()) - minority.size();
    if (minority.size() < 2) {
        throw InputError("smote: minority class needs at least 2 rows");
    }
    const std::size_t m = minority.size();
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), m - 1);

    // k nearest minority neighbours of every minority row, ties by index.
    std::vector<std::vector<std::size_t>> neighbours(m);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t a = 0; a < m; ++a) {
        dist.clear();
        const auto& xa = x[minority[a]];
        for (std::size_t b = 0; b < m; ++b) {
            if (a == b) {
                continue;
            }
            const auto& xb = x[minority[b]];
            double d = 0.0;
            for (std::size_t j = 0; j < xa.size(); ++j) {
                d += (xa[j] - xb[j]) * (xa[j] - xb[j]);
            }
            dist.emplace_back(d, b);
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
        for (std::size_t i = 0; i < kk; ++i) {
            neighbours[a].push_back(dist[i].second);
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_row(0, m - 1);
    std::uniform_int_distribution<std::size_t> pick_nn(0, kk - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int label = minority_is_one ? 1 : 0;
    for (std::size_t s = 0; s < deficit; ++s) {
        const std::size_t a = pick_row(rng);
        const std::size_t b = neighbours[a][pick_nn(rng)];
        const double u = unit(rng);
        const auto& xa = x[minority[a]];
        const auto& xb = x[minority[b]];
        std::vector<double> row(xa.size());
        for (std::size_t j = 0; j < xa.size(); ++j) {
            row[j] = xa[j] + u * (xb[j] - xa[j]);
        }
        out.x.push_back(std::move(row));
        out.y.push_back(label);
        ++out.synthetic;
    }
    return out;
}

}  // namespace trichome::ml
