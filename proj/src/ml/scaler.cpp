#include <cmath>

#include "trichome/error.hpp"
#include "trichome/ml.hpp"

namespace trichome::ml {

Scaler fit_scaler(const FeatureMatrix& x, std::span<const std::string> names) {
    if (x.size() < 2) {
        throw InputError("scaler: need at least 2 rows");
    }
    const std::size_t d = x.front().size();
    Scaler s;
    s.mean.assign(d, 0.0);
    s.std.assign(d, 0.0);
    for (const auto& row : x) {
        if (row.size() != d) {
            throw InputError("scaler: ragged feature matrix");
        }
        for (std::size_t j = 0; j < d; ++j) {
            s.mean[j] += row[j];
        }
    }
    const double n = static_cast<double>(x.size());
    for (std::size_t j = 0; j < d; ++j) {
        s.mean[j] /= n;
    }
    for (const auto& row : x) {
        for (std::size_t j = 0; j < d; ++j) {
            s.std[j] += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        s.std[j] = std::sqrt(s.std[j] / n);
        if (!(s.std[j] > 0.0) || !std::isfinite(s.std[j])) {
            const std::string name = j < names.size() ? names[j] : "#" + std::to_string(j);
            throw InputError("scaler: feature " + name + " is constant");
        }
    }
    return s;
}

std::vector<double> Scaler::transform(std::span<const double> row) const {
    if (row.size() != mean.size()) {
        throw InputError("scaler: feature count mismatch");
    }
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
        out[j] = (row[j] - mean[j]) / std[j];
    }
    return out;
}

FeatureMatrix Scaler::transform(const FeatureMatrix& x) const {
    FeatureMatrix out;
    out.reserve(x.size());
    for (const auto& row : x) {
        out.push_back(transform(row));
    }
    return out;
}

double Scaler::inverse(std::size_t column, double value) const { return value * std.at(column) + mean.at(column); }

FeatureMatrix apply_scaler(const Scaler& s, const FeatureMatrix& x) { return s.transform(x); }

}  // namespace trichome::ml
