#include <cmath>

#include "json.hpp"
#include "trichome/dataset.hpp"
#include "trichome/density.hpp"
#include "trichome/error.hpp"
#include "trichome/random.hpp"
#include "trichome/stats.hpp"
#include "trichome/synth.hpp"

namespace trichome::synth {

stats::TestResult paired_rate_test(std::span<const double> a, std::span<const double> b, stats::Alternative alt) {
    if (a.size() != b.size()) {
        throw InputError("paired_rate_test: sample sizes differ");
    }
    std::vector<double> diff(a.size());
    bool all_zero = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff[i] = a[i] - b[i];
        all_zero = all_zero && diff[i] == 0.0;
    }
    if (all_zero) {
        stats::TestResult r;
        r.method = stats::Method::wilcoxon_signed_rank;
        r.statistic = 0.0;
        r.p_value = r.adjusted_p = 1.0;
        r.n = {0};
        return r;
    }
    return stats::wilcoxon_signed_rank(diff, alt);
}

StudyReport appendix_study(const StudyParams& params) {
    if (params.replicates < 20) {
        throw InputError("appendix study: need at least 20 replicates");
    }
    if (!(params.lambda > 0.0) || !(params.region_side > 0.0)) {
        throw InputError("appendix study: lambda and region must be positive");
    }
    StudyReport report;
    report.params = params;
    const Region region{0.0, 0.0, params.region_side, params.region_side};
    std::vector<double> rate_count;
    std::vector<double> rate_nnd;
    for (int rep = 0; rep < params.replicates; ++rep) {
        const auto before = poisson_points(params.lambda, region, derive_seed(params.seed, {static_cast<std::uint64_t>(rep)}));
        const auto after = params.damage ? simulate_damage(before, params.damage_x) : before;
        if (before.size() < 2 || after.size() < 2) {
            ++report.dropped;
            continue;
        }
        ReplicateRow row;
        row.replicate = rep;
        row.n_before = before.size();
        row.n_after = after.size();
        row.nnd_before = density::mean_nnd(before);
        row.nnd_after = density::mean_nnd(after);
        const double nb = static_cast<double>(row.n_before);
        row.rate_count = std::abs(static_cast<double>(row.n_after) - nb) / nb;
        row.rate_nnd = std::abs(row.nnd_after - row.nnd_before) / row.nnd_before;
        rate_count.push_back(row.rate_count);
        rate_nnd.push_back(row.rate_nnd);
        report.rows.push_back(row);
    }
    if (report.rows.empty()) {
        throw InputError("appendix study: every replicate was dropped");
    }
    report.median_rate_count = stats::quantile_type7(rate_count, 0.5);
    report.median_rate_nnd = stats::quantile_type7(rate_nnd, 0.5);
    report.two_sided = paired_rate_test(rate_count, rate_nnd, stats::Alternative::two_sided);
    report.greater = paired_rate_test(rate_count, rate_nnd, stats::Alternative::greater);
    return report;
}

std::string StudyReport::to_csv() const {
    using ml::format_number;
    std::string out = "replicate,n_before,n_after,nnd_before,nnd_after,rate_count,rate_nnd\n";
    for (const auto& r : rows) {
        out += std::to_string(r.replicate) + "," + std::to_string(r.n_before) + "," + std::to_string(r.n_after) + "," +
               format_number(r.nnd_before) + "," + format_number(r.nnd_after) + "," + format_number(r.rate_count) +
               "," + format_number(r.rate_nnd) + "\n";
    }
    return out;
}

std::string StudyReport::summary_json() const {
    nlohmann::ordered_json j;
    j["lambda"] = params.lambda;
    j["replicates"] = params.replicates;
    j["seed"] = params.seed;
    j["damage"] = params.damage;
    j["damage_x"] = params.damage_x;
    j["region_side"] = params.region_side;
    j["used_replicates"] = rows.size();
    j["dropped_replicates"] = dropped;
    j["median_rate_count"] = median_rate_count;
    j["median_rate_nnd"] = median_rate_nnd;
    j["wilcoxon"] = {{"W", two_sided.statistic},
                     {"n_nonzero", two_sided.n.empty() ? 0 : two_sided.n.front()},
                     {"p_two_sided", two_sided.p_value},
                     {"p_count_rate_greater", greater.p_value}};
    return j.dump(2) + "\n";
}

}  // namespace trichome::synth
