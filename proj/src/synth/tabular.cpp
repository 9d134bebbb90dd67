#include <algorithm>
#include <cmath>
#include <random>

#include "trichome/error.hpp"
#include "trichome/random.hpp"
#include "trichome/synth.hpp"

namespace trichome::synth {

ml::Dataset make_tabular_dataset(const TabularParams& p) {
    if (p.plants < 1 || p.leaves_per_plant < 1 || p.leaflets_per_leaf < 1 || p.images_per_leaflet < 1) {
        throw InputError("tabular: counts must be positive");
    }
    if (!(p.nitrate_hi > p.nitrate_lo) || p.nitrate_lo < 0.0) {
        throw InputError("tabular: invalid nitrate range");
    }
    static constexpr int kIsoLadder[] = {50, 100, 200, 400, 800};
    static const char* kLevels[] = {"low", "mid", "high"};
    std::mt19937_64 rng(derive_seed(p.seed, {10}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    ml::Dataset ds;
    ds.has_fertilizer_level = p.with_fertilizer_level;
    const double span = p.nitrate_hi - p.nitrate_lo;
    const SceneParams camera;
    for (int plant = 0; plant < p.plants; ++plant) {
        // Fertilizer level fixed per plant; nitrate per compound leaf
        // scatters within the level's third of the range.
        const int level = plant % 3;
        for (int leaf = 0; leaf < p.leaves_per_plant; ++leaf) {
            const double nitrate =
                std::round(p.nitrate_lo + span * (static_cast<double>(level) + unit(rng)) / 3.0);
            for (int leaflet = 0; leaflet < p.leaflets_per_leaf; ++leaflet) {
                for (int img = 0; img < p.images_per_leaflet; ++img) {
                    ml::SampleRecord r;
                    r.plant_id = "P" + std::to_string(plant + 1);
                    r.compound_leaf_id = "L" + std::to_string(leaf + 1);
                    r.leaflet_id = "F" + std::to_string(leaflet + 1);
                    const double distance = kDistanceMin + (kDistanceMax - kDistanceMin) * unit(rng);
                    const int frame = static_cast<int>(std::ceil(camera.frame_factor * camera.layout.paper_side_mm * camera.focal_px / distance));
                    r.resolution = static_cast<double>(frame) * frame;
                    const double u = std::clamp((distance - kDistanceMin) / (kDistanceMax - kDistanceMin), 0.0, 0.999);
                    r.iso = kIsoLadder[static_cast<int>(u * 5.0)];
                    const double brightness = 0.8 + 0.4 * unit(rng);
                    r.exposure_time =
                        std::max(1e-6, std::round(0.01 * (distance / 100.0) / brightness * (100.0 / r.iso) * 1e6) / 1e6);
                    r.nitrate_ppm = nitrate;
                    const double mp = r.resolution / 1e6;
                    r.nnd = p.nnd_base_mm + p.nnd_per_ppm * (nitrate - p.nitrate_lo) + p.resolution_effect * mp +
                            p.nnd_noise_mm * normal(rng);
                    r.nnd = std::max(r.nnd, 0.01);
                    if (p.with_fertilizer_level) {
                        r.fertilizer_level = kLevels[level];
                    }
                    ds.records.push_back(std::move(r));
                }
            }
        }
    }
    ds.validate();
    return ds;
}

}  // namespace trichome::synth
