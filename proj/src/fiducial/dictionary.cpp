#include <algorithm>
#include <bit>
#include <random>
#include <set>

#include "trichome/error.hpp"
#include "trichome/fiducial.hpp"

namespace trichome::fiducial {

namespace {

bool bit_at(MarkerCode code, int row, int col) {
    return ((code >> (15 - (row * 4 + col))) & 1U) != 0;
}

// Monomials of degree <= 2 over the four bits (r1, r0, c1, c0) of a cell
// index. Their evaluations span RM(2, 4). The grid rotation
// (r, c) -> (c, 3 - r) is affine over GF(2)^4, so the code is closed
// under rotation and any two distinct codewords differ in >= 4 cells.
constexpr std::array<std::array<int, 2>, 11> kMonomials = {{
    {-1, -1}, {0, -1}, {1, -1}, {2, -1}, {3, -1}, {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3},
}};

MarkerCode reed_muller_codeword(std::uint32_t coefficients) {
    MarkerCode code = 0;
    for (int cell = 0; cell < 16; ++cell) {
        const std::array<int, 4> bits = {(cell >> 3) & 1, (cell >> 2) & 1, (cell >> 1) & 1, cell & 1};
        int value = 0;
        for (std::size_t k = 0; k < kMonomials.size(); ++k) {
            if (((coefficients >> k) & 1U) == 0) {
                continue;
            }
            int term = 1;
            for (int var : kMonomials[k]) {
                if (var >= 0) {
                    term &= bits[static_cast<std::size_t>(var)];
                }
            }
            value ^= term;
        }
        if (value != 0) {
            code = static_cast<MarkerCode>(code | (1U << (15 - cell)));
        }
    }
    return code;
}

}  // namespace

MarkerCode rotate_code(MarkerCode code) {
    MarkerCode out = 0;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (bit_at(code, 3 - c, r)) {
                out = static_cast<MarkerCode>(out | (1U << (15 - (r * 4 + c))));
            }
        }
    }
    return out;
}

int hamming(MarkerCode a, MarkerCode b) {
    return std::popcount(static_cast<unsigned>(a ^ b));
}

int rotational_distance(MarkerCode a, MarkerCode b) {
    int best = 16;
    MarkerCode r = b;
    for (int k = 0; k < 4; ++k) {
        best = std::min(best, hamming(a, r));
        r = rotate_code(r);
    }
    return best;
}

int self_rotational_distance(MarkerCode code) {
    int best = 16;
    MarkerCode r = rotate_code(code);
    for (int k = 1; k < 4; ++k) {
        best = std::min(best, hamming(code, r));
        r = rotate_code(r);
    }
    return best;
}

MarkerDictionary::MarkerDictionary(std::vector<MarkerCode> codes) : codes_(std::move(codes)) {}

std::optional<CodeMatch> MarkerDictionary::match(MarkerCode observed, int max_correction) const {
    std::optional<CodeMatch> best;
    bool ambiguous = false;
    for (int id = 0; id < size(); ++id) {
        MarkerCode r = codes_[static_cast<std::size_t>(id)];
        for (int k = 0; k < 4; ++k) {
            const int d = hamming(observed, r);
            if (d <= max_correction) {
                if (!best || d < best->distance) {
                    best = CodeMatch{id, k, d};
                    ambiguous = false;
                } else if (d == best->distance) {
                    ambiguous = true;
                }
            }
            r = rotate_code(r);
        }
    }
    if (ambiguous) {
        return std::nullopt;
    }
    return best;
}

MarkerDictionary generate_dictionary(std::uint64_t seed) {
    constexpr int kMaxAttempts = 200000;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> coeff(0, (1U << kMonomials.size()) - 1);

    std::vector<MarkerCode> codes;
    std::set<MarkerCode> used_orbits;  // keyed by the smallest rotation
    for (int attempt = 0; attempt < kMaxAttempts && codes.size() < MarkerDictionary::kSize; ++attempt) {
        const MarkerCode c = reed_muller_codeword(coeff(rng));
        const int weight = std::popcount(static_cast<unsigned>(c));
        // Near-uniform payloads look like blank dark or bright squares.
        if (weight < 3 || weight > 13) {
            continue;
        }
        if (self_rotational_distance(c) < MarkerDictionary::kMinDistance) {
            continue;
        }
        MarkerCode key = c;
        MarkerCode r = c;
        for (int k = 1; k < 4; ++k) {
            r = rotate_code(r);
            key = std::min(key, r);
        }
        if (!used_orbits.insert(key).second) {
            continue;
        }
        codes.push_back(c);
    }
    if (codes.size() < MarkerDictionary::kSize) {
        throw Error("generate_dictionary: only " + std::to_string(codes.size()) + " codes after " +
                    std::to_string(kMaxAttempts) + " attempts");
    }
    return MarkerDictionary(std::move(codes));
}

const MarkerDictionary& default_dictionary() {
    static const MarkerDictionary dict = generate_dictionary(0);
    return dict;
}

}  // namespace trichome::fiducial
