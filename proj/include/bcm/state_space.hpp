#pragma once

// Exhaustive analysis over the full configuration graph of a small box:
// communication heights, stability levels, ground states and fixed-plus-count
// manifold minima.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bcm/landscape.hpp"
#include "bcm/model.hpp"

namespace bcm {

class UnsupportedSize : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// All 3^(L^2) configurations with their energies, indexed in base 3 with
/// digit (spin + 1) at position (y - 1) L + (x - 1).
class StateSpace {
public:
    static constexpr int kMaxSide = 3;

    /// Throws UnsupportedSize when L > kMaxSide.
    explicit StateSpace(const Parameters& p);

    std::uint32_t size() const { return static_cast<std::uint32_t>(energies_.size()); }
    const Parameters& parameters() const { return params_; }
    double energy(std::uint32_t id) const { return energies_[id]; }
    const std::vector<double>& energies() const { return energies_; }

    std::uint32_t index_of(const SpinConfiguration& eta) const;
    SpinConfiguration configuration(std::uint32_t id) const;

    /// Calls f(neighbor_id, site_index, new_spin) for each of the 2 L^2 flips.
    template <class F>
    void for_each_neighbor(std::uint32_t id, F&& f) const {
        for (int k = 0; k < sites_; ++k) {
            const int digit = static_cast<int>(id / pow3_[k] % 3);
            for (int d = 0; d < 3; ++d) {
                if (d == digit) continue;
                const auto next = static_cast<std::uint32_t>(
                    static_cast<std::int64_t>(id) + (d - digit) * static_cast<std::int64_t>(pow3_[k]));
                f(next, k, static_cast<Spin>(d - 1));
            }
        }
    }

    /// States whose energy is within `tolerance` of the minimum.
    std::vector<std::uint32_t> ground_states(double tolerance = 1e-9) const;

private:
    Parameters params_;
    int sites_ = 0;
    std::vector<std::uint32_t> pow3_;
    std::vector<double> energies_;
};

struct CommunicationResult {
    double height = 0;
    Path witness;
};

/// Bottleneck best-first search; the witness is an optimal path.
CommunicationResult communication_height_exact(const StateSpace& space,
                                               const SpinConfiguration& eta,
                                               const SpinConfiguration& eta_prime);
CommunicationResult communication_height_exact(const SpinConfiguration& eta,
                                               const SpinConfiguration& eta_prime,
                                               const Parameters& p);

/// Independent check: smallest energy threshold whose sub-level graph
/// connects the two states, found by binary search over the distinct energies
/// with a flood fill per probe.
double communication_height_threshold(const StateSpace& space, const SpinConfiguration& eta,
                                      const SpinConfiguration& eta_prime);

struct StabilityReport {
    std::uint32_t id = 0;
    bool infinite = false;  // no strictly lower state exists
    double V = 0;
    Path witness;           // ends strictly below H(eta) unless infinite
};

StabilityReport stability_level_exact(const StateSpace& space, const SpinConfiguration& eta);
StabilityReport stability_level_exact(const SpinConfiguration& eta, const Parameters& p);

struct ManifoldReport {
    int n_plus = 0;
    std::uint64_t count = 0;
    double min_energy = 0;
    SpinConfiguration argmin;
    bool sigma_c_applicable = false;  // n_plus == n_plus_c and sigma_c fits
    double sigma_c_energy = 0;
    bool sigma_c_attains = false;
};

inline constexpr int kManifoldMaxSide = 4;

/// Minimum of H over configurations with exactly n_plus plus spins; L <= 4.
ManifoldReport verify_manifold_minimum(const Parameters& p, int n_plus);

}  // namespace bcm
