#pragma once

// Three-state lattice spin model: parameters, configurations, the Hamiltonian
// with frozen-zero (or periodic) boundary, single-flip energy differences and
// Gibbs weight ratios.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcm/geometry.hpp"

namespace bcm {

enum class Spin : std::int8_t { minus = -1, zero = 0, plus = 1 };

constexpr int value(Spin s) { return static_cast<int>(s); }
constexpr Spin spin_from_int(int v) { return static_cast<Spin>(v); }
constexpr std::array<Spin, 3> kSpins{Spin::minus, Spin::zero, Spin::plus};

char spin_char(Spin s);
Spin spin_from_char(char c);  // '-', '0', '+'; throws std::invalid_argument

enum class Boundary { zero, periodic };

struct Parameters {
    double J = 1.0;
    double lambda = 0.0;
    double h = 0.0;
    int L = 2;
    double beta = 1.0;
    Boundary boundary = Boundary::zero;

    int sites() const { return L * L; }
};

/// Throws std::invalid_argument unless J > 0, L >= 2 and beta >= 0.
void check_parameters(const Parameters& p);

class InconsistentParameters : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class SpinConfiguration {
public:
    SpinConfiguration() = default;
    explicit SpinConfiguration(int L, Spin fill = Spin::zero);

    static SpinConfiguration homogeneous(Spin s, int L) { return SpinConfiguration(L, s); }

    int side() const { return L_; }
    int size() const { return L_ * L_; }

    // row-major, row y = 1 first
    int index(Site s) const { return (s.y - 1) * L_ + (s.x - 1); }
    Site site(int index) const { return {index % L_ + 1, index / L_ + 1}; }

    Spin at(Site s) const { return cells_[index(s)]; }
    Spin operator[](int i) const { return cells_[i]; }
    void set(Site s, Spin v) { cells_[index(s)] = v; }
    void set(int i, Spin v) { cells_[i] = v; }

    int count(Spin s) const;
    SiteSet sites_with(Spin s) const;

    /// Indices where the two configurations differ (sizes must match).
    std::vector<int> differences(const SpinConfiguration& other) const;
    bool communicates_with(const SpinConfiguration& other) const {
        return differences(other).size() <= 1;
    }

    const std::vector<Spin>& cells() const { return cells_; }

    bool operator==(const SpinConfiguration&) const = default;

private:
    int L_ = 0;
    std::vector<Spin> cells_;
};

inline SpinConfiguration homogeneous(Spin s, int L) { return SpinConfiguration(L, s); }

// Condition checks ---------------------------------------------------------

struct ConditionReport {
    double smallness_factor = 0.1;
    bool small_fields = false;       // 0 < lambda, h < factor * J
    bool size_defined = false;       // lambda > h
    bool size_ok = false;            // L > (2J / (lambda - h))^3
    bool asymptotic_only = true;     // the size requirement is informational
    double required_L = 0.0;
    std::array<double, 4> ratios{};  // 2J/(l+h), 2J/(l-h), (2J+l-h)/(l+h), (J+l+h)/h
    std::array<bool, 4> ratio_defined{};
    std::array<bool, 4> ratio_non_integer{};
    bool non_integer = false;

    /// Items 1 and 3; item 2 is reported but never gates.
    bool passes() const { return small_fields && non_integer; }
};

ConditionReport validate_condition(const Parameters& p, double smallness_factor = 0.1,
                                   double integer_tolerance = 1e-9);

// Energies -----------------------------------------------------------------

double hamiltonian(const SpinConfiguration& eta, const Parameters& p);

/// H(eta') - H(eta) for a single flip given the sum of the four neighbour
/// spins (out-of-box neighbours contribute 0).
constexpr double flip_delta(Spin from, Spin to, int neighbor_sum, const Parameters& p) {
    const int a = value(from), b = value(to);
    const int dsq = b * b - a * a, d = b - a;
    return p.J * (4.0 * dsq - 2.0 * d * neighbor_sum) - p.lambda * dsq - p.h * d;
}

int neighbor_sum(const SpinConfiguration& eta, Site s, Boundary boundary);

/// Throws std::invalid_argument when new_spin equals the current spin or the
/// site is outside the box.
double delta_h(const SpinConfiguration& eta, Site s, Spin new_spin, const Parameters& p);

struct FlipCostRow {
    int n_minus = 0;
    int n_zero = 0;
    int n_plus = 0;
    double cost_minus_to_zero = 0;
    double cost_minus_to_plus = 0;
    double cost_zero_to_plus = 0;

    /// Cost of an arbitrary flip; reversed flips carry the opposite sign.
    double cost(Spin from, Spin to) const;
};

std::array<FlipCostRow, 15> flip_cost_table(const Parameters& p);

enum class Hierarchy {
    plus_zero_minus,  // H(+1) < H(0) < H(-1)
    plus_minus_zero,  // H(+1) < H(-1) < H(0)
    degenerate,       // lambda == h
};

struct HierarchyReport {
    Hierarchy order;
    double e_plus, e_zero, e_minus;
};

/// Computes the three homogeneous energies and orders them; throws
/// InconsistentParameters if they are not in one of the expected orders.
HierarchyReport energy_hierarchy(const Parameters& p);

std::vector<SiteSet> clusters_of(const SpinConfiguration& eta, Spin s);

double gibbs_ratio(const SpinConfiguration& eta, const SpinConfiguration& eta_prime,
                   const Parameters& p);

}  // namespace bcm
