#include "bcm/model.hpp"

#include <cmath>

namespace bcm {

char spin_char(Spin s) {
    switch (s) {
        case Spin::minus: return '-';
        case Spin::zero: return '0';
        case Spin::plus: return '+';
    }
    return '?';
}

Spin spin_from_char(char c) {
    switch (c) {
        case '-': return Spin::minus;
        case '0': return Spin::zero;
        case '+': return Spin::plus;
        default: throw std::invalid_argument(std::string("bad spin character '") + c + "'");
    }
}

void check_parameters(const Parameters& p) {
    if (!(p.J > 0)) throw std::invalid_argument("J must be positive");
    if (p.L < 2) throw std::invalid_argument("L must be at least 2");
    if (!(p.beta >= 0)) throw std::invalid_argument("beta must be non-negative");
}

SpinConfiguration::SpinConfiguration(int L, Spin fill) : L_(L), cells_(L * L, fill) {
    if (L < 1) throw std::invalid_argument("configuration side must be positive");
}

int SpinConfiguration::count(Spin s) const {
    int n = 0;
    for (Spin c : cells_) n += (c == s);
    return n;
}

SiteSet SpinConfiguration::sites_with(Spin s) const {
    SiteSet out;
    for (int i = 0; i < size(); ++i)
        if (cells_[i] == s) out.insert(site(i));
    return out;
}

std::vector<int> SpinConfiguration::differences(const SpinConfiguration& other) const {
    if (other.L_ != L_) throw std::invalid_argument("configuration sizes differ");
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
        if (cells_[i] != other.cells_[i]) out.push_back(i);
    return out;
}

ConditionReport validate_condition(const Parameters& p, double smallness_factor,
                                   double integer_tolerance) {
    ConditionReport r;
    r.smallness_factor = smallness_factor;
    const double J = p.J, l = p.lambda, h = p.h;
    r.small_fields = h > 0 && l > 0 && h < smallness_factor * J && l < smallness_factor * J;

    r.size_defined = l > h;
    if (r.size_defined) {
        r.required_L = std::pow(2 * J / (l - h), 3);
        r.size_ok = p.L > r.required_L;
    }

    const std::array<double, 4> num{2 * J, 2 * J, 2 * J + l - h, J + l + h};
    const std::array<double, 4> den{l + h, l - h, l + h, h};
    r.non_integer = true;
    for (std::size_t i = 0; i < 4; ++i) {
        r.ratio_defined[i] = den[i] != 0.0;
        if (r.ratio_defined[i]) {
            r.ratios[i] = num[i] / den[i];
            r.ratio_non_integer[i] =
                std::abs(r.ratios[i] - std::round(r.ratios[i])) > integer_tolerance;
        }
        r.non_integer = r.non_integer && r.ratio_defined[i] && r.ratio_non_integer[i];
    }
    return r;
}

double hamiltonian(const SpinConfiguration& eta, const Parameters& p) {
    if (eta.side() != p.L) throw std::invalid_argument("hamiltonian: size mismatch");
    const int L = p.L;
    double bonds = 0, boundary = 0, squares = 0, total = 0;
    for (int y = 1; y <= L; ++y) {
        for (int x = 1; x <= L; ++x) {
            const int s = value(eta.at({x, y}));
            squares += s * s;
            total += s;
            // right and up bonds; each unordered bond once
            for (Site n : {Site{x + 1, y}, Site{x, y + 1}}) {
                int t = 0;
                if (in_box(n, L)) {
                    t = value(eta.at(n));
                } else if (p.boundary == Boundary::periodic) {
                    t = value(eta.at({(n.x - 1) % L + 1, (n.y - 1) % L + 1}));
                } else {
                    continue;
                }
                bonds += (s - t) * (s - t);
            }
            if (p.boundary == Boundary::zero) {
                const int out = (x == 1) + (x == L) + (y == 1) + (y == L);
                boundary += out * s * s;
            }
        }
    }
    return p.J * bonds + p.J * boundary - p.lambda * squares - p.h * total;
}

int neighbor_sum(const SpinConfiguration& eta, Site s, Boundary boundary) {
    const int L = eta.side();
    int sum = 0;
    for (Site n : {Site{s.x + 1, s.y}, Site{s.x - 1, s.y}, Site{s.x, s.y + 1},
                   Site{s.x, s.y - 1}}) {
        if (in_box(n, L)) {
            sum += value(eta.at(n));
        } else if (boundary == Boundary::periodic) {
            sum += value(eta.at({(n.x + L - 1) % L + 1, (n.y + L - 1) % L + 1}));
        }
    }
    return sum;
}

double delta_h(const SpinConfiguration& eta, Site s, Spin new_spin, const Parameters& p) {
    if (!in_box(s, eta.side())) throw std::invalid_argument("delta_h: site outside the box");
    const Spin old = eta.at(s);
    if (old == new_spin) throw std::invalid_argument("delta_h: new spin equals current spin");
    return flip_delta(old, new_spin, neighbor_sum(eta, s, p.boundary), p);
}

double FlipCostRow::cost(Spin from, Spin to) const {
    if (from == to) return 0.0;
    if (from == Spin::minus && to == Spin::zero) return cost_minus_to_zero;
    if (from == Spin::minus && to == Spin::plus) return cost_minus_to_plus;
    if (from == Spin::zero && to == Spin::plus) return cost_zero_to_plus;
    return -cost(to, from);
}

std::array<FlipCostRow, 15> flip_cost_table(const Parameters& p) {
    const double J = p.J, l = p.lambda, h = p.h;
    // (n-, n0, n+), then each cost as coefficients of (J, lambda, h) in the
    // order minus->zero, minus->plus, zero->plus.
    struct Literal {
        int nm, nz, np;
        int mz_j, mp_j, zp_j;
    };
    // minus->zero = a J + l - h, minus->plus = b J - 2h, zero->plus = c J - l - h
    static constexpr std::array<Literal, 15> rows{{
        {4, 0, 0, 4, 16, 12},   {3, 1, 0, 2, 12, 10},  {3, 0, 1, 0, 8, 8},
        {2, 2, 0, 0, 8, 8},     {2, 1, 1, -2, 4, 6},   {2, 0, 2, -4, 0, 4},
        {1, 3, 0, -2, 4, 6},    {1, 2, 1, -4, 0, 4},   {1, 1, 2, -6, -4, 2},
        {1, 0, 3, -8, -8, 0},   {0, 4, 0, -4, 0, 4},   {0, 3, 1, -6, -4, 2},
        {0, 2, 2, -8, -8, 0},   {0, 1, 3, -10, -12, -2}, {0, 0, 4, -12, -16, -4},
    }};
    std::array<FlipCostRow, 15> out{};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out[i] = {r.nm, r.nz, r.np, r.mz_j * J + l - h, r.mp_j * J - 2 * h,
                  r.zp_j * J - l - h};
    }
    return out;
}

HierarchyReport energy_hierarchy(const Parameters& p) {
    HierarchyReport r{};
    r.e_plus = hamiltonian(homogeneous(Spin::plus, p.L), p);
    r.e_zero = hamiltonian(homogeneous(Spin::zero, p.L), p);
    r.e_minus = hamiltonian(homogeneous(Spin::minus, p.L), p);
    if (p.lambda == p.h) {
        r.order = Hierarchy::degenerate;
        return r;
    }
    if (r.e_plus < r.e_zero && r.e_zero < r.e_minus) {
        r.order = Hierarchy::plus_zero_minus;
        if (p.h < p.lambda)
            throw InconsistentParameters("energy hierarchy H(+1)<H(0)<H(-1) with h < lambda");
    } else if (r.e_plus < r.e_minus && r.e_minus < r.e_zero) {
        r.order = Hierarchy::plus_minus_zero;
        if (p.h > p.lambda)
            throw InconsistentParameters("energy hierarchy H(+1)<H(-1)<H(0) with h > lambda");
    } else {
        throw InconsistentParameters("homogeneous energies violate the expected hierarchy");
    }
    return r;
}

std::vector<SiteSet> clusters_of(const SpinConfiguration& eta, Spin s) {
    return connected_components(eta.sites_with(s));
}

double gibbs_ratio(const SpinConfiguration& eta, const SpinConfiguration& eta_prime,
                   const Parameters& p) {
    const auto diff = eta.differences(eta_prime);
    double dh = 0;
    if (diff.size() == 1) {
        dh = delta_h(eta, eta.site(diff.front()), eta_prime[diff.front()], p);
    } else if (!diff.empty()) {
        dh = hamiltonian(eta_prime, p) - hamiltonian(eta, p);
    }
    return std::exp(-p.beta * dh);
}

}  // namespace bcm
