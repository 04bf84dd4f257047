#include "bcm/state_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>

namespace bcm {

StateSpace::StateSpace(const Parameters& p) : params_(p), sites_(p.L * p.L) {
    if (p.L > kMaxSide)
        throw UnsupportedSize("exhaustive state space supports L <= " + std::to_string(kMaxSide) +
                              ", got L = " + std::to_string(p.L));
    pow3_.resize(sites_ + 1);
    pow3_[0] = 1;
    for (int k = 1; k <= sites_; ++k) pow3_[k] = pow3_[k - 1] * 3;
    energies_.resize(pow3_[sites_]);
    for (std::uint32_t id = 0; id < size(); ++id) energies_[id] = hamiltonian(configuration(id), p);
}

std::uint32_t StateSpace::index_of(const SpinConfiguration& eta) const {
    if (eta.side() != params_.L) throw std::invalid_argument("StateSpace: size mismatch");
    std::uint32_t id = 0;
    for (int k = 0; k < sites_; ++k) id += static_cast<std::uint32_t>(value(eta[k]) + 1) * pow3_[k];
    return id;
}

SpinConfiguration StateSpace::configuration(std::uint32_t id) const {
    SpinConfiguration c(params_.L);
    for (int k = 0; k < sites_; ++k, id /= 3) c.set(c.site(k), static_cast<Spin>(int(id % 3) - 1));
    return c;
}

std::vector<std::uint32_t> StateSpace::ground_states(double tolerance) const {
    const double lo = *std::min_element(energies_.begin(), energies_.end());
    std::vector<std::uint32_t> out;
    for (std::uint32_t id = 0; id < size(); ++id)
        if (energies_[id] <= lo + tolerance) out.push_back(id);
    return out;
}

namespace {

struct SearchResult {
    bool found = false;
    double height = 0;
    std::uint32_t target = 0;
    std::vector<std::uint32_t> parent;
};

constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();

// Best-first expansion keyed on the path bottleneck; the first target state
// popped is reached with the minimal possible maximum energy.
SearchResult bottleneck_search(const StateSpace& space, std::uint32_t source,
                               const std::function<bool(std::uint32_t)>& is_target) {
    SearchResult r;
    const auto n = space.size();
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<char> done(n, 0);
    r.parent.assign(n, kNone);

    using Item = std::pair<double, std::uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    best[source] = space.energy(source);
    open.push({best[source], source});
    while (!open.empty()) {
        const auto [b, u] = open.top();
        open.pop();
        if (done[u]) continue;
        done[u] = 1;
        if (is_target(u)) {
            r.found = true;
            r.height = b;
            r.target = u;
            return r;
        }
        space.for_each_neighbor(u, [&](std::uint32_t v, int, Spin) {
            if (done[v]) return;
            const double nb = std::max(b, space.energy(v));
            if (nb < best[v]) {
                best[v] = nb;
                r.parent[v] = u;
                open.push({nb, v});
            }
        });
    }
    return r;
}

Path trace_path(const StateSpace& space, const SearchResult& r, std::uint32_t source) {
    std::vector<std::uint32_t> chain;
    for (std::uint32_t v = r.target; v != source; v = r.parent[v]) chain.push_back(v);
    std::reverse(chain.begin(), chain.end());
    Path w(space.configuration(source), space.parameters());
    std::uint32_t prev = source;
    for (std::uint32_t v : chain) {
        // Locate the single differing base-3 digit.
        std::uint32_t a = prev, b = v;
        int k = 0;
        while (a % 3 == b % 3) {
            a /= 3;
            b /= 3;
            ++k;
        }
        w.flip(w.back().site(k), static_cast<Spin>(int(b % 3) - 1));
        prev = v;
    }
    return w;
}

bool connected_below(const StateSpace& space, std::uint32_t a, std::uint32_t b, double threshold) {
    if (space.energy(a) > threshold || space.energy(b) > threshold) return false;
    std::vector<char> seen(space.size(), 0);
    std::vector<std::uint32_t> stack{a};
    seen[a] = 1;
    while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        if (u == b) return true;
        space.for_each_neighbor(u, [&](std::uint32_t v, int, Spin) {
            if (!seen[v] && space.energy(v) <= threshold) {
                seen[v] = 1;
                stack.push_back(v);
            }
        });
    }
    return false;
}

}  // namespace

CommunicationResult communication_height_exact(const StateSpace& space,
                                               const SpinConfiguration& eta,
                                               const SpinConfiguration& eta_prime) {
    const auto src = space.index_of(eta), dst = space.index_of(eta_prime);
    const auto r = bottleneck_search(space, src, [dst](std::uint32_t v) { return v == dst; });
    if (!r.found) throw std::logic_error("configuration graph is not connected");
    return {r.height, trace_path(space, r, src)};
}

CommunicationResult communication_height_exact(const SpinConfiguration& eta,
                                               const SpinConfiguration& eta_prime,
                                               const Parameters& p) {
    return communication_height_exact(StateSpace(p), eta, eta_prime);
}

double communication_height_threshold(const StateSpace& space, const SpinConfiguration& eta,
                                      const SpinConfiguration& eta_prime) {
    const auto a = space.index_of(eta), b = space.index_of(eta_prime);
    std::vector<double> levels = space.energies();
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::size_t lo = 0, hi = levels.size() - 1;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (connected_below(space, a, b, levels[mid]))
            hi = mid;
        else
            lo = mid + 1;
    }
    return levels[lo];
}

StabilityReport stability_level_exact(const StateSpace& space, const SpinConfiguration& eta) {
    StabilityReport rep;
    rep.id = space.index_of(eta);
    const double e = space.energy(rep.id);
    const auto r =
        bottleneck_search(space, rep.id, [&](std::uint32_t v) { return space.energy(v) < e; });
    if (!r.found) {
        rep.infinite = true;
        rep.V = std::numeric_limits<double>::infinity();
        rep.witness = Path(eta, space.parameters());
        return rep;
    }
    rep.V = r.height - e;
    rep.witness = trace_path(space, r, rep.id);
    return rep;
}

StabilityReport stability_level_exact(const SpinConfiguration& eta, const Parameters& p) {
    return stability_level_exact(StateSpace(p), eta);
}

ManifoldReport verify_manifold_minimum(const Parameters& p, int n_plus) {
    const int L = p.L, n = L * L;
    if (L > kManifoldMaxSide)
        throw UnsupportedSize("manifold enumeration supports L <= " +
                              std::to_string(kManifoldMaxSide) + ", got L = " + std::to_string(L));
    if (n_plus < 0 || n_plus > n) throw std::invalid_argument("n_plus out of range");

    ManifoldReport rep;
    rep.n_plus = n_plus;
    rep.min_energy = std::numeric_limits<double>::infinity();
    SpinConfiguration c(L);
    std::vector<int> rest;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != n_plus) continue;
        rest.clear();
        for (int k = 0; k < n; ++k) {
            if (mask >> k & 1u)
                c.set(c.site(k), Spin::plus);
            else
                rest.push_back(k);
        }
        for (std::uint32_t zeros = 0; zeros < (1u << rest.size()); ++zeros) {
            for (std::size_t j = 0; j < rest.size(); ++j)
                c.set(c.site(rest[j]), (zeros >> j & 1u) ? Spin::zero : Spin::minus);
            const double e = hamiltonian(c, p);
            ++rep.count;
            if (e < rep.min_energy) {
                rep.min_energy = e;
                rep.argmin = c;
            }
        }
    }

    if (p.lambda > p.h && p.h > 0) {
        const auto q = critical_quantities(p);
        if (n_plus == q.n_plus_c && q.l_c >= 2 && q.l_c + 1 <= L) {
            rep.sigma_c_applicable = true;
            rep.sigma_c_energy = hamiltonian(build_sigma_c(p), p);
            rep.sigma_c_attains =
                std::abs(rep.sigma_c_energy - rep.min_energy) <= 1e-9 * (1 + std::abs(rep.min_energy));
        }
    }
    return rep;
}

}  // namespace bcm
