#include "bcm/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include "bcm/snapshot.hpp"

namespace bcm {

std::uint64_t Rng::below(std::uint64_t n) {
    std::uint64_t x = engine_();
    auto m = static_cast<unsigned __int128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = -n % n;
        while (low < threshold) {
            x = engine_();
            m = static_cast<unsigned __int128>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

ChainState::ChainState(SpinConfiguration start, const Parameters& p, std::uint64_t seed)
    : params_(p), config_(std::move(start)), rng_(seed) {
    check_parameters(p);
    if (config_.side() != p.L) throw std::invalid_argument("ChainState: size mismatch");
    const int L = p.L;
    neighbors_.resize(config_.size());
    for (int i = 0; i < config_.size(); ++i) {
        const Site s = config_.site(i);
        const std::array<Site, 4> around{
            {{s.x + 1, s.y}, {s.x - 1, s.y}, {s.x, s.y + 1}, {s.x, s.y - 1}}};
        for (int k = 0; k < 4; ++k) {
            Site n = around[k];
            if (!in_box(n, L)) {
                if (p.boundary == Boundary::zero) {
                    neighbors_[i][k] = -1;
                    continue;
                }
                n = {(n.x + L - 1) % L + 1, (n.y + L - 1) % L + 1};
            }
            neighbors_[i][k] = config_.index(n);
        }
    }
    for (Spin from : kSpins)
        for (Spin to : kSpins)
            for (int sum = -4; sum <= 4; ++sum) {
                const int k = table_index(value(from), value(to), sum);
                delta_[k] = flip_delta(from, to, sum, p);
                accept_[k] = delta_[k] > 0 ? std::exp(-p.beta * delta_[k]) : 1.0;
            }
    for (Spin s : kSpins) counts_[value(s) + 1] = config_.count(s);
    energy_ = hamiltonian(config_, params_);
}

bool ChainState::step() {
    ++steps_;
    // one draw over the 2|Lambda| (site, alternative) pairs; pick 0 is the
    // lower of the two alternative values
    const auto r = rng_.below(2 * static_cast<std::uint64_t>(config_.size()));
    const int i = static_cast<int>(r >> 1);
    const int pick = static_cast<int>(r & 1);
    const int from = value(config_[i]);
    int to = pick == 0 ? (from == -1 ? 0 : -1) : (from == 1 ? 0 : 1);

    int sum = 0;
    for (int n : neighbors_[i])
        if (n >= 0) sum += value(config_[n]);

    const int k = table_index(from, to, sum);
    const double d = delta_[k];
    if (d > 0 && !(rng_.uniform() < accept_[k])) return false;

    config_.set(i, spin_from_int(to));
    --counts_[from + 1];
    ++counts_[to + 1];
    energy_ += d;
    last_index_ = i;
    last_spin_ = spin_from_int(to);
    if (++accepted_since_sync_ >= (1u << 20)) resync();
    return true;
}

void ChainState::resync() {
    energy_ = hamiltonian(config_, params_);
    accepted_since_sync_ = 0;
}

double transition_probability(const SpinConfiguration& eta, const SpinConfiguration& eta_prime,
                              const Parameters& p) {
    const auto diff = eta.differences(eta_prime);
    const double weight = 1.0 / (2.0 * eta.size());
    auto move = [&](int i, Spin to) {
        const double d = delta_h(eta, eta.site(i), to, p);
        return weight * std::exp(-p.beta * std::max(d, 0.0));
    };
    if (diff.size() > 1) return 0.0;
    if (diff.size() == 1) return move(diff.front(), eta_prime[diff.front()]);
    double leave = 0;
    for (int i = 0; i < eta.size(); ++i)
        for (Spin to : kSpins)
            if (to != eta[i]) leave += move(i, to);
    return 1.0 - leave;
}

// Targets ----------------------------------------------------------------------

Target Target::all(Spin s) {
    Target t;
    t.kind = Kind::homogeneous;
    t.spin = s;
    t.label = std::string("homogeneous") + spin_char(s);
    return t;
}

Target Target::manifold(int n_plus) {
    Target t;
    t.kind = Kind::plus_count;
    t.plus_count = n_plus;
    t.label = "manifold" + std::to_string(n_plus);
    return t;
}

Target Target::exactly(SpinConfiguration c, std::string label) {
    Target t;
    t.kind = Kind::configuration;
    t.config = std::move(c);
    t.label = std::move(label);
    return t;
}

bool Target::matches(const ChainState& state) const {
    switch (kind) {
        case Kind::homogeneous:
            return state.count(spin) == state.configuration().size();
        case Kind::plus_count:
            return state.count(Spin::plus) == plus_count;
        case Kind::configuration:
            return state.count(Spin::plus) == config.count(Spin::plus) &&
                   state.count(Spin::minus) == config.count(Spin::minus) &&
                   state.configuration() == config;
    }
    return false;
}

namespace {

// Plus cluster containing site `root`; coordinates are unwrapped across the
// periodic seam before averaging.
SupercriticalEvent plus_cluster(const ChainState& state, int root) {
    const auto& c = state.configuration();
    const int L = c.side();
    struct Item {
        int index;
        int ux, uy;
    };
    std::vector<char> seen(c.size(), 0);
    std::vector<Item> stack{{root, c.site(root).x, c.site(root).y}};
    seen[root] = 1;
    long long sx = 0, sy = 0;
    int size = 0;
    // step offsets in the same order as the neighbour table
    constexpr std::array<std::array<int, 2>, 4> offsets{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        ++size;
        sx += it.ux;
        sy += it.uy;
        const auto& nb = state.neighbor_indices(it.index);
        for (int k = 0; k < 4; ++k) {
            const int n = nb[k];
            if (n < 0 || seen[n] || c[n] != Spin::plus) continue;
            seen[n] = 1;
            stack.push_back({n, it.ux + offsets[k][0], it.uy + offsets[k][1]});
        }
    }
    SupercriticalEvent e;
    e.cluster_size = size;
    auto wrap = [L](double v) {
        double r = std::fmod(v - 0.5, static_cast<double>(L));
        if (r < 0) r += L;
        return r + 0.5;
    };
    e.centroid_x = wrap(static_cast<double>(sx) / size);
    e.centroid_y = wrap(static_cast<double>(sy) / size);
    return e;
}

TracePoint snapshot_point(const ChainState& s) {
    return {s.step_count(), s.energy(), s.count(Spin::plus), s.count(Spin::zero),
            s.count(Spin::minus)};
}

}  // namespace

HittingRecord run_until_hit(const SpinConfiguration& start, const std::vector<Target>& targets,
                            const Parameters& p, const RunOptions& options, std::uint64_t seed) {
    if (options.max_steps == 0) throw std::invalid_argument("run_until_hit: max_steps must be > 0");
    ChainState state(start, p, seed);
    HittingRecord rec;
    rec.seed = seed;
    rec.L = p.L;

    auto matched = [&]() {
        for (std::size_t k = 0; k < targets.size(); ++k) {
            if (targets[k].matches(state)) {
                rec.hit = true;
                rec.target_index = static_cast<int>(k);
                rec.target_label = targets[k].label;
                rec.tau = state.step_count();
                return true;
            }
        }
        return false;
    };

    const int threshold = options.supercritical_threshold;
    auto check_supercritical = [&]() {
        if (threshold <= 0 || rec.supercritical.found) return;
        if (state.last_flip_spin() != Spin::plus || state.count(Spin::plus) < threshold) return;
        SupercriticalEvent e = plus_cluster(state, state.last_flip_index());
        if (e.cluster_size >= threshold) {
            e.found = true;
            e.step = state.step_count();
            rec.supercritical = e;
        }
    };

    if (options.stride > 0) rec.trace.push_back(snapshot_point(state));
    if (matched()) return rec;

    while (state.step_count() < options.max_steps) {
        const bool accepted = state.step();
        if (options.stride > 0 && state.step_count() % options.stride == 0)
            rec.trace.push_back(snapshot_point(state));
        if (!accepted) continue;
        check_supercritical();
        if (options.stop_at_supercritical && rec.supercritical.found) {
            rec.tau = state.step_count();
            return rec;
        }
        if (matched()) return rec;
    }
    rec.timeout = true;
    rec.tau = state.step_count();
    return rec;
}

std::vector<HittingRecord> sample_exit_times(const Parameters& p, const SpinConfiguration& start,
                                             const std::vector<Target>& targets, int replicas,
                                             const RunOptions& options, std::uint64_t seed_base,
                                             int workers) {
    if (replicas < 1) throw std::invalid_argument("sample_exit_times: replicas must be >= 1");
    std::vector<HittingRecord> out(replicas);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int r = next++; r < replicas; r = next++) {
            out[r] = run_until_hit(start, targets, p, options, seed_base + r);
            out[r].replica = r;
        }
    };
    const int n = std::clamp(workers, 1, replicas);
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < n; ++w) pool.emplace_back(worker);
    }
    return out;
}

ExitStatistics summarize(const std::vector<HittingRecord>& records, int bootstrap_resamples,
                         std::uint64_t bootstrap_seed) {
    ExitStatistics s;
    s.replicas = static_cast<int>(records.size());
    std::vector<double> taus;
    for (const auto& r : records) {
        if (r.hit)
            taus.push_back(static_cast<double>(r.tau));
        else if (r.timeout)
            ++s.timeouts;
    }
    s.hits = static_cast<int>(taus.size());
    if (taus.empty()) return s;

    const double n = static_cast<double>(taus.size());
    s.mean_tau = std::accumulate(taus.begin(), taus.end(), 0.0) / n;
    s.log_mean_tau = std::log(s.mean_tau);
    double log_sum = 0;
    for (double t : taus) log_sum += std::log(std::max(t, 1.0));
    s.mean_log_tau = log_sum / n;

    std::vector<double> sorted = taus;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    s.median_tau = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);

    if (bootstrap_resamples > 1 && taus.size() > 1) {
        Rng rng(bootstrap_seed);
        double acc = 0, acc2 = 0;
        for (int b = 0; b < bootstrap_resamples; ++b) {
            double sum = 0;
            for (std::size_t k = 0; k < taus.size(); ++k) sum += taus[rng.below(taus.size())];
            const double v = std::log(std::max(sum / n, 1e-300));
            acc += v;
            acc2 += v * v;
        }
        const double mean = acc / bootstrap_resamples;
        s.log_mean_se = std::sqrt(std::max(0.0, acc2 / bootstrap_resamples - mean * mean) *
                                  bootstrap_resamples / (bootstrap_resamples - 1));
    }
    return s;
}

double detailed_balance_check(const Parameters& p, int samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("detailed_balance_check: samples must be >= 1");
    Rng rng(seed);
    double worst = 0;
    for (int k = 0; k < samples; ++k) {
        SpinConfiguration eta(p.L);
        for (int i = 0; i < eta.size(); ++i) eta.set(i, spin_from_int(static_cast<int>(rng.below(3)) - 1));
        const int i = static_cast<int>(rng.below(eta.size()));
        const int from = value(eta[i]);
        const int pick = static_cast<int>(rng.below(2));
        const int to = pick == 0 ? (from == -1 ? 0 : -1) : (from == 1 ? 0 : 1);
        SpinConfiguration other = eta;
        other.set(i, spin_from_int(to));

        const double forward = transition_probability(eta, other, p);
        const double backward = transition_probability(other, eta, p);
        const double mu_ratio = gibbs_ratio(other, eta, p);  // mu(eta) / mu(other)
        worst = std::max(worst, std::abs(mu_ratio * forward - backward) / backward);
    }
    return worst;
}

void write_trajectory_csv(std::ostream& os, const HittingRecord& record) {
    os << "step,energy,n_plus,n_zero,n_minus\n";
    for (const auto& t : record.trace)
        os << t.step << ',' << format_double(t.energy) << ',' << t.n_plus << ',' << t.n_zero
           << ',' << t.n_minus << '\n';
}

void write_hitting_csv(std::ostream& os, const std::vector<HittingRecord>& records) {
    os << "replica,seed,tau,hit,supercrit_step,centroid_x,centroid_y,cluster_size\n";
    for (const auto& r : records) {
        const auto& e = r.supercritical;
        os << r.replica << ',' << r.seed << ',' << r.tau << ',' << (r.hit ? 1 : 0) << ',';
        if (e.found)
            os << e.step << ',' << format_double(e.centroid_x) << ','
               << format_double(e.centroid_y) << ',' << e.cluster_size;
        else
            os << ",,,";
        os << '\n';
    }
}

}  // namespace bcm
