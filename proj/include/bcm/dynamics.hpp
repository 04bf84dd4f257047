#pragma once

// Discrete-time Metropolis single-flip chain, seeded trajectories and
// hitting-time measurement.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "bcm/model.hpp"

namespace bcm {

/// 64-bit Mersenne Twister with portable bounded-integer and unit-interval
/// mappings, so a seed reproduces the same stream on every platform.
class Rng {
public:
    static constexpr std::string_view algorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, n), n > 0 (Lemire's multiply-and-reject).
    std::uint64_t below(std::uint64_t n);
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool operator==(const Rng&) const = default;

private:
    std::mt19937_64 engine_;
};

/// Owned state of one chain: configuration, step counter, generator and a
/// cached energy kept in step with the configuration.
class ChainState {
public:
    ChainState(SpinConfiguration start, const Parameters& p, std::uint64_t seed);

    /// One attempted move; returns true when the flip was accepted.
    bool step();

    const SpinConfiguration& configuration() const { return config_; }
    const Parameters& parameters() const { return params_; }
    std::uint64_t step_count() const { return steps_; }
    double energy() const { return energy_; }
    int count(Spin s) const { return counts_[value(s) + 1]; }
    const Rng& rng() const { return rng_; }

    /// Site index and new spin of the most recent accepted flip.
    int last_flip_index() const { return last_index_; }
    Spin last_flip_spin() const { return last_spin_; }

    /// Recomputes the cached energy from scratch.
    void resync();

    /// Neighbour indices of a site; -1 marks an out-of-box (frozen zero) site.
    const std::array<int, 4>& neighbor_indices(int i) const { return neighbors_[i]; }

private:
    static constexpr int table_index(int from, int to, int sum) {
        return ((from + 1) * 3 + (to + 1)) * 9 + (sum + 4);
    }

    Parameters params_;
    SpinConfiguration config_;
    Rng rng_;
    std::uint64_t steps_ = 0;
    std::uint64_t accepted_since_sync_ = 0;
    double energy_ = 0;
    std::array<int, 3> counts_{};
    int last_index_ = -1;
    Spin last_spin_ = Spin::zero;
    std::vector<std::array<int, 4>> neighbors_;
    std::array<double, 81> delta_{};
    std::array<double, 81> accept_{};
};

/// Markov kernel entry p(eta, eta'), including the diagonal.
double transition_probability(const SpinConfiguration& eta, const SpinConfiguration& eta_prime,
                              const Parameters& p);

// Hitting-time measurement ---------------------------------------------------

struct Target {
    enum class Kind { homogeneous, plus_count, configuration };

    Kind kind = Kind::homogeneous;
    Spin spin = Spin::plus;
    int plus_count = 0;
    SpinConfiguration config;
    std::string label;

    static Target all(Spin s);
    static Target manifold(int n_plus);
    static Target exactly(SpinConfiguration c, std::string label = "configuration");

    bool matches(const ChainState& state) const;
};

struct RunOptions {
    std::uint64_t max_steps = 1'000'000;
    std::uint64_t stride = 0;          // trace subsampling; 0 disables the trace
    int supercritical_threshold = 0;   // plus-cluster size; 0 disables detection
    bool stop_at_supercritical = false;
};

struct TracePoint {
    std::uint64_t step = 0;
    double energy = 0;
    int n_plus = 0;
    int n_zero = 0;
    int n_minus = 0;

    bool operator==(const TracePoint&) const = default;
};

struct SupercriticalEvent {
    bool found = false;
    std::uint64_t step = 0;
    double centroid_x = 0;
    double centroid_y = 0;
    int cluster_size = 0;

    bool operator==(const SupercriticalEvent&) const = default;
};

struct HittingRecord {
    int replica = 0;
    std::uint64_t seed = 0;
    bool hit = false;
    bool timeout = false;
    int target_index = -1;
    std::string target_label;
    std::uint64_t tau = 0;  // first hitting step, or steps run when timed out
    int L = 0;
    std::vector<TracePoint> trace;
    SupercriticalEvent supercritical;

    double sweeps() const { return L > 0 ? static_cast<double>(tau) / (L * L) : 0.0; }
    bool operator==(const HittingRecord&) const = default;
};

/// Runs until a target matches or max_steps is reached. A start inside the
/// target set gives tau = 0. Timeouts are flagged, never thrown.
HittingRecord run_until_hit(const SpinConfiguration& start, const std::vector<Target>& targets,
                            const Parameters& p, const RunOptions& options, std::uint64_t seed);

/// Independent replicas seeded seed_base + replica, returned in replica order.
/// The result does not depend on the number of workers.
std::vector<HittingRecord> sample_exit_times(const Parameters& p, const SpinConfiguration& start,
                                             const std::vector<Target>& targets, int replicas,
                                             const RunOptions& options, std::uint64_t seed_base,
                                             int workers = 1);

struct ExitStatistics {
    int replicas = 0;
    int hits = 0;
    int timeouts = 0;
    double mean_tau = 0;       // over hits
    double median_tau = 0;     // over hits
    double log_mean_tau = 0;   // log of the sample mean
    double mean_log_tau = 0;   // sample mean of log(tau), tau >= 1
    double log_mean_se = 0;    // bootstrap standard error of log_mean_tau
};

ExitStatistics summarize(const std::vector<HittingRecord>& records, int bootstrap_resamples = 200,
                         std::uint64_t bootstrap_seed = 0);

/// Max relative detailed-balance violation over random communicating pairs.
double detailed_balance_check(const Parameters& p, int samples, std::uint64_t seed = 0);

// CSV output -------------------------------------------------------------------

void write_trajectory_csv(std::ostream& os, const HittingRecord& record);
void write_hitting_csv(std::ostream& os, const std::vector<HittingRecord>& records);

}  // namespace bcm
