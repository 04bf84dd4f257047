#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bcm/dynamics.hpp"

using namespace bcm;

namespace {

Parameters params(double J, double lambda, double h, int L, double beta,
                  Boundary b = Boundary::zero) {
    Parameters p;
    p.J = J;
    p.lambda = lambda;
    p.h = h;
    p.L = L;
    p.beta = beta;
    p.boundary = b;
    return p;
}

SpinConfiguration random_config(std::mt19937_64& rng, int L) {
    std::uniform_int_distribution<int> d(-1, 1);
    SpinConfiguration c(L);
    for (int i = 0; i < c.size(); ++i) c.set(i, spin_from_int(d(rng)));
    return c;
}

}  // namespace

TEST_CASE("rng is reproducible and bounded") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    CHECK(a.next() != c.next());
    Rng r(1);
    for (int i = 0; i < 10000; ++i) {
        CHECK(r.below(7) < 7);
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(Rng::algorithm == "mt19937_64");
}

TEST_CASE("transition probabilities") {
    const auto p = params(1, 0.3, 0.1, 3, 2.0);
    const auto minus = homogeneous(Spin::minus, 3);
    auto two = minus;
    two.set({1, 1}, Spin::zero);
    two.set({2, 2}, Spin::zero);
    CHECK(transition_probability(minus, two, p) == 0.0);

    auto down = minus;
    down.set({1, 1}, Spin::zero);  // uphill by lambda - h
    CHECK(transition_probability(down, minus, p) == doctest::Approx(1.0 / 18));
    CHECK(transition_probability(minus, down, p) ==
          doctest::Approx(std::exp(-2.0 * (p.lambda - p.h)) / 18));

    const auto big = params(1, 0.3, 0.1, 3, 40.0);
    const auto plus = homogeneous(Spin::plus, 3);
    // every move from +1 is uphill by at least lambda + h
    CHECK(transition_probability(plus, plus, big) >= 1 - 9 * std::exp(-40.0 * 0.4));
}

TEST_CASE("rows of the kernel sum to one") {
    std::mt19937_64 rng(2);
    for (Boundary b : {Boundary::zero, Boundary::periodic}) {
        const auto p = params(1, 0.7, 0.4, 2, 1.3, b);
        for (int k = 0; k < 100; ++k) {
            const auto eta = random_config(rng, 2);
            double total = transition_probability(eta, eta, p);
            for (int i = 0; i < eta.size(); ++i)
                for (Spin s : kSpins) {
                    if (s == eta[i]) continue;
                    auto next = eta;
                    next.set(i, s);
                    total += transition_probability(eta, next, p);
                }
            CHECK(std::abs(total - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("zero temperature limit freezes the plus state") {
    ChainState st(homogeneous(Spin::plus, 4), params(1, 0.6, 0.5, 4, 50.0), 7);
    int accepted = 0;
    for (int i = 0; i < 100000; ++i) accepted += st.step();
    CHECK(accepted == 0);
    CHECK(st.step_count() == 100000);
}

TEST_CASE("infinite temperature accepts every proposal and has uniform marginals") {
    ChainState st(homogeneous(Spin::minus, 4), params(1, 0.6, 0.5, 4, 0.0), 3);
    std::array<double, 3> counts{};
    int accepted = 0;
    constexpr int steps = 1'000'000, thin = 256;
    for (int i = 1; i <= steps; ++i) {
        accepted += st.step();
        if (i % thin == 0)
            for (Spin s : kSpins) counts[value(s) + 1] += st.count(s);
    }
    CHECK(accepted == steps);
    const double n = counts[0] + counts[1] + counts[2];
    const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
    for (double c : counts) CHECK(std::abs(c - n / 3) < 3 * sigma);
}

TEST_CASE("cached energy tracks the configuration") {
    for (Boundary b : {Boundary::zero, Boundary::periodic}) {
        const auto p = params(1, 0.9, 0.4, 6, 0.7, b);
        std::mt19937_64 rng(4);
        ChainState st(random_config(rng, 6), p, 11);
        for (int i = 0; i < 200000; ++i) {
            st.step();
            if (i % 5000 == 0) REQUIRE(std::abs(st.energy() - hamiltonian(st.configuration(), p)) < 1e-9);
        }
        CHECK(st.count(Spin::plus) == st.configuration().count(Spin::plus));
        CHECK(st.count(Spin::minus) == st.configuration().count(Spin::minus));
    }
}

TEST_CASE("hitting semantics") {
    const auto p = params(1, 1.4, 0.8, 4, 1.0);
    RunOptions o;
    o.max_steps = 1000;
    const auto minus = homogeneous(Spin::minus, 4);
    auto r = run_until_hit(minus, {Target::all(Spin::minus)}, p, o, 1);
    CHECK(r.hit);
    CHECK(r.tau == 0);

    r = run_until_hit(minus, {Target::all(Spin::minus), Target::all(Spin::plus)}, p, o, 1);
    CHECK(r.tau == 0);
    CHECK(r.target_index == 0);

    o.max_steps = 10;
    r = run_until_hit(minus, {Target::all(Spin::plus)}, params(1, 1.4, 0.8, 4, 30.0), o, 1);
    CHECK(r.timeout);
    CHECK_FALSE(r.hit);
    CHECK(r.tau == 10);

    o.max_steps = 0;
    CHECK_THROWS_AS(run_until_hit(minus, {Target::all(Spin::plus)}, p, o, 1), std::invalid_argument);

    o.max_steps = 100000;
    r = run_until_hit(minus, {Target::manifold(3)}, params(1, 1.4, 0.8, 4, 0.5), o, 5);
    REQUIRE(r.hit);
    ChainState replay(minus, params(1, 1.4, 0.8, 4, 0.5), 5);
    while (replay.step_count() < r.tau) replay.step();
    CHECK(replay.configuration().count(Spin::plus) == 3);
}

TEST_CASE("seeded runs are deterministic and distinct across seeds") {
    const auto p = params(1, 1.4, 0.8, 5, 1.0);
    RunOptions o;
    o.max_steps = 1'000'000;
    o.stride = 50;
    o.supercritical_threshold = 4;
    const auto minus = homogeneous(Spin::minus, 5);
    const std::vector<Target> t{Target::all(Spin::plus)};
    CHECK(run_until_hit(minus, t, p, o, 9) == run_until_hit(minus, t, p, o, 9));

    const auto reps = sample_exit_times(p, minus, t, 10, o, 100);
    for (std::size_t i = 0; i < reps.size(); ++i) {
        CHECK(reps[i].replica == static_cast<int>(i));
        CHECK(reps[i].seed == 100 + i);
        for (std::size_t j = i + 1; j < reps.size(); ++j) CHECK(reps[i].trace != reps[j].trace);
    }
    auto single = run_until_hit(minus, t, p, o, 100);
    CHECK(sample_exit_times(p, minus, t, 1, o, 100).front() == single);
    CHECK(sample_exit_times(p, minus, t, 10, o, 100, 3) == reps);
}

TEST_CASE("supercritical event matches the replayed cluster") {
    for (Boundary b : {Boundary::zero, Boundary::periodic}) {
        const auto p = params(1, 1.4, 0.8, 6, 0.8, b);
        RunOptions o;
        o.max_steps = 10'000'000;
        o.supercritical_threshold = 6;
        o.stop_at_supercritical = true;
        const auto minus = homogeneous(Spin::minus, 6);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto r = run_until_hit(minus, {Target::all(Spin::plus)}, p, o, seed);
            REQUIRE(r.supercritical.found);
            CHECK(r.tau == r.supercritical.step);
            ChainState replay(minus, p, seed);
            while (replay.step_count() < r.tau) replay.step();
            const Site last = replay.configuration().site(replay.last_flip_index());
            const auto clusters = clusters_of(replay.configuration(), Spin::plus);
            std::size_t size = 0;
            double cx = 0, cy = 0;
            for (const auto& c : clusters)
                if (c.contains(last)) {
                    size = c.size();
                    for (Site s : c) {
                        cx += s.x;
                        cy += s.y;
                    }
                }
            CHECK(r.supercritical.centroid_x >= 0.5);
            CHECK(r.supercritical.centroid_x < 6.5);
            CHECK(r.supercritical.centroid_y >= 0.5);
            CHECK(r.supercritical.centroid_y < 6.5);
            if (b == Boundary::zero) {
                // no wrapping, so the box cluster is the cluster
                CHECK(static_cast<int>(size) == r.supercritical.cluster_size);
                CHECK(r.supercritical.centroid_x == doctest::Approx(cx / size));
                CHECK(r.supercritical.centroid_y == doctest::Approx(cy / size));
            }
            CHECK(r.supercritical.cluster_size >= 6);
        }
    }
}

TEST_CASE("periodic centroid unwraps across the seam") {
    const auto p = params(1, 1.4, 0.8, 6, 0.0, Boundary::periodic);
    // plus row at y = 3 covering x = 5, 6, 1; growing it to x = 2 gives a
    // cluster straddling the seam whose unwrapped mean is 6.5, i.e. 0.5
    SpinConfiguration c(6, Spin::minus);
    c.set({5, 3}, Spin::plus);
    c.set({6, 3}, Spin::plus);
    c.set({1, 3}, Spin::plus);
    RunOptions q;
    q.max_steps = 1'000'000;
    q.supercritical_threshold = 4;
    q.stop_at_supercritical = true;
    const SiteSet right{{5, 3}, {6, 3}}, left{{1, 3}, {2, 3}};
    int seen = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto r = run_until_hit(c, {Target::all(Spin::plus)}, p, q, seed);
        REQUIRE(r.supercritical.found);
        CHECK(r.supercritical.centroid_x >= 0.5);
        CHECK(r.supercritical.centroid_x < 6.5);
        if (r.supercritical.cluster_size != 4) continue;
        ChainState replay(c, p, seed);
        while (replay.step_count() < r.tau) replay.step();
        const auto boxed = clusters_of(replay.configuration(), Spin::plus);
        const bool has_right = std::find(boxed.begin(), boxed.end(), right) != boxed.end();
        const bool has_left = std::find(boxed.begin(), boxed.end(), left) != boxed.end();
        if (has_right && has_left) {
            CHECK(r.supercritical.centroid_x == doctest::Approx(0.5));
            CHECK(r.supercritical.centroid_y == doctest::Approx(3.0));
            ++seen;
        }
    }
    CHECK(seen > 0);
}

TEST_CASE("detailed balance") {
    CHECK(detailed_balance_check(params(1, 0.3, 0.1, 4, 1.7), 10000, 1) < 1e-12);
    CHECK(detailed_balance_check(params(1, 0.1, 0.3, 3, 4.0), 10000, 2) < 1e-12);
    CHECK(detailed_balance_check(params(1, 1.4, 0.8, 5, 2.5, Boundary::periodic), 10000, 3) < 1e-12);

    // a pair with zero energy change: both directions carry the same weight
    const auto p = params(1, 0.3, 0.3, 3, 2.0);
    const auto minus = homogeneous(Spin::minus, 3);
    auto corner = minus;
    corner.set({1, 1}, Spin::zero);
    CHECK(transition_probability(minus, corner, p) == transition_probability(corner, minus, p));
}

TEST_CASE("summary statistics") {
    std::vector<HittingRecord> recs(4);
    const std::uint64_t taus[] = {10, 20, 30, 100};
    for (int i = 0; i < 4; ++i) {
        recs[i].hit = true;
        recs[i].tau = taus[i];
    }
    HittingRecord t;
    t.timeout = true;
    t.tau = 1000;
    recs.push_back(t);
    const auto s = summarize(recs, 100, 1);
    CHECK(s.replicas == 5);
    CHECK(s.hits == 4);
    CHECK(s.timeouts == 1);
    CHECK(s.mean_tau == doctest::Approx(40));
    CHECK(s.median_tau == doctest::Approx(25));
    CHECK(s.log_mean_tau == doctest::Approx(std::log(40.0)));
    CHECK(s.mean_log_tau ==
          doctest::Approx((std::log(10.0) + std::log(20.0) + std::log(30.0) + std::log(100.0)) / 4));
    CHECK(s.log_mean_se > 0);
}

TEST_CASE("quadrupling replicas halves the bootstrap error of the log mean") {
    const auto p = params(1, 1.4, 0.8, 4, 1.0);
    RunOptions o;
    o.max_steps = 100'000'000;
    const auto minus = homogeneous(Spin::minus, 4);
    const std::vector<Target> t{Target::all(Spin::plus)};
    const auto small = summarize(sample_exit_times(p, minus, t, 200, o, 0), 400, 1);
    const auto large = summarize(sample_exit_times(p, minus, t, 800, o, 1000), 400, 1);
    const double ratio = small.log_mean_se / large.log_mean_se;
    CHECK(ratio > 2 * 0.7);
    CHECK(ratio < 2 * 1.3);
}

TEST_CASE("csv writers") {
    HittingRecord r;
    r.replica = 2;
    r.seed = 7;
    r.tau = 12;
    r.hit = true;
    r.trace = {{0, -1.5, 0, 1, 3}};
    std::ostringstream a, b;
    write_trajectory_csv(a, r);
    CHECK(a.str() == "step,energy,n_plus,n_zero,n_minus\n0,-1.5,0,1,3\n");
    write_hitting_csv(b, {r});
    CHECK(b.str() ==
          "replica,seed,tau,hit,supercrit_step,centroid_x,centroid_y,cluster_size\n2,7,12,1,,,,\n");
}
