#include <doctest.h>

#include <algorithm>
#include <random>
#include <stdexcept>

#include "bcm/geometry.hpp"

using namespace bcm;

namespace {

SiteSet random_set(std::mt19937_64& rng, int L, double density) {
    std::bernoulli_distribution keep(density);
    SiteSet I;
    for (int x = 1; x <= L; ++x)
        for (int y = 1; y <= L; ++y)
            if (keep(rng)) I.insert({x, y});
    return I;
}

}  // namespace

TEST_CASE("neighbors distinguishes bulk, edge and corner") {
    CHECK(neighbors({2, 2}, 4).in_box.size() == 4);
    CHECK(neighbors({2, 2}, 4).out_of_box == 0);
    CHECK(neighbors({1, 1}, 4).in_box.size() == 2);
    CHECK(neighbors({1, 1}, 4).out_of_box == 2);
    CHECK(neighbors({1, 3}, 4).in_box.size() == 3);
    CHECK(neighbors({1, 3}, 4).out_of_box == 1);
    CHECK_THROWS_AS(neighbors({0, 2}, 4), std::invalid_argument);
    CHECK_THROWS_AS(neighbors({2, 5}, 4), std::invalid_argument);
}

TEST_CASE("internal and external boundaries") {
    const SiteSet box = Rectangle{{1, 1}, 4, 4}.sites();
    CHECK(internal_boundary(box, 4).size() == 12);

    const SiteSet single{{2, 2}};
    CHECK(internal_boundary(single, 4) == single);
    const auto ext = external_boundary(single, 4);
    CHECK(ext.in_box == SiteSet{{1, 2}, {3, 2}, {2, 1}, {2, 3}});
    CHECK(ext.virtual_sites.empty());

    const SiteSet rect = Rectangle{{1, 1}, 2, 3}.sites();
    CHECK(internal_boundary(rect, 5) == rect);
    CHECK(bulk(rect, 5).empty());

    const auto corner = external_boundary(SiteSet{{1, 1}}, 3);
    CHECK(corner.in_box.size() == 2);
    CHECK(corner.virtual_sites.size() == 2);
}

TEST_CASE("connected components") {
    const auto two = connected_components({{1, 1}, {1, 2}, {4, 4}});
    REQUIRE(two.size() == 2);
    CHECK(two[0] == SiteSet{{1, 1}, {1, 2}});
    CHECK(two[1] == SiteSet{{4, 4}});
    CHECK(connected_components({}).empty());
    CHECK(connected_components({{1, 1}, {1, 2}, {1, 3}, {2, 3}, {3, 3}}).size() == 1);
    CHECK(connected_components({{1, 1}, {2, 2}}).size() == 2);  // diagonal is not adjacent
}

TEST_CASE("rectangular envelope") {
    CHECK(rectangular_envelope(SiteSet{{2, 3}}) == Rectangle{{2, 3}, 1, 1});
    CHECK(rectangular_envelope(SiteSet{{1, 1}, {3, 2}}) == Rectangle{{1, 1}, 3, 2});
    CHECK(rectangular_envelope(SiteSet{{1, 1}, {2, 2}, {3, 3}}) == Rectangle{{1, 1}, 3, 3});
    CHECK_THROWS_AS(rectangular_envelope(SiteSet{}), std::invalid_argument);
}

TEST_CASE("quasi-squares") {
    CHECK(Rectangle{{1, 1}, 2, 3}.is_quasi_square());
    CHECK(Rectangle{{1, 1}, 4, 3}.is_quasi_square());
    CHECK_FALSE(Rectangle{{1, 1}, 3, 3}.is_quasi_square());
    CHECK_FALSE(Rectangle{{1, 1}, 1, 3}.is_quasi_square());
}

TEST_CASE("interacting rectangles") {
    const Rectangle a{{1, 1}, 1, 1};
    CHECK(rectangles_interacting(a, {{3, 1}, 1, 1}));
    CHECK_FALSE(rectangles_interacting(a, {{4, 1}, 1, 1}));
    CHECK(rectangles_interacting(a, {{2, 2}, 1, 1}));
    CHECK_THROWS_AS(rectangles_interacting(a, {{1, 1}, 2, 2}), std::invalid_argument);
}

TEST_CASE("bootstrap examples") {
    CHECK(bootstrap(Rectangle{{2, 2}, 2, 2}.sites()) == std::vector<Rectangle>{{{2, 2}, 2, 2}});
    CHECK(bootstrap({{1, 1}, {3, 1}}) == std::vector<Rectangle>{{{1, 1}, 3, 1}});
    const auto far = bootstrap({{1, 1}, {1, 2}, {6, 6}, {7, 6}});
    CHECK(far == std::vector<Rectangle>{{{1, 1}, 1, 2}, {{6, 6}, 2, 1}});
    CHECK(bootstrap({}).empty());
}

TEST_CASE("bootstrap and boundary properties on random sets") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const int L = 2 + trial % 7;
        const SiteSet I = random_set(rng, L, 0.05 + 0.4 * (trial % 5) / 4.0);

        const SiteSet edge = internal_boundary(I, L), inner = bulk(I, L);
        SiteSet both;
        std::set_intersection(edge.begin(), edge.end(), inner.begin(), inner.end(),
                              std::inserter(both, both.end()));
        CHECK(both.empty());
        SiteSet joined = edge;
        joined.insert(inner.begin(), inner.end());
        CHECK(joined == I);

        const auto rects = bootstrap(I);
        SiteSet covered;
        for (const auto& r : rects) {
            CHECK(std::any_of(I.begin(), I.end(), [&](Site s) { return r.contains(s); }));
            const auto s = r.sites();
            covered.insert(s.begin(), s.end());
        }
        CHECK(std::includes(covered.begin(), covered.end(), I.begin(), I.end()));
        for (std::size_t i = 0; i < rects.size(); ++i)
            for (std::size_t j = i + 1; j < rects.size(); ++j) {
                REQUIRE_FALSE(rects[i].overlaps(rects[j]));
                CHECK_FALSE(rectangles_interacting(rects[i], rects[j]));
            }
        CHECK(bootstrap(covered) == rects);

        if (!I.empty()) {
            SiteSet larger = I;
            const SiteSet extra = random_set(rng, L, 0.2);
            larger.insert(extra.begin(), extra.end());
            CHECK(rectangular_envelope(larger).contains(rectangular_envelope(I)));
        }
    }
}
