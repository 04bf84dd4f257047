#pragma once

// Lattice geometry on the box {1..L}^2: sites, rectangles, boundaries,
// connected components and the bootstrap (envelope-and-merge) construction.

#include <compare>
#include <set>
#include <vector>

namespace bcm {

struct Site {
    int x = 0;
    int y = 0;

    auto operator<=>(const Site&) const = default;
};

/// Ordered set of distinct sites; iteration order is lexicographic (x, then y).
using SiteSet = std::set<Site>;

struct Rectangle {
    Site min;
    int width = 1;
    int height = 1;

    int max_x() const { return min.x + width - 1; }
    int max_y() const { return min.y + height - 1; }
    bool contains(Site s) const {
        return s.x >= min.x && s.x <= max_x() && s.y >= min.y && s.y <= max_y();
    }
    bool contains(const Rectangle& r) const {
        return contains(r.min) && contains(Site{r.max_x(), r.max_y()});
    }
    bool overlaps(const Rectangle& r) const {
        return min.x <= r.max_x() && r.min.x <= max_x() && min.y <= r.max_y() &&
               r.min.y <= max_y();
    }
    bool is_quasi_square() const {
        return width == height + 1 || height == width + 1;
    }
    int area() const { return width * height; }
    SiteSet sites() const;

    auto operator<=>(const Rectangle&) const = default;
};

bool in_box(Site s, int L);

struct Neighborhood {
    std::vector<Site> in_box;
    int out_of_box = 0;  // 0 bulk, 1 edge, 2 corner
};

/// Nearest neighbours of an in-box site. Throws std::invalid_argument if s is
/// outside the box.
Neighborhood neighbors(Site s, int L);

/// Sites of I with a nearest neighbour outside I (out-of-box counts as outside).
SiteSet internal_boundary(const SiteSet& I, int L);
SiteSet bulk(const SiteSet& I, int L);

struct ExternalBoundary {
    SiteSet in_box;
    std::vector<Site> virtual_sites;  // out-of-box sites adjacent to I, sorted
};
ExternalBoundary external_boundary(const SiteSet& I, int L);

/// Maximal nearest-neighbour-connected subsets, ordered by smallest member.
std::vector<SiteSet> connected_components(const SiteSet& I);

Rectangle rectangular_envelope(const SiteSet& I);
Rectangle rectangular_envelope(const Rectangle& a, const Rectangle& b);

/// True iff some site outside both rectangles is a nearest neighbour of each.
/// Throws std::invalid_argument when the rectangles overlap.
bool rectangles_interacting(const Rectangle& a, const Rectangle& b);

/// Envelope-and-merge construction. Rectangles that overlap or touch are
/// merged as well as interacting ones, so the output is pairwise disjoint,
/// non-adjacent and non-interacting. Sorted by min corner.
std::vector<Rectangle> bootstrap(const SiteSet& I);

}  // namespace bcm
