#include "bcm/geometry.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

namespace bcm {

namespace {

constexpr std::array<Site, 4> kSteps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

Site shifted(Site s, Site d) { return {s.x + d.x, s.y + d.y}; }

void require_in_box(const SiteSet& I, int L) {
    for (Site s : I) {
        if (!in_box(s, L)) {
            throw std::invalid_argument("site (" + std::to_string(s.x) + "," +
                                        std::to_string(s.y) + ") outside the box");
        }
    }
}

bool adjacent(const Rectangle& a, const Rectangle& b) {
    if (a.overlaps(b)) return false;
    const Rectangle wide{{a.min.x - 1, a.min.y}, a.width + 2, a.height};
    const Rectangle tall{{a.min.x, a.min.y - 1}, a.width, a.height + 2};
    return wide.overlaps(b) || tall.overlaps(b);
}

bool touches(const Rectangle& r, Site s) {
    for (Site d : kSteps) {
        if (r.contains(shifted(s, d))) return true;
    }
    return false;
}

bool must_merge(const Rectangle& a, const Rectangle& b) {
    return a.overlaps(b) || adjacent(a, b) || rectangles_interacting(a, b);
}

// Union-find over indices; returns groups ordered by smallest member index.
std::vector<std::vector<std::size_t>> group_pairs(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (auto [i, j] : edges) {
        auto ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
    }
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> slot(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = find(i);
        if (slot[r] == n) {
            slot[r] = groups.size();
            groups.emplace_back();
        }
        groups[slot[r]].push_back(i);
    }
    return groups;
}

}  // namespace

SiteSet Rectangle::sites() const {
    SiteSet out;
    for (int x = min.x; x <= max_x(); ++x)
        for (int y = min.y; y <= max_y(); ++y) out.insert({x, y});
    return out;
}

bool in_box(Site s, int L) { return s.x >= 1 && s.x <= L && s.y >= 1 && s.y <= L; }

Neighborhood neighbors(Site s, int L) {
    if (!in_box(s, L)) {
        throw std::invalid_argument("neighbors: site outside the box");
    }
    Neighborhood n;
    for (Site d : kSteps) {
        Site t = shifted(s, d);
        if (in_box(t, L))
            n.in_box.push_back(t);
        else
            ++n.out_of_box;
    }
    std::sort(n.in_box.begin(), n.in_box.end());
    return n;
}

SiteSet internal_boundary(const SiteSet& I, int L) {
    require_in_box(I, L);
    SiteSet out;
    for (Site s : I) {
        for (Site d : kSteps) {
            if (!I.contains(shifted(s, d))) {
                out.insert(s);
                break;
            }
        }
    }
    return out;
}

SiteSet bulk(const SiteSet& I, int L) {
    const SiteSet boundary = internal_boundary(I, L);
    SiteSet out;
    std::set_difference(I.begin(), I.end(), boundary.begin(), boundary.end(),
                        std::inserter(out, out.end()));
    return out;
}

ExternalBoundary external_boundary(const SiteSet& I, int L) {
    require_in_box(I, L);
    ExternalBoundary out;
    SiteSet virtual_sites;
    for (Site s : I) {
        for (Site d : kSteps) {
            Site t = shifted(s, d);
            if (I.contains(t)) continue;
            if (in_box(t, L))
                out.in_box.insert(t);
            else
                virtual_sites.insert(t);
        }
    }
    out.virtual_sites.assign(virtual_sites.begin(), virtual_sites.end());
    return out;
}

std::vector<SiteSet> connected_components(const SiteSet& I) {
    std::vector<SiteSet> components;
    SiteSet seen;
    for (Site root : I) {
        if (seen.contains(root)) continue;
        SiteSet component;
        std::queue<Site> frontier;
        frontier.push(root);
        seen.insert(root);
        while (!frontier.empty()) {
            Site s = frontier.front();
            frontier.pop();
            component.insert(s);
            for (Site d : kSteps) {
                Site t = shifted(s, d);
                if (I.contains(t) && seen.insert(t).second) frontier.push(t);
            }
        }
        components.push_back(std::move(component));
    }
    // iteration over I is lexicographic, so roots already come in order
    return components;
}

Rectangle rectangular_envelope(const SiteSet& I) {
    if (I.empty()) throw std::invalid_argument("rectangular_envelope: empty set");
    int x0 = I.begin()->x, x1 = x0, y0 = I.begin()->y, y1 = y0;
    for (Site s : I) {
        x0 = std::min(x0, s.x);
        x1 = std::max(x1, s.x);
        y0 = std::min(y0, s.y);
        y1 = std::max(y1, s.y);
    }
    return {{x0, y0}, x1 - x0 + 1, y1 - y0 + 1};
}

Rectangle rectangular_envelope(const Rectangle& a, const Rectangle& b) {
    const int x0 = std::min(a.min.x, b.min.x), y0 = std::min(a.min.y, b.min.y);
    const int x1 = std::max(a.max_x(), b.max_x()), y1 = std::max(a.max_y(), b.max_y());
    return {{x0, y0}, x1 - x0 + 1, y1 - y0 + 1};
}

bool rectangles_interacting(const Rectangle& a, const Rectangle& b) {
    if (a.overlaps(b)) throw std::invalid_argument("rectangles_interacting: overlap");
    // candidates: sites adjacent to a (on Z^2)
    for (int x = a.min.x - 1; x <= a.max_x() + 1; ++x) {
        for (int y = a.min.y - 1; y <= a.max_y() + 1; ++y) {
            const Site s{x, y};
            if (a.contains(s) || b.contains(s)) continue;
            if (touches(a, s) && touches(b, s)) return true;
        }
    }
    return false;
}

std::vector<Rectangle> bootstrap(const SiteSet& I) {
    std::vector<Rectangle> family;
    for (const auto& component : connected_components(I))
        family.push_back(rectangular_envelope(component));

    for (;;) {
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t i = 0; i < family.size(); ++i)
            for (std::size_t j = i + 1; j < family.size(); ++j)
                if (must_merge(family[i], family[j])) edges.emplace_back(i, j);
        if (edges.empty()) break;

        std::vector<Rectangle> merged;
        for (const auto& group : group_pairs(family.size(), edges)) {
            Rectangle r = family[group.front()];
            for (std::size_t k : group) r = rectangular_envelope(r, family[k]);
            merged.push_back(r);
        }
        family = std::move(merged);
    }
    std::sort(family.begin(), family.end(),
              [](const Rectangle& a, const Rectangle& b) { return a.min < b.min; });
    return family;
}

}  // namespace bcm
