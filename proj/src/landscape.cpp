#include "bcm/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "bcm/snapshot.hpp"

namespace bcm {

// Path ---------------------------------------------------------------------------

Path::Path(SpinConfiguration start, const Parameters& p)
    : started_(true), params_(p), start_(std::move(start)), current_(start_),
      start_energy_(hamiltonian(start_, p)) {}

Path Path::from_configurations(const std::vector<SpinConfiguration>& configs,
                               const Parameters& p) {
    if (configs.empty()) return {};
    Path w(configs.front(), p);
    for (std::size_t i = 1; i < configs.size(); ++i) {
        const auto diff = configs[i - 1].differences(configs[i]);
        if (diff.size() != 1)
            throw std::invalid_argument("path entries " + std::to_string(i - 1) + " and " +
                                        std::to_string(i) + " do not differ at exactly one site");
        w.flip(configs[i].site(diff.front()), configs[i][diff.front()]);
    }
    return w;
}

void Path::flip(Site s, Spin to) {
    if (!started_) throw std::logic_error("Path::flip on an empty path");
    const Spin from = current_.at(s);
    if (from == to) throw std::invalid_argument("Path::flip: site already has that spin");
    const double before = flips_.empty() ? start_energy_ : flips_.back().energy_after;
    const double after = before + delta_h(current_, s, to, params_);
    current_.set(s, to);
    flips_.push_back({s, from, to, after});
}

double Path::energy(std::size_t i) const {
    if (i >= length()) throw std::out_of_range("Path::energy");
    return i == 0 ? start_energy_ : flips_[i - 1].energy_after;
}

SpinConfiguration Path::configuration(std::size_t i) const {
    if (i >= length()) throw std::out_of_range("Path::configuration");
    SpinConfiguration c = start_;
    for (std::size_t k = 0; k < i; ++k) c.set(flips_[k].site, flips_[k].to);
    return c;
}

std::size_t Path::argmax() const {
    if (empty()) throw std::invalid_argument("argmax of an empty path");
    std::size_t best = 0;
    for (std::size_t i = 1; i < length(); ++i)
        if (energy(i) > energy(best)) best = i;
    return best;
}

double path_height(const Path& w) {
    if (w.empty()) throw std::invalid_argument("path_height: empty path");
    return w.energy(w.argmax());
}

void write_witness_path(std::ostream& os, const Path& w) {
    const Parameters& p = w.parameters();
    os << w.front().side() << ' ' << format_double(p.J) << ' ' << format_double(p.lambda)
       << ' ' << format_double(p.h) << '\n';
    for (const Flip& f : w.flips())
        os << f.site.x << ' ' << f.site.y << ' ' << value(f.from) << ' ' << value(f.to) << ' '
           << format_double(f.energy_after) << '\n';
}

// Geometry helpers -----------------------------------------------------------------

Site rotate(Site s, int L, int quarter_turns) {
    const int r = ((quarter_turns % 4) + 4) % 4;
    for (int k = 0; k < r; ++k) s = {L + 1 - s.y, s.x};
    return s;
}

SpinConfiguration rotate(const SpinConfiguration& c, int quarter_turns) {
    const int L = c.side();
    SpinConfiguration out(L);
    for (int i = 0; i < c.size(); ++i) out.set(rotate(c.site(i), L, quarter_turns), c[i]);
    return out;
}

namespace {

void fill_rect(SpinConfiguration& c, int x0, int x1, int y0, int y1, Spin s) {
    for (int x = x0; x <= x1; ++x)
        for (int y = y0; y <= y1; ++y) c.set({x, y}, s);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw DoesNotFit(what);
}

}  // namespace

const char* frame_kind_name(FrameKind k) {
    switch (k) {
        case FrameKind::frame: return "frame";
        case FrameKind::boundary_frame: return "boundary_frame";
        case FrameKind::corner_frame: return "corner_frame";
        case FrameKind::chopped_corner_frame: return "chopped_corner_frame";
        case FrameKind::chopped_boundary_frame: return "chopped_boundary_frame";
    }
    return "?";
}

std::optional<FrameKind> frame_kind_from_name(std::string_view name) {
    for (FrameKind k : {FrameKind::frame, FrameKind::boundary_frame, FrameKind::corner_frame,
                        FrameKind::chopped_corner_frame, FrameKind::chopped_boundary_frame})
        if (name == frame_kind_name(k)) return k;
    return std::nullopt;
}

SpinConfiguration build_frame(const FrameSpec& spec, const Parameters& p) {
    const int L = p.L, l = spec.side;
    if (l < 1) throw std::invalid_argument("build_frame: side must be >= 1");
    const int centred = (L - l) / 2 + 1;

    Site a{};
    switch (spec.kind) {
        case FrameKind::frame: a = {centred, centred}; break;
        case FrameKind::boundary_frame: a = {2, centred}; break;
        case FrameKind::corner_frame: a = {2, 2}; break;
        case FrameKind::chopped_corner_frame: a = {1, 1}; break;
        case FrameKind::chopped_boundary_frame: a = {1, centred}; break;
    }
    if (spec.anchor) a = *spec.anchor;
    const int x1 = a.x + l - 1, y1 = a.y + l - 1;
    const std::string name = frame_kind_name(spec.kind);

    SpinConfiguration c(L, Spin::minus);
    switch (spec.kind) {
        case FrameKind::frame:
            require(a.x - 1 >= 2 && a.y - 1 >= 2 && x1 + 1 <= L - 1 && y1 + 1 <= L - 1,
                    name + ": zero ring must stay off the boundary");
            fill_rect(c, a.x - 1, a.x - 1, a.y, y1, Spin::zero);
            fill_rect(c, x1 + 1, x1 + 1, a.y, y1, Spin::zero);
            fill_rect(c, a.x, x1, a.y - 1, a.y - 1, Spin::zero);
            fill_rect(c, a.x, x1, y1 + 1, y1 + 1, Spin::zero);
            break;
        case FrameKind::boundary_frame:
            require(a.x == 2 && a.y - 1 >= 2 && y1 + 1 <= L - 1 && x1 + 1 <= L - 1,
                    name + ": square must sit one site off a single edge");
            fill_rect(c, 1, 1, a.y - 1, y1 + 1, Spin::zero);
            fill_rect(c, x1 + 1, x1 + 1, a.y, y1, Spin::zero);
            fill_rect(c, a.x, x1, a.y - 1, a.y - 1, Spin::zero);
            fill_rect(c, a.x, x1, y1 + 1, y1 + 1, Spin::zero);
            break;
        case FrameKind::corner_frame:
            require(a.x == 2 && a.y == 2 && x1 + 1 <= L - 1,
                    name + ": square must sit one site off a corner");
            fill_rect(c, 1, 1, 1, y1 + 1, Spin::zero);
            fill_rect(c, 2, x1 + 1, 1, 1, Spin::zero);
            fill_rect(c, x1 + 1, x1 + 1, 2, y1, Spin::zero);
            fill_rect(c, 2, x1, y1 + 1, y1 + 1, Spin::zero);
            break;
        case FrameKind::chopped_corner_frame:
            require(a.x == 1 && a.y == 1 && x1 + 1 <= L - 1,
                    name + ": square must fill a corner with room for its zero layer");
            fill_rect(c, x1 + 1, x1 + 1, 1, y1, Spin::zero);
            fill_rect(c, 1, x1, y1 + 1, y1 + 1, Spin::zero);
            break;
        case FrameKind::chopped_boundary_frame:
            require(a.x == 1 && a.y - 1 >= 2 && y1 + 1 <= L - 1 && x1 + 1 <= L - 1,
                    name + ": square must touch a single edge");
            fill_rect(c, x1 + 1, x1 + 1, a.y, y1, Spin::zero);
            fill_rect(c, 1, x1, a.y - 1, a.y - 1, Spin::zero);
            fill_rect(c, 1, x1, y1 + 1, y1 + 1, Spin::zero);
            break;
    }
    fill_rect(c, a.x, x1, a.y, y1, Spin::plus);
    return rotate(c, spec.rotation);
}

double frame_energy_delta(FrameKind kind, int ell, const Parameters& p) {
    if (ell < 1) throw std::invalid_argument("frame_energy_delta: side must be >= 1");
    const double J = p.J, d = p.lambda - p.h, l = ell, bulk = -2 * p.h * l * l;
    switch (kind) {
        case FrameKind::frame: return bulk + 4 * J * l + 4 * J * (l + 2) + 4 * l * d;
        case FrameKind::boundary_frame: return bulk + 4 * J * l + 2 * J * (l + 2) + (4 * l + 2) * d;
        case FrameKind::corner_frame: return bulk + 4 * J * l + (4 * l + 3) * d;
        case FrameKind::chopped_corner_frame:
            return bulk + 2 * J * l + 2 * J * (l + 1) - 2 * J + 2 * l * d;
        case FrameKind::chopped_boundary_frame:
            return bulk + 3 * J * l + J * (3 * l + 2) + 3 * l * d;
    }
    return 0;
}

// Critical configurations -----------------------------------------------------------

SpinConfiguration build_sigma_F(int m, int n, const Parameters& p, int rotation) {
    if (m < 1 || n < 1) throw std::invalid_argument("build_sigma_F: sides must be >= 1");
    require(m + 1 <= p.L && n + 1 <= p.L, "sigma_F: rectangle and zero layer exceed the box");
    SpinConfiguration c(p.L, Spin::minus);
    fill_rect(c, 1, m, 1, n, Spin::plus);
    fill_rect(c, m + 1, m + 1, 1, n, Spin::zero);
    fill_rect(c, 1, m, n + 1, n + 1, Spin::zero);
    return rotate(c, rotation);
}

double sigma_F_energy_delta(int m, int n, const Parameters& p) {
    return 2 * p.J * (n + m) + p.lambda * (n + m) - p.h * (2.0 * m * n + n + m);
}

namespace {

// Canonical sigma_c with its protuberance on the long side, next to the x
// axis. The y-axis variant is its mirror image in the diagonal through the
// anchor corner; on the short side the zero layer is one site too short at
// l_c = 2 and the energy would not match.
SpinConfiguration critical_with_protuberance(const Parameters& p, ProtuberanceSide side,
                                             bool saddle) {
    const int lc = critical_quantities(p).l_c;
    require(lc >= 2 && lc + 2 <= p.L, "critical configurations need 2 <= l_c and l_c + 2 <= L");
    SpinConfiguration c = build_sigma_F(lc - 1, lc, p);
    c.set({lc + 1, 1}, Spin::zero);
    c.set({lc, 1}, Spin::plus);
    if (saddle) c.set({lc + 1, 2}, Spin::zero);
    if (side == ProtuberanceSide::x_axis) return c;
    SpinConfiguration t(p.L);
    for (int x = 1; x <= p.L; ++x)
        for (int y = 1; y <= p.L; ++y) t.set({y, x}, c.at({x, y}));
    return t;
}

}  // namespace

SpinConfiguration build_sigma_c(const Parameters& p, int rotation) {
    const int lc = critical_quantities(p).l_c;
    require(lc >= 2, "sigma_c needs l_c >= 2");
    return build_sigma_F(lc - 1, lc, p, rotation);
}

SpinConfiguration build_sigma_c_tilde(const Parameters& p, int rotation, ProtuberanceSide side) {
    return rotate(critical_with_protuberance(p, side, false), rotation);
}

SpinConfiguration build_sigma_s(const Parameters& p, int rotation, ProtuberanceSide side) {
    return rotate(critical_with_protuberance(p, side, true), rotation);
}

CriticalQuantities critical_quantities(const Parameters& p) {
    const double J = p.J, l = p.lambda, h = p.h;
    if (!(h > 0) || !(l > h))
        throw std::invalid_argument("critical quantities require lambda > h > 0");
    CriticalQuantities q;
    q.l_c = static_cast<int>(std::floor((2 * J + l - h) / (2 * h))) + 1;
    const double lc = q.l_c;
    q.Gamma = 4 * J * lc + 2 * l * lc - 2 * h * lc * lc - 2 * h;
    q.Gamma_star = 2 * J * J / h;
    q.l_plus = static_cast<int>(std::ceil(2 * J / (l + h)));
    q.l_F = static_cast<int>(std::floor((2 * J + l - h) / h));
    q.l_tilde = static_cast<int>(std::floor((J + l + h) / h));
    q.n_tilde = static_cast<int>(std::floor(2 * J / (l + h))) + 1;
    q.n_plus_c = q.l_c * (q.l_c - 1);
    return q;
}

void write_landscape_report(std::ostream& os, const CriticalQuantities& q) {
    os << "quantity,value\n"
       << "l_c," << q.l_c << '\n'
       << "Gamma," << format_double(q.Gamma) << '\n'
       << "Gamma_star," << format_double(q.Gamma_star) << '\n'
       << "l_plus," << q.l_plus << '\n'
       << "l_F," << q.l_F << '\n'
       << "l_tilde," << q.l_tilde << '\n'
       << "n_tilde," << q.n_tilde << '\n'
       << "n_plus_c," << q.n_plus_c << '\n';
}

double rectangle_energy_delta(int m, int n, const Parameters& p) {
    return 2 * p.J * (n + m) - (p.lambda + p.h) * m * n;
}

// Reference paths -------------------------------------------------------------------

namespace {

// Grows the corner plus rectangle (extent `a` along the growth axis, `b`
// across it) by one line. `at(u, v)` maps growth-axis coordinates to sites.
template <class Map>
void grow_chopped_frame(Path& w, int a, int b, int L, Map at) {
    const bool has_outer = a + 2 <= L;
    const bool has_diag = b + 1 <= L;
    for (int k = 1; k <= b; ++k) {
        const Site target = at(a + 1, k);
        const Site outer = at(a + 2, k);
        if (k == b && has_diag) {
            const Site diag = at(a + 1, b + 1);
            // Two orders for the last site; take the one with the lower local peak.
            SpinConfiguration c = w.back();
            const Parameters& p = w.parameters();
            double e = 0, peak_a = 0, peak_b = 0;
            auto apply = [&](Site s, Spin to, double& peak) {
                e += delta_h(c, s, to, p);
                c.set(s, to);
                peak = std::max(peak, e);
            };
            apply(diag, Spin::zero, peak_a);
            if (has_outer) apply(outer, Spin::zero, peak_a);
            apply(target, Spin::plus, peak_a);
            c = w.back();
            e = 0;
            if (has_outer) apply(outer, Spin::zero, peak_b);
            apply(target, Spin::plus, peak_b);
            apply(diag, Spin::zero, peak_b);

            if (peak_a <= peak_b) {
                w.flip(diag, Spin::zero);
                if (has_outer) w.flip(outer, Spin::zero);
                w.flip(target, Spin::plus);
            } else {
                if (has_outer) w.flip(outer, Spin::zero);
                w.flip(target, Spin::plus);
                w.flip(diag, Spin::zero);
            }
            continue;
        }
        if (has_outer) w.flip(outer, Spin::zero);
        w.flip(target, Spin::plus);
    }
}

}  // namespace

Path reference_path_minus_to_plus(const Parameters& p, int rotation) {
    const auto q = critical_quantities(p);
    const int L = p.L;
    require(q.l_c + 2 <= L, "reference path needs l_c + 2 <= L");

    Path w(homogeneous(Spin::minus, L), p);
    auto place = [&](Site s) { return rotate(s, L, rotation); };
    w.flip(place({1, 1}), Spin::zero);
    w.flip(place({2, 1}), Spin::zero);
    w.flip(place({1, 2}), Spin::zero);
    w.flip(place({1, 1}), Spin::plus);

    int width = 1, height = 1;
    while (width < L || height < L) {
        if (height < L && (width >= height || width == L)) {
            grow_chopped_frame(w, height, width, L, [&](int u, int v) { return place({v, u}); });
            ++height;
        } else {
            grow_chopped_frame(w, width, height, L, [&](int u, int v) { return place({u, v}); });
            ++width;
        }
    }
    return w;
}

Path reference_path_zero_to_plus(const Parameters& p, Site seed) {
    const int L = p.L;
    if (!in_box(seed, L)) throw std::invalid_argument("reference_path_zero_to_plus: seed outside box");
    const int n_tilde = static_cast<int>(std::floor(2 * p.J / (p.lambda + p.h))) + 1;
    require(n_tilde + 1 <= L, "zero-to-plus path needs n_tilde + 1 <= L");

    Path w(homogeneous(Spin::zero, L), p);
    w.flip(seed, Spin::plus);
    int x0 = seed.x, x1 = seed.x, y0 = seed.y, y1 = seed.y;
    for (;;) {
        const int width = x1 - x0 + 1, height = y1 - y0 + 1;
        if (width == L && height == L) break;
        if (height < L && (width >= height || width == L)) {
            const int y = y1 < L ? ++y1 : --y0;
            for (int x = x0; x <= x1; ++x) w.flip({x, y}, Spin::plus);
        } else {
            const int x = x1 < L ? ++x1 : --x0;
            for (int y = y0; y <= y1; ++y) w.flip({x, y}, Spin::plus);
        }
    }
    return w;
}

bool is_local_minimum(const SpinConfiguration& eta, const Parameters& p) {
    for (int i = 0; i < eta.size(); ++i) {
        const Site s = eta.site(i);
        for (Spin to : kSpins) {
            if (to == eta[i]) continue;
            if (!(delta_h(eta, s, to, p) > 0)) return false;
        }
    }
    return true;
}

}  // namespace bcm
