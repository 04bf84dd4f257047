#pragma once

// Energy landscape: paths and their heights, the frame family of local
// minima, the chopped-corner critical configurations, critical quantities
// and constructive reference paths.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "bcm/model.hpp"

namespace bcm {

class DoesNotFit : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Flip {
    Site site;
    Spin from = Spin::zero;
    Spin to = Spin::zero;
    double energy_after = 0;

    bool operator==(const Flip&) const = default;
};

/// Single-flip path stored sparsely as a start configuration plus flips.
class Path {
public:
    Path() = default;
    Path(SpinConfiguration start, const Parameters& p);

    /// Builds a path from explicit configurations; throws std::invalid_argument
    /// if two consecutive entries do not differ at exactly one site.
    static Path from_configurations(const std::vector<SpinConfiguration>& configs,
                                    const Parameters& p);

    /// Appends the flip of site s to `to`; throws if `to` is the current spin.
    void flip(Site s, Spin to);

    bool empty() const { return !started_; }
    std::size_t length() const { return started_ ? flips_.size() + 1 : 0; }
    double energy(std::size_t i) const;
    SpinConfiguration configuration(std::size_t i) const;
    const SpinConfiguration& front() const { return start_; }
    const SpinConfiguration& back() const { return current_; }
    const std::vector<Flip>& flips() const { return flips_; }
    const Parameters& parameters() const { return params_; }

    /// Index of the first configuration attaining the maximal energy.
    std::size_t argmax() const;

private:
    bool started_ = false;
    Parameters params_;
    SpinConfiguration start_;
    SpinConfiguration current_;
    double start_energy_ = 0;
    std::vector<Flip> flips_;
};

/// Max energy along the path; throws std::invalid_argument on an empty path.
double path_height(const Path& w);

/// Header "L J lambda h", then one line "x y old new energy_after" per flip.
void write_witness_path(std::ostream& os, const Path& w);

// Frames -------------------------------------------------------------------------

enum class FrameKind {
    frame,                   // plus square in the bulk, zero ring on four sides
    boundary_frame,          // one site off an edge; zero column along the edge
    corner_frame,            // one site off two edges; zero lines along both
    chopped_corner_frame,    // square in a corner, zeros on its two inner sides
    chopped_boundary_frame,  // square against an edge, zeros on three sides
};

const char* frame_kind_name(FrameKind k);
std::optional<FrameKind> frame_kind_from_name(std::string_view name);

struct FrameSpec {
    FrameKind kind = FrameKind::chopped_corner_frame;
    int side = 1;
    /// Quarter turns applied to the canonical placement (corner/edge at the
    /// origin side of the box).
    int rotation = 0;
    /// Min corner of the plus square in the canonical placement; defaults to
    /// a centred position along the free directions.
    std::optional<Site> anchor;
};

/// Throws DoesNotFit when the plus square and its zero layer do not fit the
/// geometry the kind requires.
SpinConfiguration build_frame(const FrameSpec& spec, const Parameters& p);

/// Closed-form energy above H(-1) of a frame with plus side ell.
double frame_energy_delta(FrameKind kind, int ell, const Parameters& p);

/// Quarter-turn rotation of a site inside the box {1..L}^2.
Site rotate(Site s, int L, int quarter_turns);
SpinConfiguration rotate(const SpinConfiguration& c, int quarter_turns);

// Critical configurations --------------------------------------------------------

enum class ProtuberanceSide { x_axis, y_axis };

/// Chopped corner frame with an m-wide, n-tall plus rectangle in a corner.
SpinConfiguration build_sigma_F(int m, int n, const Parameters& p, int rotation = 0);
/// Closed form for H(sigma^F_{m,n}) - H(-1), valid when m + 2 <= L and n + 2 <= L.
double sigma_F_energy_delta(int m, int n, const Parameters& p);

SpinConfiguration build_sigma_c(const Parameters& p, int rotation = 0);
SpinConfiguration build_sigma_c_tilde(const Parameters& p, int rotation = 0,
                                      ProtuberanceSide side = ProtuberanceSide::x_axis);
SpinConfiguration build_sigma_s(const Parameters& p, int rotation = 0,
                                ProtuberanceSide side = ProtuberanceSide::x_axis);

struct CriticalQuantities {
    int l_c = 0;
    double Gamma = 0;
    double Gamma_star = 0;
    int l_plus = 0;
    int l_F = 0;
    int l_tilde = 0;
    int n_tilde = 0;
    int n_plus_c = 0;
};

/// Requires lambda > h > 0; throws std::invalid_argument otherwise.
CriticalQuantities critical_quantities(const Parameters& p);

/// CSV of (quantity, value) pairs.
void write_landscape_report(std::ostream& os, const CriticalQuantities& q);

/// Plus-rectangle energy in a zero sea, H(sigma_{m,n}) - H(0).
double rectangle_energy_delta(int m, int n, const Parameters& p);

// Reference paths ----------------------------------------------------------------

/// -1 to +1 through chopped corner frames grown as quasi-squares from the
/// corner. Requires lambda > h and l_c + 2 <= L (DoesNotFit otherwise).
Path reference_path_minus_to_plus(const Parameters& p, int rotation = 0);

/// 0 to +1 through quasi-square plus droplets grown from `seed`. Requires
/// n_tilde + 1 <= L (DoesNotFit otherwise).
Path reference_path_zero_to_plus(const Parameters& p, Site seed = {1, 1});

// Local analysis -----------------------------------------------------------------

/// True iff every single-flip move strictly increases the energy.
bool is_local_minimum(const SpinConfiguration& eta, const Parameters& p);

}  // namespace bcm
