#pragma once

// Run configuration, Arrhenius fitting, nucleation statistics and the
// command implementations behind the CLI.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bcm/dynamics.hpp"
#include "bcm/landscape.hpp"
#include "bcm/model.hpp"

namespace bcm {

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

enum class StartKind { minus1, zero, plus1, file };

struct TargetSpec {
    enum class Kind { minus1, zero, plus1, manifold };
    Kind kind = Kind::plus1;
    int n_plus = 0;
};

struct RunConfig {
    Parameters params;
    std::uint64_t seed = 0;
    int replicas = 1;
    std::optional<std::uint64_t> max_steps;  // default: timeout_budget()
    StartKind start = StartKind::minus1;
    std::string start_file;
    std::vector<TargetSpec> targets{TargetSpec{}};
    std::vector<double> beta_grid;
    std::string out_dir = ".";
    std::uint64_t stride = 100;
    std::optional<int> supercritical_threshold;
    double smallness_factor = 0.1;
};

/// `key = value` lines, `#` comments. Throws ParseError naming the line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

SpinConfiguration start_configuration(const RunConfig& c);
std::vector<Target> make_targets(const RunConfig& c);
std::string target_name(const TargetSpec& t);

/// Barrier estimate used for budgets and for the side-by-side comparison:
/// Gamma for lambda > h, 4J^2/(lambda+h) for h > lambda, 2J^2/h otherwise.
double gamma_estimate(const Parameters& p);

/// 50 exp(beta * gamma_estimate), capped at 1e10 steps.
std::uint64_t timeout_budget(const Parameters& p);

// Statistics ---------------------------------------------------------------------

struct ArrheniusFit {
    std::vector<double> betas;
    std::vector<double> log_mean_tau;
    std::vector<double> log_mean_se;
    std::vector<double> mean_log_tau;
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
    double slope_se = 0;           // replica bootstrap
    double slope_mean_log = 0;     // fit of mean log tau, reported alongside
    double intercept_mean_log = 0;
};

struct LineFit {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
};

/// Ordinary least squares; needs at least two distinct x values.
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

/// One record list per beta; timed-out replicas are excluded from the means.
/// Throws std::invalid_argument for fewer than two betas or a beta with no
/// positive hitting time.
ArrheniusFit fit_arrhenius(const std::vector<double>& betas,
                           const std::vector<std::vector<HittingRecord>>& records,
                           int bootstrap_resamples = 200, std::uint64_t seed = 0);

/// Two-sided exact binomial test (sum of outcomes no more likely than k).
double binomial_two_sided_p(int k, int n, double p0);

struct CornerStatistic {
    int radius = 0;     // Chebyshev radius around each corner
    int events = 0;
    int corner_events = 0;
    double fraction = 0;
    double null_fraction = 0;  // share of sites within the radius
    double p_value = 1;        // against area-proportional placement
};

/// Site nearest to a centroid, clamped into the box.
Site nearest_site(double cx, double cy, int L);
bool near_corner(Site s, int L, int radius);
CornerStatistic corner_statistic(const std::vector<HittingRecord>& records, int L, int radius);

/// Corner radius l_c + 1 when lambda > h; for h >= lambda the zero-start
/// droplet side n_tilde is used instead.
int corner_radius(const Parameters& p);
/// n_plus_c + 2 when lambda > h, else n_tilde^2 + 2.
int default_supercritical_threshold(const Parameters& p);

// Commands -----------------------------------------------------------------------

enum ExitCode : int { kOk = 0, kUsage = 1, kCheckFailure = 2, kTimeouts = 3 };

struct CommandContext {
    RunConfig config;
    int workers = 1;
    bool timestamp = true;
    std::ostream* out = nullptr;  // defaults to std::cout
    std::ostream* err = nullptr;  // defaults to std::cerr
};

int cmd_validate(const CommandContext& ctx);
int cmd_energy(const CommandContext& ctx, const std::string& snapshot_path);
int cmd_simulate(const CommandContext& ctx);
int cmd_exit_times(const CommandContext& ctx);
int cmd_nucleation_map(const CommandContext& ctx);

struct VerifyOptions {
    /// Fault injection: added to every single-flip energy change the suite
    /// evaluates.
    double delta_h_offset = 0;
};

struct CheckResult {
    std::string name;
    std::string status;  // pass, fail or skip
    std::string detail;
};

std::vector<CheckResult> landscape_checks(const Parameters& p, const VerifyOptions& opt = {});
int cmd_landscape_verify(const CommandContext& ctx, const VerifyOptions& opt = {});

struct SnapshotRequest {
    std::string which = "sigma_c";  // sigma_c, sigma_c_tilde, sigma_s, sigma_F or a frame kind
    int m = 1;
    int n = 1;
    int side = 2;
    int rotation = 0;
};

SpinConfiguration build_snapshot(const SnapshotRequest& r, const Parameters& p);
int cmd_snapshot(const CommandContext& ctx, const SnapshotRequest& r);

}  // namespace bcm
