#include "bcm/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "bcm/snapshot.hpp"
#include "bcm/state_space.hpp"

namespace bcm {

namespace fs = std::filesystem;

// Configuration -------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view v, int line, std::string_view key) {
    T out{};
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (v.empty() || ec != std::errc{} || ptr != end)
        throw ParseError(line, "malformed value '" + std::string(v) + "' for " + std::string(key));
    return out;
}

std::vector<std::string_view> split_list(std::string_view v) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = v.find(',');
        out.push_back(trim(v.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
    }
    return out;
}

TargetSpec parse_target(std::string_view v, int line) {
    if (v == "plus1") return {TargetSpec::Kind::plus1, 0};
    if (v == "minus1") return {TargetSpec::Kind::minus1, 0};
    if (v == "zero") return {TargetSpec::Kind::zero, 0};
    if (v.starts_with("manifold(") && v.ends_with(")")) {
        const int n = parse_number<int>(trim(v.substr(9, v.size() - 10)), line, "manifold");
        if (n < 0) throw ParseError(line, "manifold plus count must be non-negative");
        return {TargetSpec::Kind::manifold, n};
    }
    throw ParseError(line, "unknown target '" + std::string(v) + "'");
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    RunConfig c;
    std::map<std::string, int, std::less<>> seen;
    int line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view v = trim(line.substr(eq + 1));
        if (!seen.emplace(key, line_no).second) throw ParseError(line_no, "duplicate key " + key);

        if (key == "J") {
            c.params.J = parse_number<double>(v, line_no, key);
        } else if (key == "lambda") {
            c.params.lambda = parse_number<double>(v, line_no, key);
        } else if (key == "h") {
            c.params.h = parse_number<double>(v, line_no, key);
        } else if (key == "L") {
            c.params.L = parse_number<int>(v, line_no, key);
        } else if (key == "beta") {
            c.params.beta = parse_number<double>(v, line_no, key);
        } else if (key == "boundary_mode") {
            if (v == "zero")
                c.params.boundary = Boundary::zero;
            else if (v == "periodic")
                c.params.boundary = Boundary::periodic;
            else
                throw ParseError(line_no, "boundary_mode must be zero or periodic");
        } else if (key == "seed") {
            c.seed = parse_number<std::uint64_t>(v, line_no, key);
        } else if (key == "replicas") {
            c.replicas = parse_number<int>(v, line_no, key);
        } else if (key == "max_steps") {
            c.max_steps = static_cast<std::uint64_t>(parse_number<double>(v, line_no, key));
        } else if (key == "start") {
            if (v == "minus1") {
                c.start = StartKind::minus1;
            } else if (v == "zero") {
                c.start = StartKind::zero;
            } else if (v == "plus1") {
                c.start = StartKind::plus1;
            } else {
                if (v.empty()) throw ParseError(line_no, "empty start");
                c.start = StartKind::file;
                c.start_file = std::string(v);
            }
        } else if (key == "target") {
            c.targets.clear();
            for (auto t : split_list(v)) c.targets.push_back(parse_target(t, line_no));
        } else if (key == "beta_grid") {
            c.beta_grid.clear();
            for (auto t : split_list(v)) c.beta_grid.push_back(parse_number<double>(t, line_no, key));
        } else if (key == "out_dir") {
            c.out_dir = std::string(v);
        } else if (key == "stride") {
            c.stride = parse_number<std::uint64_t>(v, line_no, key);
        } else if (key == "supercritical_threshold") {
            c.supercritical_threshold = parse_number<int>(v, line_no, key);
        } else if (key == "smallness_factor") {
            c.smallness_factor = parse_number<double>(v, line_no, key);
        } else {
            throw ParseError(line_no, "unknown key " + key);
        }
    }

    auto line_of = [&](const char* key) {
        const auto it = seen.find(key);
        return it == seen.end() ? 0 : it->second;
    };
    if (!(c.params.J > 0)) throw ParseError(line_of("J"), "J must be positive");
    if (c.params.L < 2) throw ParseError(line_of("L"), "L must be at least 2");
    if (!(c.params.beta >= 0)) throw ParseError(line_of("beta"), "beta must be non-negative");
    if (c.replicas < 1) throw ParseError(line_of("replicas"), "replicas must be >= 1");
    if (c.max_steps && *c.max_steps == 0) throw ParseError(line_of("max_steps"), "max_steps must be > 0");
    for (std::size_t i = 1; i < c.beta_grid.size(); ++i)
        if (!(c.beta_grid[i] > c.beta_grid[i - 1]))
            throw ParseError(line_of("beta_grid"), "beta_grid must be strictly increasing");
    for (double b : c.beta_grid)
        if (!(b >= 0)) throw ParseError(line_of("beta_grid"), "beta_grid entries must be >= 0");
    if (c.supercritical_threshold && *c.supercritical_threshold < 1)
        throw ParseError(line_of("supercritical_threshold"), "threshold must be >= 1");
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

SpinConfiguration start_configuration(const RunConfig& c) {
    switch (c.start) {
        case StartKind::minus1: return homogeneous(Spin::minus, c.params.L);
        case StartKind::zero: return homogeneous(Spin::zero, c.params.L);
        case StartKind::plus1: return homogeneous(Spin::plus, c.params.L);
        case StartKind::file: break;
    }
    const Snapshot s = read_snapshot_file(c.start_file);
    if (s.L != c.params.L)
        throw std::runtime_error("start snapshot has L = " + std::to_string(s.L) +
                                 " but the config has L = " + std::to_string(c.params.L));
    return s.config;
}

std::string target_name(const TargetSpec& t) {
    switch (t.kind) {
        case TargetSpec::Kind::minus1: return "minus1";
        case TargetSpec::Kind::zero: return "zero";
        case TargetSpec::Kind::plus1: return "plus1";
        case TargetSpec::Kind::manifold: return "manifold(" + std::to_string(t.n_plus) + ")";
    }
    return "?";
}

std::vector<Target> make_targets(const RunConfig& c) {
    std::vector<Target> out;
    for (const auto& t : c.targets) {
        Target x;
        switch (t.kind) {
            case TargetSpec::Kind::minus1: x = Target::all(Spin::minus); break;
            case TargetSpec::Kind::zero: x = Target::all(Spin::zero); break;
            case TargetSpec::Kind::plus1: x = Target::all(Spin::plus); break;
            case TargetSpec::Kind::manifold: x = Target::manifold(t.n_plus); break;
        }
        x.label = target_name(t);
        out.push_back(std::move(x));
    }
    return out;
}

double gamma_estimate(const Parameters& p) {
    if (p.lambda > p.h && p.h > 0) return critical_quantities(p).Gamma;
    if (p.h > p.lambda && p.lambda + p.h > 0) return 4 * p.J * p.J / (p.lambda + p.h);
    if (p.h > 0) return 2 * p.J * p.J / p.h;
    return 0;
}

std::uint64_t timeout_budget(const Parameters& p) {
    constexpr double cap = 1e10;
    const double steps = 50.0 * std::exp(p.beta * gamma_estimate(p));
    return static_cast<std::uint64_t>(std::clamp(steps, 1.0, cap));
}

// Statistics ---------------------------------------------------------------------

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares needs two or more points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0) throw std::invalid_argument("least_squares needs distinct x values");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

ArrheniusFit fit_arrhenius(const std::vector<double>& betas,
                           const std::vector<std::vector<HittingRecord>>& records,
                           int bootstrap_resamples, std::uint64_t seed) {
    if (betas.size() < 2) throw std::invalid_argument("Arrhenius fit needs at least two betas");
    if (records.size() != betas.size()) throw std::invalid_argument("one record list per beta");

    ArrheniusFit fit;
    fit.betas = betas;
    std::vector<std::vector<double>> taus(betas.size());
    for (std::size_t k = 0; k < betas.size(); ++k) {
        const auto s = summarize(records[k], bootstrap_resamples, seed + k);
        if (s.hits == 0 || !(s.mean_tau > 0))
            throw std::invalid_argument("no positive hitting time at beta = " +
                                        format_double(betas[k]));
        fit.log_mean_tau.push_back(s.log_mean_tau);
        fit.log_mean_se.push_back(s.log_mean_se);
        fit.mean_log_tau.push_back(s.mean_log_tau);
        for (const auto& r : records[k])
            if (r.hit) taus[k].push_back(static_cast<double>(r.tau));
    }
    const auto main = least_squares(betas, fit.log_mean_tau);
    fit.slope = main.slope;
    fit.intercept = main.intercept;
    fit.r_squared = main.r_squared;
    const auto logs = least_squares(betas, fit.mean_log_tau);
    fit.slope_mean_log = logs.slope;
    fit.intercept_mean_log = logs.intercept;

    if (bootstrap_resamples > 1) {
        Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::vector<double> y(betas.size()), slopes;
        for (int b = 0; b < bootstrap_resamples; ++b) {
            for (std::size_t k = 0; k < betas.size(); ++k) {
                double sum = 0;
                for (std::size_t i = 0; i < taus[k].size(); ++i)
                    sum += taus[k][rng.below(taus[k].size())];
                y[k] = std::log(std::max(sum / taus[k].size(), 1e-300));
            }
            slopes.push_back(least_squares(betas, y).slope);
        }
        const double m = std::accumulate(slopes.begin(), slopes.end(), 0.0) / slopes.size();
        double var = 0;
        for (double s : slopes) var += (s - m) * (s - m);
        fit.slope_se = std::sqrt(var / (slopes.size() - 1));
    }
    return fit;
}

double binomial_two_sided_p(int k, int n, double p0) {
    if (n < 0 || k < 0 || k > n) throw std::invalid_argument("binomial test: need 0 <= k <= n");
    if (n == 0) return 1.0;
    auto log_pmf = [&](int i) {
        if (p0 <= 0) return i == 0 ? 0.0 : -INFINITY;
        if (p0 >= 1) return i == n ? 0.0 : -INFINITY;
        return std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
               i * std::log(p0) + (n - i) * std::log1p(-p0);
    };
    const double ref = log_pmf(k);
    double total = 0;
    for (int i = 0; i <= n; ++i) {
        const double lp = log_pmf(i);
        if (lp <= ref + 1e-7) total += std::exp(lp);
    }
    return std::min(1.0, total);
}

Site nearest_site(double cx, double cy, int L) {
    const int x = std::clamp(static_cast<int>(std::floor(cx + 0.5)), 1, L);
    const int y = std::clamp(static_cast<int>(std::floor(cy + 0.5)), 1, L);
    return {x, y};
}

bool near_corner(Site s, int L, int radius) {
    const int dx = std::min(s.x - 1, L - s.x);
    const int dy = std::min(s.y - 1, L - s.y);
    return std::max(dx, dy) <= radius;
}

CornerStatistic corner_statistic(const std::vector<HittingRecord>& records, int L, int radius) {
    CornerStatistic st;
    st.radius = radius;
    int near = 0;
    for (int x = 1; x <= L; ++x)
        for (int y = 1; y <= L; ++y) near += near_corner({x, y}, L, radius);
    st.null_fraction = static_cast<double>(near) / (L * L);
    for (const auto& r : records) {
        if (!r.supercritical.found) continue;
        ++st.events;
        st.corner_events +=
            near_corner(nearest_site(r.supercritical.centroid_x, r.supercritical.centroid_y, L), L,
                        radius);
    }
    if (st.events > 0) st.fraction = static_cast<double>(st.corner_events) / st.events;
    st.p_value = binomial_two_sided_p(st.corner_events, st.events, st.null_fraction);
    return st;
}

int corner_radius(const Parameters& p) {
    if (p.lambda > p.h && p.h > 0) return critical_quantities(p).l_c + 1;
    return static_cast<int>(std::floor(2 * p.J / (p.lambda + p.h))) + 1;
}

int default_supercritical_threshold(const Parameters& p) {
    if (p.lambda > p.h && p.h > 0) return critical_quantities(p).n_plus_c + 2;
    const int n = static_cast<int>(std::floor(2 * p.J / (p.lambda + p.h))) + 1;
    return n * n + 2;
}

// Commands -----------------------------------------------------------------------

namespace {

std::ostream& out_of(const CommandContext& ctx) { return ctx.out ? *ctx.out : std::cout; }
std::ostream& err_of(const CommandContext& ctx) { return ctx.err ? *ctx.err : std::cerr; }

fs::path output_dir(const CommandContext& ctx) {
    fs::path dir = ctx.config.out_dir.empty() ? fs::path(".") : fs::path(ctx.config.out_dir);
    fs::create_directories(dir);
    return dir;
}

std::string parameter_line(const Parameters& p) {
    std::ostringstream os;
    os << "J=" << format_double(p.J) << " lambda=" << format_double(p.lambda)
       << " h=" << format_double(p.h) << " L=" << p.L << " beta=" << format_double(p.beta)
       << " boundary=" << (p.boundary == Boundary::zero ? "zero" : "periodic");
    return os.str();
}

void write_header(std::ostream& os, const CommandContext& ctx, const Parameters& p) {
    os << "# rng=" << Rng::algorithm << " seed=" << ctx.config.seed << '\n';
    os << "# " << parameter_line(p) << '\n';
    os << "# run_scale=artifact-choice (lattice size, beta grid and replica counts are not "
          "prescribed by theory)\n";
    if (ctx.timestamp) {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm utc{};
        gmtime_r(&now, &utc);
        os << "# created=" << std::put_time(&utc, "%FT%TZ") << '\n';
    }
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

bool start_in_targets(const SpinConfiguration& start, const std::vector<Target>& targets,
                      const Parameters& p) {
    const ChainState probe(start, p, 0);
    return std::any_of(targets.begin(), targets.end(),
                       [&](const Target& t) { return t.matches(probe); });
}

RunOptions run_options(const RunConfig& c, const Parameters& p) {
    RunOptions o;
    o.max_steps = c.max_steps ? *c.max_steps : timeout_budget(p);
    return o;
}

}  // namespace

int cmd_validate(const CommandContext& ctx) {
    auto& out = out_of(ctx);
    const Parameters& p = ctx.config.params;
    const auto r = validate_condition(p, ctx.config.smallness_factor);
    auto verdict = [](bool ok) { return ok ? "PASS" : "FAIL"; };

    out << "parameters " << parameter_line(p) << '\n';
    out << "item1 small_fields " << verdict(r.small_fields) << " (0 < lambda, h < "
        << format_double(r.smallness_factor) << " J)\n";
    if (r.size_defined)
        out << "item2 lattice_size " << (r.size_ok ? "PASS" : "FAIL") << " informational: L = "
            << p.L << ", (2J/(lambda-h))^3 = " << format_double(r.required_L) << '\n';
    else
        out << "item2 lattice_size n/a informational: lambda <= h\n";
    static constexpr const char* names[4] = {"2J/(lambda+h)", "2J/(lambda-h)",
                                             "(2J+lambda-h)/(lambda+h)", "(J+lambda+h)/h"};
    for (int i = 0; i < 4; ++i) {
        out << "item3 " << names[i] << ' ';
        if (r.ratio_defined[i])
            out << format_double(r.ratios[i]) << ' ' << verdict(r.ratio_non_integer[i]) << '\n';
        else
            out << "undefined FAIL\n";
    }

    if (p.lambda == p.h) {
        err_of(ctx) << "lambda == h: the homogeneous states are degenerate and no critical "
                       "quantities exist\n";
        return kCheckFailure;
    }
    if (p.lambda > p.h && p.h > 0) {
        if (!r.small_fields)
            out << "warning: fields are not small against J; the quantities below are "
                   "evaluated anyway\n";
        write_landscape_report(out, critical_quantities(p));
    } else {
        out << "h > lambda: heuristic barrier 4J^2/(lambda+h) = "
            << format_double(gamma_estimate(p)) << '\n';
    }
    out << "condition " << verdict(r.passes()) << '\n';
    return r.passes() ? kOk : kCheckFailure;
}

int cmd_energy(const CommandContext& ctx, const std::string& snapshot_path) {
    auto& out = out_of(ctx);
    const Snapshot s = read_snapshot_file(snapshot_path);
    Parameters p = ctx.config.params;
    p.L = s.L;
    p.J = s.J;
    p.lambda = s.lambda;
    p.h = s.h;
    const double e = hamiltonian(s.config, p);
    out << "L " << s.L << '\n'
        << "H " << format_double(e) << '\n'
        << "H-H(-1) " << format_double(e - hamiltonian(homogeneous(Spin::minus, p.L), p)) << '\n'
        << "H-H(0) " << format_double(e - hamiltonian(homogeneous(Spin::zero, p.L), p)) << '\n'
        << "n_plus " << s.config.count(Spin::plus) << '\n'
        << "n_zero " << s.config.count(Spin::zero) << '\n'
        << "n_minus " << s.config.count(Spin::minus) << '\n'
        << "local_minimum " << (is_local_minimum(s.config, p) ? "yes" : "no") << '\n';
    return kOk;
}

int cmd_simulate(const CommandContext& ctx) {
    const RunConfig& c = ctx.config;
    const Parameters& p = c.params;
    const auto start = start_configuration(c);
    const auto targets = make_targets(c);
    RunOptions o = run_options(c, p);
    o.stride = c.stride;
    o.supercritical_threshold = c.supercritical_threshold.value_or(
        p.lambda != p.h ? default_supercritical_threshold(p) : 0);

    const auto rec = run_until_hit(start, targets, p, o, c.seed);
    const fs::path dir = output_dir(ctx);
    {
        auto f = open_output(dir / "trajectory.csv");
        write_header(f, ctx, p);
        write_trajectory_csv(f, rec);
    }
    {
        auto f = open_output(dir / "hitting.csv");
        write_header(f, ctx, p);
        write_hitting_csv(f, {rec});
    }
    auto& out = out_of(ctx);
    out << "tau " << rec.tau << " steps (" << format_double(rec.sweeps()) << " sweeps)\n";
    if (rec.hit) out << "hit " << rec.target_label << '\n';
    if (rec.supercritical.found)
        out << "supercritical step " << rec.supercritical.step << " centroid ("
            << format_double(rec.supercritical.centroid_x) << ", "
            << format_double(rec.supercritical.centroid_y) << ")\n";
    if (rec.timeout) {
        err_of(ctx) << "timed out after " << rec.tau << " steps\n";
        return kTimeouts;
    }
    return kOk;
}

int cmd_exit_times(const CommandContext& ctx) {
    const RunConfig& c = ctx.config;
    auto& out = out_of(ctx);
    auto& err = err_of(ctx);
    if (c.beta_grid.size() < 2) {
        err << "exit-times needs a beta_grid with at least two points\n";
        return kUsage;
    }
    const auto start = start_configuration(c);
    const auto targets = make_targets(c);
    if (start_in_targets(start, targets, c.params)) {
        err << "the start lies in the target set: every hitting time is 0, fit refused\n";
        return kUsage;
    }

    const fs::path dir = output_dir(ctx);
    std::vector<std::vector<HittingRecord>> all;
    bool dominated = false, empty = false;
    auto table = open_output(dir / "exit_times_summary.csv");
    write_header(table, ctx, c.params);
    table << "beta,replicas,hits,timeouts,max_steps,mean_tau,median_tau,log_mean_tau,"
             "log_mean_se,mean_log_tau\n";
    for (std::size_t k = 0; k < c.beta_grid.size(); ++k) {
        Parameters p = c.params;
        p.beta = c.beta_grid[k];
        const RunOptions o = run_options(c, p);
        auto records = sample_exit_times(p, start, targets, c.replicas, o,
                                         c.seed + k * static_cast<std::uint64_t>(c.replicas),
                                         ctx.workers);
        {
            auto f = open_output(dir / ("exit_times_beta_" + format_double(p.beta) + ".csv"));
            write_header(f, ctx, p);
            write_hitting_csv(f, records);
        }
        const auto s = summarize(records, 200, c.seed + k);
        table << format_double(p.beta) << ',' << s.replicas << ',' << s.hits << ',' << s.timeouts
              << ',' << o.max_steps << ',' << format_double(s.mean_tau) << ','
              << format_double(s.median_tau) << ',' << format_double(s.log_mean_tau) << ','
              << format_double(s.log_mean_se) << ',' << format_double(s.mean_log_tau) << '\n';
        table.flush();
        out << "beta " << format_double(p.beta) << ": hits " << s.hits << '/' << s.replicas
            << ", log mean tau " << format_double(s.log_mean_tau) << '\n';
        dominated = dominated || 2 * s.timeouts > s.replicas;
        empty = empty || s.hits == 0;
        all.push_back(std::move(records));
    }
    if (empty) {
        err << "all replicas timed out at some beta; fit aborted, per-beta data kept in "
            << dir.string() << '\n';
        return kTimeouts;
    }

    const auto fit = fit_arrhenius(c.beta_grid, all, 200, c.seed);
    const double theory = gamma_estimate(c.params);
    {
        auto f = open_output(dir / "arrhenius_fit.csv");
        write_header(f, ctx, c.params);
        f << "quantity,value\n"
          << "slope," << format_double(fit.slope) << '\n'
          << "slope_se," << format_double(fit.slope_se) << '\n'
          << "intercept," << format_double(fit.intercept) << '\n'
          << "r_squared," << format_double(fit.r_squared) << '\n'
          << "slope_mean_log," << format_double(fit.slope_mean_log) << '\n'
          << "intercept_mean_log," << format_double(fit.intercept_mean_log) << '\n'
          << (c.params.lambda > c.params.h ? "gamma," : "gamma_heuristic,")
          << format_double(theory) << '\n';
    }
    out << "slope " << format_double(fit.slope) << " +- " << format_double(fit.slope_se)
        << (c.params.lambda > c.params.h ? "  Gamma " : "  4J^2/(lambda+h) ")
        << format_double(theory) << '\n';
    if (dominated) {
        err << "more than half of the replicas timed out at some beta\n";
        return kTimeouts;
    }
    return kOk;
}

int cmd_nucleation_map(const CommandContext& ctx) {
    const RunConfig& c = ctx.config;
    const Parameters& p = c.params;
    const auto start = start_configuration(c);
    const auto targets = make_targets(c);
    RunOptions o = run_options(c, p);
    o.supercritical_threshold = c.supercritical_threshold.value_or(default_supercritical_threshold(p));
    o.stop_at_supercritical = true;

    const auto records = sample_exit_times(p, start, targets, c.replicas, o, c.seed, ctx.workers);
    const int L = p.L;
    std::vector<int> hist(L * L, 0);
    int timeouts = 0;
    for (const auto& r : records) {
        if (!r.supercritical.found) {
            timeouts += r.timeout;
            continue;
        }
        const Site s = nearest_site(r.supercritical.centroid_x, r.supercritical.centroid_y, L);
        ++hist[(s.y - 1) * L + (s.x - 1)];
    }
    const auto st = corner_statistic(records, L, corner_radius(p));

    const fs::path dir = output_dir(ctx);
    {
        auto f = open_output(dir / "nucleation_map.csv");
        write_header(f, ctx, p);
        f << "x,y,count\n";
        for (int y = 1; y <= L; ++y)
            for (int x = 1; x <= L; ++x) f << x << ',' << y << ',' << hist[(y - 1) * L + x - 1] << '\n';
    }
    {
        auto f = open_output(dir / "nucleation_events.csv");
        write_header(f, ctx, p);
        write_hitting_csv(f, records);
    }
    {
        auto f = open_output(dir / "nucleation_summary.csv");
        write_header(f, ctx, p);
        f << "quantity,value\n"
          << "replicas," << c.replicas << '\n'
          << "events," << st.events << '\n'
          << "timeouts," << timeouts << '\n'
          << "threshold," << o.supercritical_threshold << '\n'
          << "corner_radius," << st.radius << '\n'
          << "corner_events," << st.corner_events << '\n'
          << "corner_fraction," << format_double(st.fraction) << '\n'
          << "null_fraction," << format_double(st.null_fraction) << '\n'
          << "binomial_p_value," << format_double(st.p_value) << '\n';
    }
    auto& out = out_of(ctx);
    out << "events " << st.events << '/' << c.replicas << ", timeouts " << timeouts << '\n'
        << "corner fraction " << format_double(st.fraction) << " (null "
        << format_double(st.null_fraction) << ", p = " << format_double(st.p_value) << ")\n";
    if (2 * timeouts > c.replicas) {
        err_of(ctx) << "more than half of the replicas timed out\n";
        return kTimeouts;
    }
    return kOk;
}

// Landscape verification ------------------------------------------------------------

namespace {

bool close(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

// Centre spin with the given neighbour multiset. Realization 1 puts the
// centre on an edge and 2 in a corner, so out-of-box sites supply zeros.
std::pair<SpinConfiguration, Site> neighborhood(int nm, int nz, int np, Spin centre, int realization) {
    const int L = 5;
    SpinConfiguration c(L, Spin::minus);
    Site s{3, 3};
    int outside = 0;
    if (realization == 1 && nz >= 1) {
        s = {3, 1};
        outside = 1;
    } else if (realization == 2 && nz >= 2) {
        s = {1, 1};
        outside = 2;
    }
    c.set(s, centre);
    std::vector<Spin> fill;
    fill.insert(fill.end(), nm, Spin::minus);
    fill.insert(fill.end(), nz - outside, Spin::zero);
    fill.insert(fill.end(), np, Spin::plus);
    std::size_t k = 0;
    for (Site n : neighbors(s, L).in_box) c.set(n, fill[k++]);
    return {c, s};
}

CheckResult check(std::string name, bool ok, std::string detail = {}) {
    return {std::move(name), ok ? "pass" : "fail", std::move(detail)};
}

}  // namespace

std::vector<CheckResult> landscape_checks(const Parameters& p, const VerifyOptions& opt) {
    std::vector<CheckResult> out;
    auto dh = [&](const SpinConfiguration& eta, Site s, Spin to, const Parameters& q) {
        return delta_h(eta, s, to, q) + opt.delta_h_offset;
    };

    {  // flip table on bulk, edge and corner realisations
        Parameters q = p;
        q.L = 5;
        q.boundary = Boundary::zero;
        int bad = 0, total = 0;
        for (const auto& row : flip_cost_table(q)) {
            for (int real = 0; real < 3; ++real) {
                if (real > row.n_zero) continue;
                for (Spin from : kSpins)
                    for (Spin to : kSpins) {
                        if (from == to) continue;
                        auto [c, s] = neighborhood(row.n_minus, row.n_zero, row.n_plus, from, real);
                        ++total;
                        bad += !close(dh(c, s, to, q), row.cost(from, to), 1e-12);
                    }
            }
        }
        out.push_back(check("flip_table", bad == 0,
                            std::to_string(total - bad) + "/" + std::to_string(total) + " flips"));
    }

    {  // local against global energy differences
        Rng rng(1);
        int bad = 0;
        constexpr int samples = 10000;
        SpinConfiguration eta(p.L);
        for (int k = 0; k < samples; ++k) {
            for (int i = 0; i < eta.size(); ++i)
                eta.set(eta.site(i), static_cast<Spin>(static_cast<int>(rng.below(3)) - 1));
            const Site s = eta.site(static_cast<int>(rng.below(eta.size())));
            const Spin to = static_cast<Spin>((value(eta.at(s)) + 2 + static_cast<int>(rng.below(2))) % 3 - 1);
            SpinConfiguration next = eta;
            next.set(s, to);
            bad += !close(dh(eta, s, to, p), hamiltonian(next, p) - hamiltonian(eta, p), 1e-12);
        }
        out.push_back(check("delta_h_consistency", bad == 0,
                            std::to_string(bad) + " mismatches in " + std::to_string(samples)));
    }

    {
        const double v = detailed_balance_check(p, 10000, 2);
        out.push_back(check("detailed_balance", v < 1e-12, "max violation " + format_double(v)));
    }

    {  // homogeneous energies, then their ordering on a box large enough for
       // the bulk terms to outweigh the 4JL boundary cost
        auto identities = [&](const Parameters& q) {
            const double L = q.L;
            return close(hamiltonian(homogeneous(Spin::plus, q.L), q),
                         4 * q.J * L - L * L * (q.lambda + q.h), 1e-12) &&
                   close(hamiltonian(homogeneous(Spin::minus, q.L), q),
                         4 * q.J * L - L * L * (q.lambda - q.h), 1e-12) &&
                   hamiltonian(homogeneous(Spin::zero, q.L), q) == 0;
        };
        if (p.boundary != Boundary::zero) {
            out.push_back({"homogeneous_energies", "skip", "zero boundary only"});
        } else if (p.lambda == p.h || !(p.lambda + p.h > 0)) {
            out.push_back(check("homogeneous_energies", identities(p), "ordering degenerate"));
        } else {
            Parameters q = p;
            const double gap = std::min(std::abs(p.lambda - p.h), p.lambda + p.h);
            q.L = std::max(p.L, static_cast<int>(std::floor(4 * p.J / gap)) + 1);
            bool ok = identities(p) && identities(q);
            std::string detail = "ordering at L = " + std::to_string(q.L);
            try {
                const auto r = energy_hierarchy(q);
                ok = ok && r.order == (p.lambda > p.h ? Hierarchy::plus_minus_zero
                                                      : Hierarchy::plus_zero_minus);
            } catch (const std::exception& e) {
                ok = false;
                detail += std::string(": ") + e.what();
            }
            out.push_back(check("homogeneous_energies", ok, detail));
        }
    }

    {  // local-minimum classification of the homogeneous states
        Parameters q = p;
        q.boundary = Boundary::zero;
        const bool zero_min = is_local_minimum(homogeneous(Spin::zero, q.L), q);
        const bool minus_min = is_local_minimum(homogeneous(Spin::minus, q.L), q);
        if (p.h > p.lambda)
            out.push_back(check("local_minima_homogeneous", zero_min && !minus_min,
                                "h > lambda: 0 is a local minimum, -1 is not"));
        else if (p.lambda > p.h)
            out.push_back(check("local_minima_homogeneous", zero_min && minus_min,
                                "lambda > h: 0 and -1 are local minima"));
        else
            out.push_back({"local_minima_homogeneous", "skip", "lambda == h"});
    }

    const bool metastable_minus = p.lambda > p.h && p.h > 0;
    if (metastable_minus) {
        int bad = 0, positive_bad = 0, minima_bad = 0;
        constexpr FrameKind kinds[] = {FrameKind::frame, FrameKind::boundary_frame,
                                       FrameKind::corner_frame, FrameKind::chopped_corner_frame,
                                       FrameKind::chopped_boundary_frame};
        for (int ell = 1; ell <= 20; ++ell) {
            Parameters q = p;
            q.L = ell + 6;
            q.boundary = Boundary::zero;
            const double base = hamiltonian(homogeneous(Spin::minus, q.L), q);
            for (FrameKind k : kinds) {
                const auto eta = build_frame({k, ell, 0, std::nullopt}, q);
                bad += !close(frame_energy_delta(k, ell, q), hamiltonian(eta, q) - base, 1e-12);
                if (ell >= 2 && ell <= 6) minima_bad += !is_local_minimum(eta, q);
            }
            const double d = frame_energy_delta(FrameKind::chopped_corner_frame, ell, q);
            const double dl = p.lambda - p.h, J = p.J;
            const double diffs[4][2] = {
                {frame_energy_delta(FrameKind::frame, ell, q) - d, 4 * J * ell + 8 * J + 2 * ell * dl},
                {frame_energy_delta(FrameKind::boundary_frame, ell, q) - d,
                 2 * J * ell + 4 * J + (2 * ell + 2) * dl},
                {frame_energy_delta(FrameKind::corner_frame, ell, q) - d, (2 * ell + 3) * dl},
                {frame_energy_delta(FrameKind::chopped_boundary_frame, ell, q) - d,
                 2 * J * ell + 2 * J + ell * dl}};
            for (const auto& df : diffs) positive_bad += !(df[0] > 0) || !close(df[0], df[1], 1e-12);
        }
        out.push_back(check("frame_energies", bad == 0, std::to_string(bad) + " mismatches"));
        out.push_back(check("frame_differences", positive_bad == 0,
                            std::to_string(positive_bad) + " failures"));
        // Boundary zeros next to the square turn plus downhill once
        // lambda + h > 2J, so the classification needs small fields.
        if (p.h > p.lambda / 2 && validate_condition(p).small_fields)
            out.push_back(check("frames_local_minima", minima_bad == 0,
                                std::to_string(minima_bad) + " frames are not local minima"));
        else
            out.push_back({"frames_local_minima", "skip", "needs h > lambda/2 and lambda, h < J/10"});
    } else {
        out.push_back({"frame_energies", "skip", "needs lambda > h > 0"});
    }

    if (metastable_minus && p.h > p.lambda / 2) {
        const auto qc = critical_quantities(p);
        Parameters q = p;
        q.L = std::max(p.L, qc.l_c + 4);
        q.boundary = Boundary::zero;
        const auto w = reference_path_minus_to_plus(q);
        const double top = path_height(w);
        const double height = top - w.energy(0);
        std::vector<SpinConfiguration> saddles;
        for (int rot = 0; rot < 4; ++rot)
            for (auto side : {ProtuberanceSide::x_axis, ProtuberanceSide::y_axis})
                saddles.push_back(build_sigma_s(q, rot, side));
        // Any configuration attaining the maximum counts; ties occur at
        // special parameter values.
        bool saddle = false;
        SpinConfiguration walk = w.front();
        for (std::size_t i = 0; i < w.length() && !saddle; ++i) {
            if (i > 0) walk.set(w.flips()[i - 1].site, w.flips()[i - 1].to);
            if (close(w.energy(i), top, 1e-12))
                saddle = std::find(saddles.begin(), saddles.end(), walk) != saddles.end();
        }
        const double gap = hamiltonian(build_sigma_s(q), q) - hamiltonian(build_sigma_c_tilde(q), q);
        out.push_back(check("reference_path_height", close(height, qc.Gamma, 1e-9),
                            "height " + format_double(height) + ", Gamma " + format_double(qc.Gamma)));
        out.push_back(check("reference_path_saddle", saddle, "argmax equals sigma_s up to symmetry"));
        out.push_back(check("saddle_gap", close(gap, p.lambda - p.h, 1e-12),
                            "H(sigma_s)-H(sigma_c~) = " + format_double(gap)));
    } else {
        out.push_back({"reference_path_height", "skip", "needs lambda > h > lambda/2"});
    }

    if (p.L <= StateSpace::kMaxSide) {
        const StateSpace space(p);
        const auto minus = homogeneous(Spin::minus, p.L), plus = homogeneous(Spin::plus, p.L);
        const double a = communication_height_exact(space, minus, plus).height;
        const double b = communication_height_threshold(space, minus, plus);
        out.push_back(check("bottleneck_vs_threshold", a == b,
                            "Phi(-1,+1) " + format_double(a) + " vs " + format_double(b)));
    } else {
        out.push_back({"bottleneck_vs_threshold", "skip", "exhaustive search needs L <= 3"});
    }
    return out;
}

int cmd_landscape_verify(const CommandContext& ctx, const VerifyOptions& opt) {
    const Parameters& p = ctx.config.params;
    const auto results = landscape_checks(p, opt);
    const fs::path dir = output_dir(ctx);
    {
        auto f = open_output(dir / "landscape_verify.csv");
        write_header(f, ctx, p);
        f << "check,status,detail\n";
        for (const auto& r : results) f << r.name << ',' << r.status << ",\"" << r.detail << "\"\n";
    }
    if (p.lambda > p.h && p.h > 0) {
        auto f = open_output(dir / "landscape_report.csv");
        write_header(f, ctx, p);
        write_landscape_report(f, critical_quantities(p));
    }
    auto& out = out_of(ctx);
    std::vector<std::string> failed;
    for (const auto& r : results) {
        out << r.name << ' ' << r.status << ' ' << r.detail << '\n';
        if (r.status == "fail") failed.push_back(r.name);
    }
    if (!failed.empty()) {
        auto& err = err_of(ctx);
        err << "failed checks:";
        for (const auto& n : failed) err << ' ' << n;
        err << '\n';
        return kCheckFailure;
    }
    return kOk;
}

// Snapshots -----------------------------------------------------------------------

SpinConfiguration build_snapshot(const SnapshotRequest& r, const Parameters& p) {
    if (r.which == "minus1") return homogeneous(Spin::minus, p.L);
    if (r.which == "zero") return homogeneous(Spin::zero, p.L);
    if (r.which == "plus1") return homogeneous(Spin::plus, p.L);
    if (r.which == "sigma_c") return build_sigma_c(p, r.rotation);
    if (r.which == "sigma_c_tilde") return build_sigma_c_tilde(p, r.rotation);
    if (r.which == "sigma_s") return build_sigma_s(p, r.rotation);
    if (r.which == "sigma_F") return build_sigma_F(r.m, r.n, p, r.rotation);
    if (const auto kind = frame_kind_from_name(r.which))
        return build_frame({*kind, r.side, r.rotation, std::nullopt}, p);
    throw std::invalid_argument("unknown snapshot '" + r.which + "'");
}

int cmd_snapshot(const CommandContext& ctx, const SnapshotRequest& r) {
    const Parameters& p = ctx.config.params;
    SpinConfiguration eta;
    try {
        eta = build_snapshot(r, p);
    } catch (const DoesNotFit& e) {
        err_of(ctx) << "does not fit: " << e.what() << '\n';
        return kUsage;
    }
    std::string name = r.which;
    if (r.which == "sigma_F") name += "_" + std::to_string(r.m) + "_" + std::to_string(r.n);
    const fs::path path = output_dir(ctx) / (name + ".txt");
    write_snapshot_file(path.string(), eta, p);

    const Snapshot back = read_snapshot_file(path.string());
    const bool same = back.config == eta && back.L == p.L && back.J == p.J &&
                      back.lambda == p.lambda && back.h == p.h;
    auto& out = out_of(ctx);
    out << path.string() << '\n'
        << "n_plus " << eta.count(Spin::plus) << " n_zero " << eta.count(Spin::zero)
        << " n_minus " << eta.count(Spin::minus) << '\n'
        << "H-H(-1) "
        << format_double(hamiltonian(eta, p) - hamiltonian(homogeneous(Spin::minus, p.L), p))
        << '\n';
    if (!same) {
        err_of(ctx) << "snapshot did not round-trip\n";
        return kCheckFailure;
    }
    return kOk;
}

}  // namespace bcm
