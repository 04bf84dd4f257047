#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#ifndef BCM_CLI_PATH
#error "BCM_CLI_PATH must name the bcm executable"
#endif

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "bcm_cli_test";

struct Run {
    int code;
    std::string out;
};

Run bcm(const std::string& args) {
    fs::create_directories(kRoot);
    const fs::path log = kRoot / "stdout.txt";
    const std::string cmd = std::string(BCM_CLI_PATH) + " " + args + " > " + log.string() + " 2> " +
                            (kRoot / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::ostringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

fs::path config(const std::string& name, const std::string& text) {
    fs::create_directories(kRoot);
    const fs::path p = kRoot / (name + ".cfg");
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
    CHECK(bcm("").code == 1);
    CHECK(bcm("frobnicate").code == 1);
    CHECK(bcm("--config /nonexistent/file.cfg validate").code == 1);
    CHECK(bcm("--config " + config("bad", "lambda = x\n").string() + " validate").code == 1);
    CHECK(bcm("--help").code == 0);
}

TEST_CASE("validate") {
    const auto desk = bcm("--config " + config("desk", "J = 1\nlambda = 1.4\nh = 0.8\nL = 12\n").string() +
                          " validate");
    CHECK(desk.code == 2);
    CHECK(desk.out.find("item1 small_fields FAIL") != std::string::npos);
    CHECK(desk.out.find("warning") != std::string::npos);
    CHECK(desk.out.find("l_c,2") != std::string::npos);
    CHECK(desk.out.find("Gamma,5.6") != std::string::npos);

    // small fields but integer ratios 80 and 400
    const auto round = bcm("--config " +
                           config("round", "J = 1\nlambda = 0.015\nh = 0.01\nL = 12\n").string() +
                           " validate");
    CHECK(round.code == 2);
    CHECK(round.out.find("item1 small_fields PASS") != std::string::npos);
    CHECK(round.out.find("item3 2J/(lambda+h) 80 FAIL") != std::string::npos);
    CHECK(round.out.find("l_c,101") != std::string::npos);

    const auto small = bcm("--config " +
                           config("small", "J = 1\nlambda = 0.017\nh = 0.011\nL = 12\n").string() +
                           " validate");
    CHECK(small.code == 0);
    CHECK(small.out.find("condition PASS") != std::string::npos);

    CHECK(bcm("--config " + config("equal", "J = 1\nlambda = 0.5\nh = 0.5\nL = 12\n").string() +
              " validate")
              .code != 0);
}

TEST_CASE("snapshot and energy round trip") {
    const auto cfg = config("snap", "J = 1\nlambda = 1.4\nh = 0.8\nL = 6\n");
    const fs::path out = kRoot / "snap";
    fs::remove_all(out);
    auto r = bcm("--config " + cfg.string() + " --out " + out.string() + " snapshot sigma_s");
    CHECK(r.code == 0);
    REQUIRE(fs::exists(out / "sigma_s.txt"));
    r = bcm("--config " + cfg.string() + " energy " + (out / "sigma_s.txt").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("n_plus 3") != std::string::npos);

    r = bcm("--config " + cfg.string() + " --out " + out.string() + " snapshot sigma_F --m 1 --n 1");
    CHECK(r.code == 0);
    CHECK(fs::exists(out / "sigma_F_1_1.txt"));
    // 4J + 2 lambda - 4h at the desk parameters
    CHECK(r.out.find("H-H(-1) 3.6") != std::string::npos);

    const auto tiny = config("tiny", "J = 1\nlambda = 1.4\nh = 0.8\nL = 3\n");
    CHECK(bcm("--config " + tiny.string() + " --out " + out.string() + " snapshot sigma_s").code == 1);
}

TEST_CASE("landscape-verify") {
    const auto cfg = config("verify", "J = 1\nlambda = 0.8\nh = 0.5\nL = 3\n");
    const fs::path out = kRoot / "verify";
    const auto r = bcm("--config " + cfg.string() + " --out " + out.string() + " landscape-verify");
    CHECK(r.code == 0);
    const auto csv = slurp(out / "landscape_verify.csv");
    CHECK(csv.find("bottleneck_vs_threshold,pass") != std::string::npos);
    CHECK(csv.find(",fail,") == std::string::npos);
}

TEST_CASE("exit-times needs two betas and a start outside the target") {
    const fs::path out = kRoot / "et";
    auto cfg = config("one_beta", "J = 1\nlambda = 1.4\nh = 0.8\nL = 4\nbeta_grid = 1.0\n");
    CHECK(bcm("--config " + cfg.string() + " --out " + out.string() + " exit-times").code == 1);
    cfg = config("inside", "J = 1\nlambda = 1.4\nh = 0.8\nL = 4\nbeta_grid = 1.0, 1.5\nstart = plus1\n");
    CHECK(bcm("--config " + cfg.string() + " --out " + out.string() + " exit-times").code == 1);
    cfg = config("starved",
                 "J = 1\nlambda = 1.4\nh = 0.8\nL = 6\nbeta_grid = 4, 5\nmax_steps = 10\nreplicas = 3\n");
    CHECK(bcm("--config " + cfg.string() + " --out " + out.string() + " exit-times").code == 3);
    CHECK(fs::exists(out / "exit_times_beta_4.csv"));
}

TEST_CASE("outputs are byte-identical without the timestamp") {
    const auto cfg = config("repeat",
                            "J = 1\nlambda = 1.4\nh = 0.8\nL = 5\nbeta = 1\nbeta_grid = 0.5, 1.0\n"
                            "replicas = 20\nseed = 4\nstride = 7\nmax_steps = 1e8\n");
    const fs::path a = kRoot / "rep_a", b = kRoot / "rep_b";
    for (const auto& dir : {a, b}) {
        fs::remove_all(dir);
        const std::string base = "--config " + cfg.string() + " --no-timestamp --out " + dir.string();
        CHECK(bcm(base + " simulate").code == 0);
        CHECK(bcm(base + " --workers 3 exit-times").code == 0);
        CHECK(bcm(base + " nucleation-map").code == 0);
    }
    for (const char* f : {"trajectory.csv", "hitting.csv", "exit_times_summary.csv", "exit_times_beta_0.5.csv",
                          "arrhenius_fit.csv", "nucleation_map.csv", "nucleation_summary.csv"}) {
        CAPTURE(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
        CHECK(slurp(a / f).find("# created=") == std::string::npos);
        CHECK(slurp(a / f).rfind("# rng=mt19937_64 seed=4\n", 0) == 0);
    }

    // histogram mass equals the number of events
    std::istringstream map(slurp(a / "nucleation_map.csv"));
    int total = 0;
    for (std::string line; std::getline(map, line);) {
        if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
        total += std::stoi(line.substr(line.rfind(',') + 1));
    }
    CHECK(total == 20);

    const fs::path c = kRoot / "rep_c";
    fs::remove_all(c);
    CHECK(bcm("--config " + cfg.string() + " --out " + c.string() + " simulate").code == 0);
    CHECK(slurp(c / "trajectory.csv").find("# created=") != std::string::npos);
}
