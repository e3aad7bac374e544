#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("lps_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run_cli(const std::string& args) {
    std::string cmd = std::string(LPS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// rows of one named column of a CSV with '#' comment headers
std::vector<double> csv_column(const fs::path& p, const std::string& col) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::string line;
    std::vector<std::string> header;
    std::vector<double> out;
    std::size_t ci = SIZE_MAX;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> cells;
        while (std::getline(ss, tok, ',')) cells.push_back(tok);
        if (ci == SIZE_MAX) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (cells[i] == col) ci = i;
            }
            REQUIRE(ci != SIZE_MAX);
            continue;
        }
        if (ci < cells.size()) {
            try {
                out.push_back(std::stod(cells[ci]));
            } catch (const std::exception&) {
                out.push_back(std::nan(""));
            }
        }
    }
    return out;
}

} // namespace

TEST_CASE("fluid run from an equilibrium start keeps x constant") {
    TempDir d;
    write_file(d.path / "eq.cfg",
               "K = 2\n"
               "w = 3.0\n"
               "service.family = exp\n"
               "service.rate = 1.0\n"
               "u_max = 20\n");
    int rc = run_cli("fluid --config " + (d.path / "eq.cfg").string() + " --out " +
                     (d.path / "out").string());
    CHECK(rc == 0);
    auto x = csv_column(d.path / "out" / "solution.csv", "x");
    REQUIRE(x.size() > 1000);
    for (double v : x) CHECK(std::abs(v - x[0]) < 1e-6 * (1.0 + x[0]));
    CHECK(fs::exists(d.path / "out" / "manifest.txt"));
}

TEST_CASE("simulate reports the M/M/1 workload mean in the summary") {
    TempDir d;
    write_file(d.path / "mm1.cfg",
               "K = 1\n"
               "horizon = 100000\n"
               "seed = 1\n"
               "arrival.family = exp\n"
               "arrival.rate = 0.5\n"
               "service.family = exp\n"
               "service.rate = 1.0\n");
    int rc = run_cli("simulate --config " + (d.path / "mm1.cfg").string() + " --out " +
                     (d.path / "out").string());
    CHECK(rc == 0);
    // PK: E[V] = lambda E[S^2] / (2 (1 - rho)) = 0.5 * 2 / 1 = 1
    std::string summary = read_file(d.path / "out" / "summary.csv");
    auto pos = summary.find("time_average_W,");
    REQUIRE(pos != std::string::npos);
    double mean = std::stod(summary.substr(pos + 15));
    CHECK(mean == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("missing config file exits 2 naming the path") {
    TempDir d;
    int rc = run_cli("fluid --config " + (d.path / "nope.cfg").string());
    CHECK(rc == 2);
    // rerun without silencing stderr to capture the message
    std::string cmd = std::string(LPS_CLI_PATH) + " fluid --config " +
                      (d.path / "nope.cfg").string() + " 2> " + (d.path / "err.txt").string();
    (void)std::system(cmd.c_str());
    std::string err = read_file(d.path / "err.txt");
    CHECK(err.find("nope.cfg") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected") {
    TempDir d;
    write_file(d.path / "bad.cfg",
               "K = 2\n"
               "w = 1.0\n"
               "service.family = exp\n"
               "service.rate = 1.0\n"
               "servce.mean = 2.0\n");  // misspelled on purpose
    int rc = run_cli("fluid --config " + (d.path / "bad.cfg").string() + " --out " +
                     (d.path / "out").string());
    CHECK(rc == 2);
}

TEST_CASE("solver tolerance violations exit 3") {
    TempDir d;
    write_file(d.path / "tight.cfg",
               "K = 2\n"
               "service.family = uniform\n"
               "service.a = 0\n"
               "service.b = 2\n"
               "init.kind = atoms\n"
               "init.service.locations = 0.7, 1.1\n"
               "init.service.weights = 1.0, 1.0\n"
               "u_max = 10\n"
               "residual_tol = 1e-18\n");
    int rc = run_cli("fluid --config " + (d.path / "tight.cfg").string() + " --out " +
                     (d.path / "out").string());
    CHECK(rc == 3);
}

TEST_CASE("renewal export has the declared schema and headers") {
    TempDir d;
    write_file(d.path / "r.cfg",
               "service.family = exp\n"
               "service.rate = 1.0\n"
               "u_max = 10\n");
    int rc = run_cli("renewal --config " + (d.path / "r.cfg").string() + " --out " +
                     (d.path / "out").string());
    CHECK(rc == 0);
    std::string body = read_file(d.path / "out" / "renewal.csv");
    CHECK(body.rfind("# lps ", 0) == 0);
    CHECK(body.find("# seed=") != std::string::npos);
    CHECK(body.find("u,value") != std::string::npos);
    auto u = csv_column(d.path / "out" / "renewal.csv", "value");
    // U(x) = 1 + x for the exponential law
    CHECK(u.front() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(u.back() == doctest::Approx(11.0).epsilon(1e-3));
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    TempDir d;
    write_file(d.path / "sim.cfg",
               "K = 3\n"
               "horizon = 2000\n"
               "seed = 17\n"
               "arrival.family = exp\n"
               "arrival.rate = 0.9\n"
               "service.family = hyperexp\n"
               "service.probs = 0.4, 0.6\n"
               "service.rates = 1.0, 3.0\n"
               "snapshot.times = 500, 1500\n");
    for (const char* out : {"a", "b"}) {
        int rc = run_cli("simulate --config " + (d.path / "sim.cfg").string() + " --out " +
                         (d.path / out).string());
        REQUIRE(rc == 0);
    }
    for (const char* f : {"trajectory.csv", "snapshots.csv", "summary.csv", "manifest.txt"}) {
        CHECK(read_file(d.path / "a" / f) == read_file(d.path / "b" / f));
        CHECK(!read_file(d.path / "a" / f).empty());
    }
}

TEST_CASE("LPS_SEED environment variable overrides the config seed") {
    TempDir d;
    write_file(d.path / "sim.cfg",
               "K = 1\n"
               "horizon = 200\n"
               "seed = 1\n"
               "arrival.family = exp\n"
               "arrival.rate = 0.5\n"
               "service.family = exp\n"
               "service.rate = 1.0\n");
    std::string base = "simulate --config " + (d.path / "sim.cfg").string() + " --out ";
    REQUIRE(run_cli(base + (d.path / "a").string()) == 0);
    std::string cmd = "LPS_SEED=99 " + std::string(LPS_CLI_PATH) + " " + base +
                      (d.path / "b").string() + " >/dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(read_file(d.path / "b" / "manifest.txt").find("seed=99") != std::string::npos);
    CHECK(read_file(d.path / "a" / "trajectory.csv") !=
          read_file(d.path / "b" / "trajectory.csv"));
}

TEST_CASE("parallel replications do not change the output") {
    TempDir d;
    write_file(d.path / "ssc.cfg",
               "htseq.theta = 1.0\n"
               "htseq.K_limit = 1.0\n"
               "htseq.r = 3, 5\n"
               "service.family = exp\n"
               "service.rate = 1.0\n"
               "arrival.family = exp\n"
               "arrival.rate = 1.0\n"
               "w0 = 0.5\n"
               "T = 0.3\n"
               "reps = 4\n"
               "seed = 2\n");
    std::string base = "ssc --config " + (d.path / "ssc.cfg").string() + " --out ";
    REQUIRE(run_cli(base + (d.path / "p1").string() + " --parallel 1") == 0);
    REQUIRE(run_cli(base + (d.path / "p4").string() + " --parallel 4") == 0);
    CHECK(read_file(d.path / "p1" / "report.csv") == read_file(d.path / "p4" / "report.csv"));
}
