// Batch front-end for the LPS-K toolkit: configure, run, and export every
// experiment as plot-ready CSV. Flat dotted-key config files, one master
// seed, named substreams, byte-stable output.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lps/distribution.hpp"
#include "lps/fluid.hpp"
#include "lps/heavy_traffic.hpp"
#include "lps/numeric.hpp"
#include "lps/renewal.hpp"
#include "lps/rng.hpp"
#include "lps/simulator.hpp"

namespace fs = std::filesystem;
using namespace lps;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kExitConfig = 2;
constexpr int kExitTolerance = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ToleranceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Flat key=value config with '#' comments; every key must be consumed by the
// subcommand or the run is rejected (no silent defaults for misspellings).
class Config {
public:
    static Config load(const std::string& path, const std::vector<std::string>& overrides) {
        Config cfg;
        if (!path.empty()) {
            std::ifstream in(path);
            if (!in) throw ConfigError("cannot open config file: " + path);
            std::string line;
            int lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                auto hash = line.find('#');
                if (hash != std::string::npos) line.erase(hash);
                auto first = line.find_first_not_of(" \t\r");
                if (first == std::string::npos) continue;
                auto eq = line.find('=');
                if (eq == std::string::npos) {
                    throw ConfigError(path + ":" + std::to_string(lineno) +
                                      ": expected key=value");
                }
                cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
            }
        }
        for (const std::string& ov : overrides) {
            auto eq = ov.find('=');
            if (eq == std::string::npos) throw ConfigError("override must be key=value: " + ov);
            cfg.set(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing required config key: " + key);
        consumed_.insert(key);
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& def) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? def : it->second;
    }

    double get_double(const std::string& key) const { return parse_double(key, get(key)); }
    double get_double_or(const std::string& key, double def) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? def : parse_double(key, it->second);
    }
    long long get_int_or(const std::string& key, long long def) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        try {
            std::size_t pos = 0;
            long long v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": not an integer: " + it->second);
        }
    }
    std::vector<double> get_list_or(const std::string& key,
                                    const std::vector<double>& def) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = trim(tok);
            if (!tok.empty()) out.push_back(parse_double(key, tok));
        }
        return out;
    }

    void reject_unknown() const {
        for (const auto& [k, v] : values_) {
            if (!consumed_.count(k)) throw ConfigError("unknown config key: " + k);
        }
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(std::string s) {
        auto a = s.find_first_not_of(" \t\r");
        auto b = s.find_last_not_of(" \t\r");
        return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
    }
    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return d;
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": not a number: " + v);
        }
    }
    void set(const std::string& key, const std::string& value) {
        if (key.empty()) throw ConfigError("empty config key");
        values_[key] = value;
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

DistributionSpec parse_distribution(const Config& cfg, const std::string& prefix) {
    std::string family = cfg.get(prefix + ".family");
    double p = cfg.get_double_or(prefix + ".p", 0.5);
    std::optional<DistributionSpec> spec;
    if (family == "exp") {
        spec = DistributionSpec::exponential(cfg.get_double(prefix + ".rate"), p);
    } else if (family == "hyperexp") {
        spec = DistributionSpec::hyper_exponential(cfg.get_list_or(prefix + ".probs", {}),
                                                   cfg.get_list_or(prefix + ".rates", {}), p);
    } else if (family == "det") {
        spec = DistributionSpec::deterministic(cfg.get_double(prefix + ".value"), p);
    } else if (family == "uniform") {
        spec = DistributionSpec::uniform(cfg.get_double(prefix + ".a"),
                                         cfg.get_double(prefix + ".b"), p);
    } else if (family == "lognormal") {
        std::optional<double> cap;
        if (cfg.has(prefix + ".cap")) cap = cfg.get_double(prefix + ".cap");
        spec = DistributionSpec::lognormal_truncated(cfg.get_double(prefix + ".mu"),
                                                     cfg.get_double(prefix + ".sigma"), cap, p);
    } else {
        throw ConfigError(prefix + ".family: unknown family '" + family + "'");
    }
    if (cfg.has(prefix + ".mean")) {
        spec = spec->with_mean(cfg.get_double(prefix + ".mean"));
    }
    return *spec;
}

struct RunContext {
    std::string command;
    fs::path out_dir;
    std::uint64_t seed = 0;
    int parallel = 1;
    std::map<std::string, std::string> resolved;  // echoed in headers and manifest

    std::ofstream open_csv(const std::string& name) const {
        std::ofstream out(out_dir / name, std::ios::binary);
        if (!out) throw ConfigError("cannot write output file: " + (out_dir / name).string());
        out << "# lps " << kVersion << "\n";
        out << "# command=" << command << "\n";
        out << "# seed=" << seed << "\n";
        for (const auto& [k, v] : resolved) {
            if (k != "seed") out << "# " << k << "=" << v << "\n";
        }
        return out;
    }

    void write_manifest() const {
        std::string body;
        body += "command=" + command + "\n";
        body += "seed=" + std::to_string(seed) + "\n";
        for (const auto& [k, v] : resolved) {
            if (k != "seed") body += k + "=" + v + "\n";
        }
        std::uint64_t h = num::fnv1a64(body.data(), body.size());
        std::ofstream out(out_dir / "manifest.txt", std::ios::binary);
        out << "lps " << kVersion << "\n" << body;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        out << "content_hash=" << buf << "\n";
    }
};

void run_parallel(std::size_t n_tasks, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n_tasks <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    auto n = static_cast<std::size_t>(workers);
    for (std::size_t w = 0; w < std::min(n, n_tasks); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

const char* kind_name(EventKind k) {
    switch (k) {
        case EventKind::Init: return "init";
        case EventKind::Arrival: return "arrival";
        case EventKind::Departure: return "departure";
        case EventKind::Admission: return "admission";
    }
    return "?";
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Config& cfg, RunContext& ctx) {
    LpsConfig sim(parse_distribution(cfg, "arrival"), parse_distribution(cfg, "service"));
    sim.K = static_cast<int>(cfg.get_int_or("K", 1));
    sim.horizon = cfg.get_double("horizon");
    sim.seed = ctx.seed;
    sim.init_service = cfg.get_list_or("init.service", {});
    sim.init_buffer = cfg.get_list_or("init.buffer", {});
    std::vector<double> snap_times = cfg.get_list_or("snapshot.times", {});
    cfg.reject_unknown();

    SystemTrajectory traj = run(sim);

    auto tf = ctx.open_csv("trajectory.csv");
    tf << "t,kind,Q,Z,X,W\n";
    for (const Event& e : traj.events) {
        tf << fmt(e.time) << ',' << kind_name(e.kind) << ',' << fmt(e.Q) << ',' << fmt(e.Z)
           << ',' << fmt(e.X) << ',' << fmt(e.W) << "\n";
    }

    auto sf = ctx.open_csv("snapshots.csv");
    sf << "t,atom_location,weight,which\n";
    for (double t : snap_times) {
        auto [buf, ser] = traj.snapshot(std::min(t, sim.horizon));
        for (const Atom& a : buf.atoms()) {
            sf << fmt(t) << ',' << fmt(a.location) << ',' << fmt(a.weight) << ",buffer\n";
        }
        for (const Atom& a : ser.atoms()) {
            sf << fmt(t) << ',' << fmt(a.location) << ',' << fmt(a.weight) << ",server\n";
        }
    }

    auto mf = ctx.open_csv("summary.csv");
    mf << "stat_name,value\n";
    mf << "time_average_W," << fmt(traj.time_average_W(sim.horizon)) << "\n";
    mf << "final_W," << fmt(traj.W(sim.horizon)) << "\n";
    mf << "final_X," << fmt(traj.X(sim.horizon)) << "\n";
    mf << "n_events," << traj.events.size() << "\n";
    mf << "n_jobs," << traj.jobs.size() << "\n";
    return 0;
}

// ------------------------------------------------------------------- fluid

int cmd_fluid(const Config& cfg, RunContext& ctx) {
    DistributionSpec spec = parse_distribution(cfg, "service");
    double K = cfg.get_double("K");
    double beta = spec.beta();
    double u_max = cfg.get_double_or("u_max", 60.0 * beta);
    double step = cfg.get_double_or("step", beta / 200.0);
    double residual_tol = cfg.get_double_or("residual_tol", 1e-3);
    std::string kind = cfg.get_or("init.kind", "lift");

    ValidInitialCondition init = [&] {
        if (kind == "lift") {
            return lift(cfg.get_double("w"), K, spec);
        }
        if (kind == "atoms") {
            Measure mu;
            std::vector<double> locs = cfg.get_list_or("init.service.locations", {});
            std::vector<double> wts = cfg.get_list_or("init.service.weights", {});
            if (locs.size() != wts.size()) {
                throw ConfigError("init.service.locations and .weights must have equal length");
            }
            for (std::size_t i = 0; i < locs.size(); ++i) mu.add_atom(locs[i], wts[i]);
            mu.finalize();
            Measure xi = spec.nu().scaled(cfg.get_double_or("init.buffer.mass", 0.0));
            return ValidInitialCondition::make(std::move(xi), std::move(mu), K, spec);
        }
        throw ConfigError("init.kind must be 'lift' or 'atoms'");
    }();
    std::vector<double> rec_times = cfg.get_list_or("reconstruct.times", {});
    cfg.reject_unknown();

    FluidSolution sol = solve_key_equation(h_from_initial(init, u_max, step), spec, K, init.w);

    auto out = ctx.open_csv("solution.csv");
    out << "u,x,q,z,Tbar,h,residual\n";
    for (std::size_t i = 0; i < sol.x.size(); ++i) {
        double u = static_cast<double>(i) * sol.step;
        out << fmt(u) << ',' << fmt(sol.x.values[i]) << ',' << fmt(sol.q.values[i]) << ','
            << fmt(sol.z.values[i]) << ',' << fmt(sol.Tbar.values[i]) << ','
            << fmt(sol.h.values[i]) << ',' << fmt(sol.residual.values[i]) << "\n";
    }

    if (!rec_times.empty()) {
        auto rf = ctx.open_csv("reconstruction.csv");
        rf << "t,y,buffer_tail,server_tail\n";
        for (double t : rec_times) {
            auto [buf, ser] = reconstruct_measures(sol, init, spec, t);
            double ymax = 0.0;
            for (double k : buf.knots()) ymax = std::max(ymax, k);
            for (double k : ser.knots()) ymax = std::max(ymax, k);
            ymax = std::max(ymax, beta);
            double dy = ymax / 100.0;
            for (int i = 0; i <= 100; ++i) {
                double y = dy * i;
                rf << fmt(t) << ',' << fmt(y) << ',' << fmt(buf.tail(y)) << ','
                   << fmt(ser.tail(y)) << "\n";
            }
        }
    }

    if (sol.max_residual > residual_tol) {
        throw ToleranceError("fluid solver residual " + fmt(sol.max_residual) +
                             " exceeds residual_tol " + fmt(residual_tol));
    }
    return 0;
}

// ----------------------------------------------------------------- renewal

int cmd_renewal(const Config& cfg, RunContext& ctx) {
    DistributionSpec spec = parse_distribution(cfg, "service");
    double beta = spec.beta();
    double u_max = cfg.get_double_or("u_max", 80.0 * beta);
    double step = cfg.get_double_or("step", beta / 200.0);
    cfg.reject_unknown();

    RenewalResult res = renewal_function([spec](double x) { return spec.cdf(x); }, u_max, step);

    auto out = ctx.open_csv("renewal.csv");
    out << "u,value\n";
    for (std::size_t i = 0; i < res.U.size(); ++i) {
        out << fmt(static_cast<double>(i) * res.U.step) << ',' << fmt(res.U.values[i]) << "\n";
    }
    if (res.step_too_coarse) {
        throw ToleranceError("renewal grid too coarse: halving the step moves U(u_max) by " +
                             fmt(res.refinement_delta) + " relative");
    }
    return 0;
}

// --------------------------------------------------------------------- rbm

int cmd_rbm(const Config& cfg, RunContext& ctx) {
    double theta = cfg.get_double("theta");
    double sigma2 = cfg.get_double("sigma2");
    double w0 = cfg.get_double_or("w0", 0.0);
    double T = cfg.get_double("T");
    std::optional<DistributionSpec> spec;
    double K = 0.0;
    if (cfg.has("service.family")) {
        spec = parse_distribution(cfg, "service");
        K = cfg.get_double("K");
    }
    double dt = cfg.get_double_or("dt", spec ? rbm_dt_default(theta, spec->beta_e()) : 1e-3);
    cfg.reject_unknown();

    RbmPath path = simulate_rbm(theta, sigma2, w0, T, dt, ctx.seed, K,
                                spec ? &*spec : nullptr);
    auto out = ctx.open_csv("rbm.csv");
    out << "t,W_star,X_star\n";
    for (std::size_t i = 0; i < path.W_star.size(); ++i) {
        out << fmt(static_cast<double>(i) * path.dt) << ',' << fmt(path.W_star[i]) << ','
            << (path.X_star.empty() ? "nan" : fmt(path.X_star[i])) << "\n";
    }
    return 0;
}

// --------------------------------------------------------- heavy traffic

HeavyTrafficSequence parse_sequence(const Config& cfg) {
    std::vector<double> rs = cfg.get_list_or("htseq.r", {});
    if (rs.empty()) throw ConfigError("missing required config key: htseq.r");
    return HeavyTrafficSequence(cfg.get_double("htseq.theta"), cfg.get_double("htseq.K_limit"),
                                parse_distribution(cfg, "service"),
                                parse_distribution(cfg, "arrival"), rs);
}

int cmd_ssc(const Config& cfg, RunContext& ctx) {
    HeavyTrafficSequence seq = parse_sequence(cfg);
    double w0 = cfg.get_double("w0");
    double T = cfg.get_double("T");
    auto reps = static_cast<std::size_t>(cfg.get_int_or("reps", 20));
    double grid_dt = cfg.get_double_or("grid_dt", T / 20.0);
    double metric_tol = cfg.get_double_or("metric_tol", 1e-3);
    cfg.reject_unknown();

    std::size_t n_sys = seq.systems().size();
    std::vector<std::vector<double>> stats(n_sys, std::vector<double>(reps, 0.0));
    run_parallel(n_sys * reps, ctx.parallel, [&](std::size_t task) {
        std::size_t idx = task / reps, rep = task % reps;
        const auto& sys = seq.systems()[idx];
        std::uint64_t s = substream_seed(
            ctx.seed, "ssc/" + std::to_string(idx) + "/" + std::to_string(rep));
        SystemTrajectory traj = run(seq.make_config(idx, w0, sys.r * sys.r * T, s));
        stats[idx][rep] = ssc_statistic(traj, sys.r, seq.service(), seq.K_limit(), T, grid_dt,
                                        metric_tol);
    });

    auto out = ctx.open_csv("report.csv");
    out << "r,replication,stat_name,value\n";
    for (std::size_t idx = 0; idx < n_sys; ++idx) {
        double r = seq.systems()[idx].r;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            out << fmt(r) << ',' << rep << ",ssc_sup," << fmt(stats[idx][rep]) << "\n";
        }
        std::vector<double> sorted = stats[idx];
        std::sort(sorted.begin(), sorted.end());
        double median = (reps % 2 == 1)
                            ? sorted[reps / 2]
                            : 0.5 * (sorted[reps / 2 - 1] + sorted[reps / 2]);
        out << fmt(r) << ",-1,ssc_median," << fmt(median) << "\n";
    }
    return 0;
}

int cmd_workload_limit(const Config& cfg, RunContext& ctx) {
    HeavyTrafficSequence seq = parse_sequence(cfg);
    double w0 = cfg.get_double_or("w0", 0.0);
    double T = cfg.get_double("T");
    int reps = static_cast<int>(cfg.get_int_or("reps", 500));
    int rbm_paths = static_cast<int>(cfg.get_int_or("rbm.paths", 20000));
    cfg.reject_unknown();

    WorkloadLimitReport rep = workload_limit_check(seq, T, reps, w0, ctx.seed, rbm_paths);

    auto out = ctx.open_csv("report.csv");
    out << "r,replication,stat_name,value\n";
    const char* qn[] = {"q10", "q25", "q50", "q75", "q90"};
    for (std::size_t k = 0; k < 5; ++k) {
        out << "0,-1,rbm_" << qn[k] << ',' << fmt(rep.rbm_quantiles[k]) << "\n";
    }
    for (std::size_t i = 0; i < rep.r.size(); ++i) {
        for (std::size_t k = 0; k < 5; ++k) {
            out << fmt(rep.r[i]) << ",-1," << qn[k] << ','
                << fmt(rep.empirical_quantiles[i][k]) << "\n";
        }
        out << fmt(rep.r[i]) << ",-1,max_quantile_gap," << fmt(rep.max_quantile_gap[i]) << "\n";
    }
    return 0;
}

int cmd_gc_diagnostic(const Config& cfg, RunContext& ctx) {
    DistributionSpec spec = parse_distribution(cfg, "service");
    std::vector<double> rs = cfg.get_list_or("r", {});
    if (rs.empty()) throw ConfigError("missing required config key: r");
    std::vector<double> fractions = cfg.get_list_or("n_fractions", {0.0, 0.5, 1.0});
    double L1 = cfg.get_double("L1");
    cfg.reject_unknown();

    std::vector<double> stats(rs.size(), 0.0);
    run_parallel(rs.size(), ctx.parallel, [&](std::size_t i) {
        stats[i] = empirical_measure_diagnostic(spec, rs[i], fractions, L1,
                                                substream_seed(ctx.seed, "gc/" +
                                                               std::to_string(i)));
    });
    auto out = ctx.open_csv("report.csv");
    out << "r,replication,stat_name,value\n";
    for (std::size_t i = 0; i < rs.size(); ++i) {
        out << fmt(rs[i]) << ",-1,gc_sup," << fmt(stats[i]) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"limited processor sharing queue toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    std::uint64_t seed = 0;
    int parallel = 1;
    std::vector<std::string> overrides;

    const std::vector<std::string> commands = {"simulate",       "fluid", "renewal", "rbm",
                                               "ssc",            "workload-limit",
                                               "gc-diagnostic"};
    for (const std::string& name : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "flat key=value config file");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "master seed (env LPS_SEED overrides)");
        sub->add_option("--parallel", parallel, "worker thread bound")
            ->check(CLI::PositiveNumber);
        sub->add_option("--set", overrides, "config overrides key=value");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitConfig;
    }

    try {
        Config cfg = Config::load(config_path, overrides);

        RunContext ctx;
        ctx.command = app.get_subcommands().front()->get_name();
        ctx.out_dir = out_dir;
        ctx.parallel = parallel;
        if (cfg.has("seed")) seed = static_cast<std::uint64_t>(cfg.get_int_or("seed", 0));
        if (const char* env = std::getenv("LPS_SEED")) {
            seed = std::strtoull(env, nullptr, 10);
        }
        ctx.seed = seed;
        ctx.resolved = cfg.values();
        ctx.resolved["seed"] = std::to_string(seed);

        fs::create_directories(ctx.out_dir);
        ctx.write_manifest();

        if (ctx.command == "simulate") return cmd_simulate(cfg, ctx);
        if (ctx.command == "fluid") return cmd_fluid(cfg, ctx);
        if (ctx.command == "renewal") return cmd_renewal(cfg, ctx);
        if (ctx.command == "rbm") return cmd_rbm(cfg, ctx);
        if (ctx.command == "ssc") return cmd_ssc(cfg, ctx);
        if (ctx.command == "workload-limit") return cmd_workload_limit(cfg, ctx);
        if (ctx.command == "gc-diagnostic") return cmd_gc_diagnostic(cfg, ctx);
        std::fprintf(stderr, "lps: unknown command\n");
        return kExitConfig;
    } catch (const ToleranceError& e) {
        std::fprintf(stderr, "lps: tolerance failure: %s\n", e.what());
        return kExitTolerance;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "lps: config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "lps: config error: %s\n", e.what());
        return kExitConfig;
    }
}
