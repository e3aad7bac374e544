#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "lps/distribution.hpp"
#include "lps/measure.hpp"

namespace lps {

struct Job {
    long long id = 0;  // <= 0 for initial jobs, arrival index otherwise
    double size = 0.0;
    double arrival_time = 0.0;
    std::optional<double> service_start;
    std::optional<double> departure_time;
    double clock = 0.0;  // departure clock on the cumulative-service scale
};

struct LpsConfig {
    int K = 1;
    DistributionSpec arrival;  // interarrival law; rate = 1/mean
    DistributionSpec service;
    std::vector<double> init_buffer;   // full sizes, FIFO order
    std::vector<double> init_service;  // residual sizes, at most K of them
    double horizon = 0.0;
    std::uint64_t seed = 0;

    LpsConfig(DistributionSpec arrival_, DistributionSpec service_)
        : arrival(std::move(arrival_)), service(std::move(service_)) {}
};

enum class EventKind { Init, Arrival, Departure, Admission };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    long long job = 0;
    // post-event scalar state
    double E = 0.0, B = 0.0, Q = 0.0, Z = 0.0, X = 0.0, W = 0.0;
    double S = 0.0;  // cumulative per-job service amount
};

/// Full simulated path of the LPS-K queue. Scalar processes are exact step /
/// piecewise-linear functions of the recorded events; snapshots of the
/// measure-valued state are reconstructable at any time up to the horizon.
class SystemTrajectory {
public:
    std::vector<Event> events;
    std::vector<Job> jobs;
    double horizon = 0.0;
    int K = 1;
    double W0 = 0.0;

    double E(double t) const { return at(t).E; }
    double B(double t) const { return at(t).B; }
    double Q(double t) const { return at(t).Q; }
    double Z(double t) const { return at(t).Z; }
    double X(double t) const { return at(t).X; }
    /// Workload: piecewise linear with slope -1 while X > 0.
    double W(double t) const;
    /// Cumulative per-job service S(t) = int_0^t 1{Z>0}/Z.
    double S(double t) const;

    /// (buffer measure, server measure): unit atoms at buffered full sizes
    /// and at in-service residuals; right continuous at event times.
    std::pair<Measure, Measure> snapshot(double t) const;

    /// (1/t_end) int_0^t_end W, exact on the piecewise-linear path.
    double time_average_W(double t_end) const;

private:
    const Event& at(double t) const;
};

/// Event-driven simulation; deterministic given config.seed. Interarrivals
/// come from substream "arrivals", sizes from substream "sizes", drawn in
/// arrival order.
SystemTrajectory run(const LpsConfig& config);

struct LindleyPath {
    std::vector<double> times;     // arrival epochs (including t = 0 start)
    std::vector<double> workload;  // W just after each epoch
    double time_average = 0.0;
};

/// Independent Lindley-recursion workload with the same seed streams as
/// run(); under any nonidling policy the workload path must coincide.
LindleyPath workload_oracle(const LpsConfig& config);

} // namespace lps
