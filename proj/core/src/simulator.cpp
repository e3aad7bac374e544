#include "lps/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "lps/rng.hpp"

namespace lps {

double SystemTrajectory::W(double t) const {
    const Event& e = at(t);
    if (e.X > 0.0) return std::max(0.0, e.W - (t - e.time));
    return e.W;
}

double SystemTrajectory::S(double t) const {
    const Event& e = at(t);
    if (e.Z > 0.0) return e.S + (t - e.time) / e.Z;
    return e.S;
}

const Event& SystemTrajectory::at(double t) const {
    auto it = std::upper_bound(events.begin(), events.end(), t,
                               [](double v, const Event& e) { return v < e.time; });
    if (it == events.begin()) return events.front();
    return *(it - 1);
}

std::pair<Measure, Measure> SystemTrajectory::snapshot(double t) const {
    if (t > horizon + 1e-12) throw std::out_of_range("snapshot: t beyond horizon");
    double s = S(t);
    Measure buf, ser;
    for (const Job& j : jobs) {
        if (j.arrival_time > t) continue;
        bool started = j.service_start && *j.service_start <= t;
        bool departed = j.departure_time && *j.departure_time <= t;
        if (departed) continue;
        if (started) {
            double rem = j.clock - s;
            if (rem > 1e-12) ser.add_atom(rem, 1.0);
        } else {
            buf.add_atom(j.size, 1.0);
        }
    }
    buf.finalize();
    ser.finalize();
    return {std::move(buf), std::move(ser)};
}

double SystemTrajectory::time_average_W(double t_end) const {
    t_end = std::min(t_end, horizon);
    num::KahanSum area;
    for (std::size_t k = 0; k < events.size(); ++k) {
        double t0 = events[k].time;
        if (t0 >= t_end) break;
        double t1 = (k + 1 < events.size()) ? std::min(events[k + 1].time, t_end) : t_end;
        if (t1 <= t0) continue;
        double d = t1 - t0;
        if (events[k].X > 0.0) {
            area.add(events[k].W * d - 0.5 * d * d);
        }
        // X = 0 segments carry W = 0
    }
    return area.value() / t_end;
}

SystemTrajectory run(const LpsConfig& cfg) {
    if (!(cfg.horizon > 0.0)) throw std::invalid_argument("run: horizon must be > 0");
    if (cfg.K < 1) throw std::invalid_argument("run: K must be >= 1");
    if (cfg.init_service.size() > static_cast<std::size_t>(cfg.K)) {
        throw std::invalid_argument("run: more than K initial in-service jobs");
    }
    if (cfg.init_service.size() < static_cast<std::size_t>(cfg.K) && !cfg.init_buffer.empty()) {
        throw std::invalid_argument("run: buffered jobs with an idle service slot");
    }
    for (double v : cfg.init_service) {
        if (!(v > 0.0)) throw std::invalid_argument("run: residuals must be > 0");
    }
    for (double v : cfg.init_buffer) {
        if (!(v > 0.0)) throw std::invalid_argument("run: sizes must be > 0");
    }

    RngStream arr(substream_seed(cfg.seed, "arrivals"));
    RngStream siz(substream_seed(cfg.seed, "sizes"));

    SystemTrajectory traj;
    traj.horizon = cfg.horizon;
    traj.K = cfg.K;

    auto ns = static_cast<long long>(cfg.init_service.size());
    auto nb = static_cast<long long>(cfg.init_buffer.size());

    double t = 0.0, S = 0.0;
    double W = 0.0;
    std::multiset<std::pair<double, long long>> active;  // (departure clock, id)
    std::vector<long long> buffer;                       // FIFO, indexes into traj.jobs
    std::size_t buffer_head = 0;

    auto job_index = [&](long long id) { return static_cast<std::size_t>(id + ns + nb - 1); };

    for (long long k = 0; k < ns; ++k) {
        Job j;
        j.id = k - ns - nb + 1;
        j.size = cfg.init_service[static_cast<std::size_t>(k)];
        j.arrival_time = 0.0;
        j.service_start = 0.0;
        j.clock = j.size;  // S = 0 at start
        W += j.size;
        active.insert({j.clock, j.id});
        traj.jobs.push_back(j);
    }
    for (long long k = 0; k < nb; ++k) {
        Job j;
        j.id = k - nb + 1;
        j.size = cfg.init_buffer[static_cast<std::size_t>(k)];
        j.arrival_time = 0.0;
        W += j.size;
        buffer.push_back(j.id);
        traj.jobs.push_back(j);
    }
    traj.W0 = W;

    double E = 0.0;
    long long next_id = 1;
    auto record = [&](EventKind kind, long long id) {
        Event e;
        e.time = t;
        e.kind = kind;
        e.job = id;
        e.E = E;
        e.Q = static_cast<double>(buffer.size() - buffer_head);
        e.Z = static_cast<double>(active.size());
        e.X = e.Q + e.Z;
        e.B = e.E - e.Q;
        e.W = W;
        e.S = S;
        traj.events.push_back(e);
    };
    record(EventKind::Init, 0);

    double na = cfg.arrival.sample(arr);
    auto advance_to = [&](double tn) {
        double z = static_cast<double>(active.size());
        if (z > 0.0) {
            S += (tn - t) / z;
            W = std::max(0.0, W - (tn - t));
        }
        t = tn;
    };

    while (true) {
        double td = std::numeric_limits<double>::infinity();
        if (!active.empty()) {
            td = t + static_cast<double>(active.size()) * (active.begin()->first - S);
            td = std::max(td, t);
        }
        if (td <= na) {
            if (td > cfg.horizon) break;
            advance_to(td);
            auto it = active.begin();
            long long id = it->second;
            S = it->first;  // exact: departing job's residual hits zero
            active.erase(it);
            Job& j = traj.jobs[job_index(id)];
            j.departure_time = t;
            record(EventKind::Departure, id);
            if (buffer_head < buffer.size()) {
                long long aid = buffer[buffer_head++];
                Job& a = traj.jobs[job_index(aid)];
                a.service_start = t;
                a.clock = S + a.size;
                active.insert({a.clock, a.id});
                record(EventKind::Admission, aid);
            }
        } else {
            if (na > cfg.horizon) break;
            advance_to(na);
            Job j;
            j.id = next_id++;
            j.size = cfg.service.sample(siz);
            j.arrival_time = t;
            E += 1.0;
            W += j.size;
            if (active.size() < static_cast<std::size_t>(cfg.K)) {
                j.service_start = t;
                j.clock = S + j.size;
                active.insert({j.clock, j.id});
                traj.jobs.push_back(j);
            } else {
                traj.jobs.push_back(j);
                buffer.push_back(j.id);
            }
            record(EventKind::Arrival, j.id);
            na = t + cfg.arrival.sample(arr);
        }
    }
    return traj;
}

LindleyPath workload_oracle(const LpsConfig& cfg) {
    RngStream arr(substream_seed(cfg.seed, "arrivals"));
    RngStream siz(substream_seed(cfg.seed, "sizes"));
    LindleyPath path;
    double w = 0.0;
    for (double v : cfg.init_buffer) w += v;
    for (double v : cfg.init_service) w += v;
    path.times.push_back(0.0);
    path.workload.push_back(w);
    num::KahanSum area;
    double t = 0.0;
    while (true) {
        double ta = t + cfg.arrival.sample(arr);
        if (ta > cfg.horizon) {
            double d = cfg.horizon - t;
            area.add(w >= d ? w * d - 0.5 * d * d : 0.5 * w * w);
            break;
        }
        double d = ta - t;
        area.add(w >= d ? w * d - 0.5 * d * d : 0.5 * w * w);
        w = std::max(0.0, w - d) + cfg.service.sample(siz);
        t = ta;
        path.times.push_back(t);
        path.workload.push_back(w);
    }
    path.time_average = area.value() / cfg.horizon;
    return path;
}

} // namespace lps
