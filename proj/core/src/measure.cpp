#include "lps/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lps {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// How far past `start` an exponential density contributes appreciable mass.
double exp_cutoff(const ExpPiece& e) { return 80.0 / e.rate; }

// Shift a local cubic: coefficients of p(t + d).
num::Cubic cubic_shift(const num::Cubic& c, double d) {
    return {num::cubic_eval(c, d),
            c[1] + 2.0 * c[2] * d + 3.0 * c[3] * d * d,
            c[2] + 3.0 * c[3] * d,
            c[3]};
}

} // namespace

Measure Measure::zero() {
    Measure m;
    m.finalize();
    return m;
}

Measure Measure::point_mass(double location, double weight) {
    Measure m;
    m.add_atom(location, weight);
    m.finalize();
    return m;
}

Measure& Measure::add_atom(double location, double weight) {
    if (finalized_) throw std::logic_error("Measure: mutation after finalize");
    atoms_.push_back({location, weight});
    return *this;
}

Measure& Measure::add_poly_piece(double a, double b, const num::Cubic& local_coeffs) {
    if (finalized_) throw std::logic_error("Measure: mutation after finalize");
    pieces_.push_back({a, b, local_coeffs});
    return *this;
}

Measure& Measure::add_exp_piece(double start, double rate, double scale) {
    if (finalized_) throw std::logic_error("Measure: mutation after finalize");
    exps_.push_back({start, rate, scale});
    return *this;
}

void Measure::finalize() {
    if (finalized_) return;

    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& x, const Atom& y) { return x.location < y.location; });
    std::vector<Atom> merged;
    for (const Atom& a : atoms_) {
        if (!(a.location >= 0.0) || !std::isfinite(a.location)) {
            throw std::invalid_argument("Measure: atom location must be finite and >= 0");
        }
        if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) {
            throw std::invalid_argument("Measure: atom weight must be finite and >= 0");
        }
        if (a.weight == 0.0) continue;
        if (!merged.empty() && merged.back().location == a.location) {
            merged.back().weight += a.weight;
        } else {
            merged.push_back(a);
        }
    }
    atoms_ = std::move(merged);

    std::sort(pieces_.begin(), pieces_.end(),
              [](const PolyPiece& x, const PolyPiece& y) { return x.a < y.a; });
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const PolyPiece& p = pieces_[i];
        if (!(p.a >= 0.0) || !(p.b > p.a) || !std::isfinite(p.b)) {
            throw std::invalid_argument("Measure: piece must satisfy 0 <= a < b < inf");
        }
        double h = p.b - p.a;
        double tol = 1e-9 * (1.0 + std::abs(num::cubic_eval(p.coeffs, 0.0)) +
                             std::abs(num::cubic_eval(p.coeffs, h)));
        if (num::cubic_min(p.coeffs, 0.0, h) < -tol) {
            throw std::invalid_argument("Measure: negative density in piece");
        }
        if (i > 0 && p.a < pieces_[i - 1].b - 1e-12 * std::max(1.0, p.a)) {
            throw std::invalid_argument("Measure: overlapping pieces");
        }
    }

    for (const ExpPiece& e : exps_) {
        if (!(e.start >= 0.0) || !(e.rate > 0.0) || !(e.scale >= 0.0)) {
            throw std::invalid_argument("Measure: exp piece requires start>=0, rate>0, scale>=0");
        }
    }
    std::sort(exps_.begin(), exps_.end(),
              [](const ExpPiece& x, const ExpPiece& y) { return x.start < y.start; });
    exps_.erase(std::remove_if(exps_.begin(), exps_.end(),
                               [](const ExpPiece& e) { return e.scale == 0.0; }),
                exps_.end());

    atom_suffix_.assign(atoms_.size() + 1, 0.0);
    for (std::size_t i = atoms_.size(); i-- > 0;) {
        atom_suffix_[i] = atom_suffix_[i + 1] + atoms_[i].weight;
    }
    piece_suffix_.assign(pieces_.size() + 1, 0.0);
    for (std::size_t i = pieces_.size(); i-- > 0;) {
        const PolyPiece& p = pieces_[i];
        piece_suffix_[i] = piece_suffix_[i + 1] + num::cubic_integral(p.coeffs, 0.0, p.b - p.a);
    }

    total_mass_ = atom_suffix_.empty() ? 0.0 : atom_suffix_[0];
    total_mass_ += piece_suffix_.empty() ? 0.0 : piece_suffix_[0];
    for (const ExpPiece& e : exps_) total_mass_ += e.scale / e.rate;

    finalized_ = true;
}

void Measure::require_finalized() const {
    if (!finalized_) throw std::logic_error("Measure: finalize() before querying");
}

double Measure::total_mass() const {
    require_finalized();
    return total_mass_;
}

double Measure::tail(double y) const {
    require_finalized();
    double s = 0.0;
    // atoms with location strictly greater than y
    std::size_t ai = std::upper_bound(atoms_.begin(), atoms_.end(), y,
                                      [](double v, const Atom& a) { return v < a.location; }) -
                     atoms_.begin();
    s += atom_suffix_[ai];
    // pieces: find the first piece with b > y
    std::size_t pi = std::upper_bound(pieces_.begin(), pieces_.end(), y,
                                      [](double v, const PolyPiece& p) { return v < p.b; }) -
                     pieces_.begin();
    if (pi < pieces_.size()) {
        const PolyPiece& p = pieces_[pi];
        if (y > p.a) {
            s += num::cubic_integral(p.coeffs, y - p.a, p.b - p.a) + piece_suffix_[pi + 1];
        } else {
            s += piece_suffix_[pi];
        }
    }
    for (const ExpPiece& e : exps_) {
        double m = e.scale / e.rate;
        s += (y <= e.start) ? m : m * std::exp(-e.rate * (y - e.start));
    }
    return s;
}

double Measure::atom_at(double y) const {
    require_finalized();
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), y,
                               [](const Atom& a, double v) { return a.location < v; });
    if (it != atoms_.end() && it->location == y) return it->weight;
    return 0.0;
}

double Measure::mass_open(double a, double b) const {
    require_finalized();
    if (b <= a) return 0.0;
    if (std::isinf(b)) return tail(a);
    return std::max(0.0, tail(a) - tail(b) - atom_at(b));
}

double Measure::density(double x) const {
    require_finalized();
    double s = 0.0;
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                               [](double v, const PolyPiece& p) { return v < p.b; });
    if (it != pieces_.end() && x >= it->a) s += num::cubic_eval(it->coeffs, x - it->a);
    for (const ExpPiece& e : exps_) {
        if (x >= e.start) s += e.scale * std::exp(-e.rate * (x - e.start));
    }
    return s;
}

double Measure::moment(double k) const {
    require_finalized();
    if (k < 0.0) throw std::invalid_argument("Measure::moment: k must be >= 0");
    if (k == 0.0) return total_mass_;
    num::KahanSum s;
    for (const Atom& a : atoms_) s.add(std::pow(a.location, k) * a.weight);
    for (const PolyPiece& p : pieces_) {
        double scale = std::max({1.0, piece_suffix_[0], std::pow(p.b, k)});
        s.add(num::adaptive_simpson(
            [&](double x) { return std::pow(x, k) * num::cubic_eval(p.coeffs, x - p.a); },
            p.a, p.b, 1e-13 * scale));
    }
    for (const ExpPiece& e : exps_) {
        double hi = e.start + exp_cutoff(e);
        double scale = std::max(1.0, std::pow(hi, k) * e.scale / e.rate);
        s.add(num::adaptive_simpson(
            [&](double x) { return std::pow(x, k) * e.scale * std::exp(-e.rate * (x - e.start)); },
            e.start, hi, 1e-13 * scale));
    }
    return s.value();
}

Measure Measure::scaled(double c) const {
    require_finalized();
    if (!(c >= 0.0)) throw std::invalid_argument("Measure::scaled: c must be >= 0");
    Measure r;
    for (const Atom& a : atoms_) r.add_atom(a.location, c * a.weight);
    for (const PolyPiece& p : pieces_) {
        r.add_poly_piece(p.a, p.b,
                         {c * p.coeffs[0], c * p.coeffs[1], c * p.coeffs[2], c * p.coeffs[3]});
    }
    for (const ExpPiece& e : exps_) r.add_exp_piece(e.start, e.rate, c * e.scale);
    r.finalize();
    return r;
}

Measure Measure::plus(const Measure& other) const {
    require_finalized();
    other.require_finalized();
    Measure r;
    for (const Atom& a : atoms_) r.add_atom(a.location, a.weight);
    for (const Atom& a : other.atoms_) r.add_atom(a.location, a.weight);
    for (const ExpPiece& e : exps_) r.add_exp_piece(e.start, e.rate, e.scale);
    for (const ExpPiece& e : other.exps_) r.add_exp_piece(e.start, e.rate, e.scale);

    // Poly pieces from the two measures may overlap: split on the union of
    // endpoints and add the local cubics on each elementary interval.
    std::vector<double> cuts;
    for (const PolyPiece& p : pieces_) { cuts.push_back(p.a); cuts.push_back(p.b); }
    for (const PolyPiece& p : other.pieces_) { cuts.push_back(p.a); cuts.push_back(p.b); }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto covering = [](const std::vector<PolyPiece>& ps, double u, double v) -> const PolyPiece* {
        double mid = 0.5 * (u + v);
        auto it = std::upper_bound(ps.begin(), ps.end(), mid,
                                   [](double x, const PolyPiece& p) { return x < p.b; });
        if (it != ps.end() && mid >= it->a) return &*it;
        return nullptr;
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double u = cuts[i], v = cuts[i + 1];
        const PolyPiece* p1 = covering(pieces_, u, v);
        const PolyPiece* p2 = covering(other.pieces_, u, v);
        if (!p1 && !p2) continue;
        num::Cubic c{0.0, 0.0, 0.0, 0.0};
        if (p1) {
            num::Cubic s = cubic_shift(p1->coeffs, u - p1->a);
            for (int j = 0; j < 4; ++j) c[j] += s[j];
        }
        if (p2) {
            num::Cubic s = cubic_shift(p2->coeffs, u - p2->a);
            for (int j = 0; j < 4; ++j) c[j] += s[j];
        }
        r.add_poly_piece(u, v, c);
    }
    r.finalize();
    return r;
}

bool Measure::is_zero() const {
    require_finalized();
    return total_mass_ == 0.0;
}

std::vector<double> Measure::knots() const {
    require_finalized();
    std::vector<double> g{0.0};
    for (const Atom& a : atoms_) g.push_back(a.location);
    for (const PolyPiece& p : pieces_) { g.push_back(p.a); g.push_back(p.b); }
    for (const ExpPiece& e : exps_) g.push_back(e.start);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

// --- distances ---

namespace {

// Merged knot grids of the two measures, plus effective-support endpoints of
// exponential components.
std::vector<double> merged_grid(const Measure& m1, const Measure& m2) {
    std::vector<double> g = m1.knots();
    for (double v : m2.knots()) g.push_back(v);
    for (const ExpPiece& e : m1.exp_pieces()) g.push_back(e.start + 80.0 / e.rate);
    for (const ExpPiece& e : m2.exp_pieces()) g.push_back(e.start + 80.0 / e.rate);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

// Golden-section search for the maximum of f on [a, b].
template <typename F>
double golden_max(const F& f, double a, double b, int iters = 60) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters && b - a > 1e-14 * (1.0 + std::abs(a)); ++i) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + phi * (b - a); f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - phi * (b - a); f1 = f(x1);
        }
    }
    return std::max(f1, f2);
}

} // namespace

double tail_sup_distance(const Measure& m1, const Measure& m2) {
    std::vector<double> g = merged_grid(m1, m2);
    auto d = [&](double y) { return std::abs(m1.tail(y) - m2.tail(y)); };
    double best = 0.0;
    for (double y : g) {
        best = std::max(best, d(y));
        // left limit at y: tails jump down by the atoms at y
        best = std::max(best, std::abs(m1.tail(y) + m1.atom_at(y) - m2.tail(y) - m2.atom_at(y)));
    }
    // interior extrema of the smooth difference between breakpoints; the
    // difference can have several local maxima per interval, so search on
    // subintervals
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        double a = g[i], b = g[i + 1];
        if (b - a < 1e-14) continue;
        for (int s = 0; s < 4; ++s) {
            double u = a + (b - a) * s / 4.0;
            double v = a + (b - a) * (s + 1) / 4.0;
            best = std::max(best, golden_max(d, u, v, 40));
        }
    }
    return best;
}

namespace {

struct Cell {
    double lo;    // open left endpoint of the cell's eps-enlargement is lo - eps
    double hi;    // open right endpoint is hi + eps; hi may be +inf
    double gain;  // mass of the source measure on the cell
};

// Cells are singletons {g_i}, open intervals (g_i, g_{i+1}), and the final
// ray (g_n, inf) over the merged knot grid; only positive-gain cells kept.
std::vector<Cell> make_cells(const Measure& src, const std::vector<double>& grid) {
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double w = src.atom_at(grid[i]);
        if (w > 0.0) cells.push_back({grid[i], grid[i], w});
        double a = grid[i];
        double b = (i + 1 < grid.size()) ? grid[i + 1] : kInf;
        double m = src.mass_open(a, b);
        if (m > 0.0) cells.push_back({a, b, m});
    }
    return cells;
}

// max over unions S of selected cells of  src(S) - dst(S^eps),  where S^eps
// is the open eps-enlargement. Dynamic program over cells in order; the
// enlargement of a union of cells is a union of intervals whose incremental
// cost depends only on the previous selected cell.
double violation(const std::vector<Cell>& cells, const Measure& dst, double eps) {
    std::size_t n = cells.size();
    if (n == 0) return 0.0;
    std::vector<double> lo_t(n), hi_t(n);  // dst tails at enlargement endpoints
    for (std::size_t i = 0; i < n; ++i) {
        lo_t[i] = dst.tail(std::max(0.0, cells[i].lo - eps));
        hi_t[i] = std::isinf(cells[i].hi) ? 0.0 : dst.tail_closed(cells[i].hi + eps);
    }
    // enlargement of cell i is (lo-eps, hi+eps); its dst mass when the left
    // endpoint clips at 0 must include the atom at 0 if lo - eps <= 0
    std::vector<double> lo_mass(n);
    for (std::size_t i = 0; i < n; ++i) {
        lo_mass[i] = (cells[i].lo - eps < 0.0) ? dst.total_mass() : lo_t[i];
    }
    std::vector<double> f(n);
    double best_far = -kInf;
    std::size_t jfar = 0;
    double result = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double cost_full = std::max(0.0, lo_mass[i] - hi_t[i]);
        while (jfar < i && cells[jfar].hi + eps <= cells[i].lo - eps) {
            best_far = std::max(best_far, f[jfar]);
            ++jfar;
        }
        double best = -cost_full;
        if (best_far > -kInf) best = std::max(best, best_far - cost_full);
        for (std::size_t j = jfar; j < i; ++j) {
            // enlargements overlap: only (hi_j + eps, hi_i + eps] is new
            double join = std::max(0.0, hi_t[j] - hi_t[i]);
            best = std::max(best, f[j] - join);
        }
        f[i] = cells[i].gain + best;
        result = std::max(result, f[i]);
    }
    return result;
}

} // namespace

double prohorov_distance(const Measure& m1, const Measure& m2, double tol) {
    std::vector<double> grid = merged_grid(m1, m2);
    std::vector<Cell> c1 = make_cells(m1, grid);
    std::vector<Cell> c2 = make_cells(m2, grid);
    double lo = 0.0;
    double hi = std::max(m1.total_mass(), m2.total_mass());
    if (hi == 0.0) return 0.0;
    auto feasible = [&](double eps) {
        return violation(c1, m2, eps) <= eps && violation(c2, m1, eps) <= eps;
    };
    if (feasible(0.0)) return 0.0;
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (feasible(mid)) hi = mid; else lo = mid;
    }
    return 0.5 * (lo + hi);
}

double max_prohorov(const Measure& a1, const Measure& a2, const Measure& b1,
                    const Measure& b2, double tol) {
    return std::max(prohorov_distance(a1, a2, tol), prohorov_distance(b1, b2, tol));
}

std::optional<double> prohorov_bound_from_tails(const Measure& m1, const Measure& m2) {
    double eps = tail_sup_distance(m1, m2);
    if (eps >= 1.0) return std::nullopt;
    double M = std::max(m1.moment(1.0), m2.moment(1.0));
    return (M + 2.0) * std::cbrt(eps);
}

std::optional<double> workload_diff_bound(const Measure& m1, const Measure& m2,
                                          double q, double M, double metric_tol) {
    if (!(q > 0.0) || !(M > 0.0)) {
        throw std::invalid_argument("workload_diff_bound: q and M must be positive");
    }
    if (m1.moment(1.0 + q) > M || m2.moment(1.0 + q) > M) return std::nullopt;
    double eps = prohorov_distance(m1, m2, metric_tol);
    if (eps >= 1.0) return std::nullopt;
    return std::sqrt(eps) + (2.0 * M / q) * std::pow(eps, 0.5 * q);
}

Measure equilibrium_of(const Measure& nu) {
    double beta = nu.moment(1.0);
    if (!(beta > 0.0)) {
        throw std::invalid_argument("equilibrium_of: measure must have positive mean");
    }
    Measure r;
    // Exponential components contribute exponential equilibrium components.
    for (const ExpPiece& e : nu.exp_pieces()) {
        // tail of the component: (scale/rate) on [0,start], then exponential
        double m = e.scale / e.rate;
        if (e.start > 0.0) r.add_poly_piece(0.0, e.start, {m / beta, 0.0, 0.0, 0.0});
        r.add_exp_piece(e.start, e.rate, m / beta);
    }
    // Atoms and polynomial pieces have piecewise-polynomial tails of degree
    // <= 4; degree-4 segments (cubic density) are re-approximated by
    // Hermite subdivision, lower degrees are exact.
    std::vector<double> g{0.0};
    for (const Atom& a : nu.atoms()) g.push_back(a.location);
    for (const PolyPiece& p : nu.poly_pieces()) { g.push_back(p.a); g.push_back(p.b); }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    auto finite_tail = [&](double y) {
        // tail of the atomic + polynomial part only
        double s = 0.0;
        for (const Atom& a : nu.atoms()) {
            if (a.location > y) s += a.weight;
        }
        for (const PolyPiece& p : nu.poly_pieces()) {
            if (p.b <= y) continue;
            s += num::cubic_integral(p.coeffs, std::max(0.0, y - p.a), p.b - p.a);
        }
        return s;
    };
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        double a = g[i], b = g[i + 1];
        if (b - a < 1e-15) continue;
        // Density of the equilibrium part on (a,b): finite_tail(x) / beta.
        // Within a cell it is a quartic minus... if the covering nu-piece is
        // cubic; exact when the covering piece has degree <= 2.
        const PolyPiece* cover = nullptr;
        double mid = 0.5 * (a + b);
        for (const PolyPiece& p : nu.poly_pieces()) {
            if (mid >= p.a && mid < p.b) { cover = &p; break; }
        }
        double t0 = finite_tail(a);
        if (!cover) {
            if (t0 > 0.0) r.add_poly_piece(a, b, {t0 / beta, 0.0, 0.0, 0.0});
            continue;
        }
        if (cover->coeffs[3] == 0.0) {
            // exact cubic tail: t0 - integral of density from a to a+t
            num::Cubic d = cubic_shift(cover->coeffs, a - cover->a);
            r.add_poly_piece(a, b,
                             {t0 / beta, -d[0] / beta, -d[1] / (2.0 * beta), -d[2] / (3.0 * beta)});
        } else {
            auto fd = [&](double x) { return finite_tail(x) / beta; };
            auto fdd = [&](double x) { return -nu.density(x) / beta; };
            add_smooth_density(r, fd, fdd, a, b, 1e-12 * std::max(1.0, t0 / beta));
        }
    }
    r.finalize();
    // normalize exactly to a probability measure
    double tm = r.total_mass();
    if (tm > 0.0 && std::abs(tm - 1.0) > 1e-15) r = r.scaled(1.0 / tm);
    return r;
}

} // namespace lps
