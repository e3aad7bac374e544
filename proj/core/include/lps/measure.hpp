#pragma once

#include <optional>
#include <vector>

#include "lps/numeric.hpp"

namespace lps {

/// Point mass: `weight` at `location`.
struct Atom {
    double location = 0.0;
    double weight = 0.0;
};

/// Density piece on [a, b): cubic polynomial in the local coordinate (x - a).
struct PolyPiece {
    double a = 0.0;
    double b = 0.0;
    num::Cubic coeffs{};
};

/// Analytic exponential tail: density scale * exp(-rate * (x - start)) on [start, inf).
/// Several components may coexist (their densities add).
struct ExpPiece {
    double start = 0.0;
    double rate = 1.0;
    double scale = 0.0;
};

/// Finite nonnegative Borel measure on [0, inf), represented as an atomic
/// part plus a piecewise-cubic density and optional exponential tail
/// components. Tails and low-order moments are exact (up to quadrature
/// tolerance for non-integer moment orders). Immutable after finalize().
class Measure {
public:
    Measure() = default;

    static Measure zero();
    static Measure point_mass(double location, double weight);

    Measure& add_atom(double location, double weight);
    Measure& add_poly_piece(double a, double b, const num::Cubic& local_coeffs);
    Measure& add_exp_piece(double start, double rate, double scale);

    /// Sorts components, merges duplicate atoms, validates invariants
    /// (nonnegativity, disjoint pieces) and caches masses.
    /// Throws std::invalid_argument on violation.
    void finalize();
    bool finalized() const { return finalized_; }

    double total_mass() const;
    /// m((y, inf))
    double tail(double y) const;
    /// m([y, inf))
    double tail_closed(double y) const { return tail(y) + atom_at(y); }
    double atom_at(double y) const;
    /// m((a, b)); b may be +inf.
    double mass_open(double a, double b) const;
    /// Density part evaluated at x (atoms excluded).
    double density(double x) const;
    /// <chi^k, m> for k >= 0; adaptive quadrature over density pieces.
    double moment(double k) const;
    double mean() const { return moment(1.0); }

    Measure scaled(double c) const;
    Measure plus(const Measure& other) const;
    bool is_zero() const;

    /// Atom locations, piece endpoints, exponential starts (sorted, unique, includes 0).
    std::vector<double> knots() const;

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<PolyPiece>& poly_pieces() const { return pieces_; }
    const std::vector<ExpPiece>& exp_pieces() const { return exps_; }

private:
    void require_finalized() const;

    std::vector<Atom> atoms_;
    std::vector<PolyPiece> pieces_;
    std::vector<ExpPiece> exps_;
    std::vector<double> atom_suffix_;   // suffix sums of atom weights
    std::vector<double> piece_suffix_;  // suffix sums of piece masses
    double total_mass_ = 0.0;
    bool finalized_ = false;
};

/// sup_{y >= 0} |m1((y,inf)) - m2((y,inf))|.
double tail_sup_distance(const Measure& m1, const Measure& m2);

/// Prohorov metric within additive `tol`, by bisection on epsilon with the
/// candidate set family restricted to finite unions of intervals whose
/// endpoints lie on the merged knot grid of the two representations.
double prohorov_distance(const Measure& m1, const Measure& m2, double tol = 1e-6);

/// Product-space metric on M x M: max of componentwise Prohorov distances.
double max_prohorov(const Measure& a1, const Measure& a2, const Measure& b1,
                    const Measure& b2, double tol = 1e-6);

/// (M+2) * eps^{1/3} with eps = tail_sup_distance and M the larger first
/// moment; an upper bound on the Prohorov distance. nullopt when eps >= 1.
std::optional<double> prohorov_bound_from_tails(const Measure& m1, const Measure& m2);

/// eps^{1/2} + (2M/q) * eps^{q/2} with eps the Prohorov distance; bounds
/// |<chi,m1> - <chi,m2>|. nullopt when eps >= 1 or a (1+q)-moment exceeds M.
std::optional<double> workload_diff_bound(const Measure& m1, const Measure& m2,
                                          double q, double M,
                                          double metric_tol = 1e-6);

/// Equilibrium measure of a probability-like measure: density tail(x)/mean.
Measure equilibrium_of(const Measure& nu);

/// Appends piecewise-cubic pieces approximating a smooth density f on [a, b]
/// by adaptive Hermite interpolation (midpoint error below tol).
template <typename F, typename DF>
void add_smooth_density(Measure& m, const F& f, const DF& df, double a, double b,
                        double tol, int max_depth = 24);

// --- implementation of the template ---

namespace detail {
inline num::Cubic hermite_cubic(double h, double f0, double f1, double d0, double d1) {
    double delta = (f1 - f0) / h;
    return {f0, d0, (3.0 * delta - 2.0 * d0 - d1) / h,
            (d0 + d1 - 2.0 * delta) / (h * h)};
}
} // namespace detail

template <typename F, typename DF>
void add_smooth_density(Measure& m, const F& f, const DF& df, double a, double b,
                        double tol, int max_depth) {
    if (b <= a) return;
    double h = b - a;
    double f0 = f(a), f1 = f(b);
    num::Cubic c = detail::hermite_cubic(h, f0, f1, df(a), df(b));
    double mid = 0.5 * (a + b);
    double err = std::abs(num::cubic_eval(c, 0.5 * h) - f(mid));
    if ((err <= tol && num::cubic_min(c, 0.0, h) >= -tol) || max_depth <= 0) {
        if (num::cubic_min(c, 0.0, h) < 0.0) {
            // fall back to a chord, which stays nonnegative for nonnegative data
            c = {f0, (f1 - f0) / h, 0.0, 0.0};
        }
        m.add_poly_piece(a, b, c);
        return;
    }
    add_smooth_density(m, f, df, a, mid, tol, max_depth - 1);
    add_smooth_density(m, f, df, mid, b, tol, max_depth - 1);
}

} // namespace lps
