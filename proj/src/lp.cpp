#include "pefcert/lp.hpp"

#include <cmath>
#include <limits>

#include "pefcert/errors.hpp"

namespace pefcert {

namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-10;
constexpr double kFeasTol = 1e-8;
constexpr int kMaxIterations = 200000;

// Dense simplex tableau over columns [structural | artificial] with an
// explicit reduced-cost row.  Bland's rule: entering column is the lowest
// index with negative reduced cost; leaving row breaks ratio ties by the
// lowest basic variable index.  Guarantees termination without cycling.
struct Tableau {
    int m, n;                    // rows, total columns
    std::vector<double> t;       // m x (n+1), last column is the rhs
    std::vector<double> z;       // reduced costs, length n
    double obj = 0.0;            // current objective value
    std::vector<int> basis;      // length m
    int iterations = 0;

    double& at(int r, int c) { return t[(size_t)r * (size_t)(n + 1) + (size_t)c]; }
    double rhs(int r) const { return t[(size_t)r * (size_t)(n + 1) + (size_t)n]; }

    void pivot(int pr, int pc) {
        double piv = at(pr, pc);
        for (int c = 0; c <= n; ++c) at(pr, c) /= piv;
        for (int r = 0; r < m; ++r) {
            if (r == pr) continue;
            double f = at(r, pc);
            if (f == 0.0) continue;
            for (int c = 0; c <= n; ++c) at(r, c) -= f * at(pr, c);
            at(r, pc) = 0.0;
        }
        double zf = z[(size_t)pc];
        if (zf != 0.0) {
            for (int c = 0; c < n; ++c) z[(size_t)c] -= zf * at(pr, c);
            obj += zf * rhs(pr);
            z[(size_t)pc] = 0.0;
        }
        basis[(size_t)pr] = pc;
    }

    // Runs simplex to optimality over the allowed column range [0, limit).
    // Returns false when the problem is unbounded below.
    bool run(int limit) {
        for (;;) {
            if (++iterations > kMaxIterations) throw SolverError("simplex iteration limit exceeded");
            int enter = -1;
            for (int c = 0; c < limit; ++c) {
                if (z[(size_t)c] < -kReducedCostTol) {
                    enter = c;
                    break;  // Bland: smallest index
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int r = 0; r < m; ++r) {
                double a = at(r, enter);
                if (a > kPivotTol) {
                    double ratio = rhs(r) / a;
                    if (ratio < best - 1e-15 ||
                        (ratio < best + 1e-15 && (leave < 0 || basis[(size_t)r] < basis[(size_t)leave])))
                    {
                        best = ratio;
                        leave = r;
                    }
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    }
};

}  // namespace

double lp_point_residual(const LpProblem& p, const std::vector<double>& x) {
    double worst = 0.0;
    for (int r = 0; r < p.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < p.cols; ++c) s += p.a[(size_t)r * (size_t)p.cols + (size_t)c] * x[(size_t)c];
        worst = std::max(worst, std::abs(s - p.b[(size_t)r]));
    }
    for (double v : x) worst = std::max(worst, -v);
    return worst;
}

LpResult lp_solve(const LpProblem& p) {
    if (p.rows <= 0 || p.cols <= 0 || (long long)p.a.size() != (long long)p.rows * p.cols ||
        (int)p.b.size() != p.rows || (!p.c.empty() && (int)p.c.size() != p.cols))
        throw ValidationError("malformed LP dimensions");

    const int m = p.rows, ns = p.cols;
    Tableau tb;
    tb.m = m;
    tb.n = ns + m;  // structural + artificial
    tb.t.assign((size_t)m * (size_t)(tb.n + 1), 0.0);
    tb.basis.resize((size_t)m);

    // Rows with negative rhs are sign-flipped so the artificial basis is feasible.
    std::vector<int> flip((size_t)m, 1);
    for (int r = 0; r < m; ++r) {
        if (p.b[(size_t)r] < 0) flip[(size_t)r] = -1;
        for (int c = 0; c < ns; ++c) tb.at(r, c) = flip[(size_t)r] * p.a[(size_t)r * (size_t)ns + (size_t)c];
        tb.at(r, ns + r) = 1.0;
        tb.at(r, tb.n) = flip[(size_t)r] * p.b[(size_t)r];
        tb.basis[(size_t)r] = ns + r;
    }

    // Phase 1: minimize the sum of artificials.
    tb.z.assign((size_t)tb.n, 0.0);
    tb.obj = 0.0;
    for (int c = 0; c < tb.n; ++c) {
        double zc = (c >= ns) ? 1.0 : 0.0;
        for (int r = 0; r < m; ++r)
            if (tb.basis[(size_t)r] == ns + r) zc -= tb.at(r, c);
        tb.z[(size_t)c] = zc;
    }
    for (int r = 0; r < m; ++r) tb.obj += tb.rhs(r);
    if (!tb.run(tb.n)) throw SolverError("phase-1 problem reported unbounded");

    LpResult res;
    res.iterations = tb.iterations;
    if (tb.obj > kFeasTol) {
        // Infeasible: the phase-1 multipliers give a Farkas certificate.
        // y_i = 1 - reduced_cost(artificial_i); then y.A_j <= 0 for structural
        // columns and y.b equals the positive phase-1 optimum.
        res.status = LpStatus::Infeasible;
        std::vector<double> y((size_t)m);
        double norm = 0.0;
        for (int r = 0; r < m; ++r) {
            y[(size_t)r] = flip[(size_t)r] * (1.0 - tb.z[(size_t)(ns + r)]);
            norm = std::max(norm, std::abs(y[(size_t)r]));
        }
        if (norm > 0)
            for (double& v : y) v /= norm;
        res.farkas = std::move(y);
        return res;
    }

    // Drive any degenerate artificials out of the basis; a row where no
    // structural pivot exists is redundant and harmless (the artificial stays
    // basic at level ~0 and is barred from phase 2).
    for (int r = 0; r < m; ++r) {
        if (tb.basis[(size_t)r] < ns) continue;
        for (int c = 0; c < ns; ++c) {
            if (std::abs(tb.at(r, c)) > 1e-7) {
                tb.pivot(r, c);
                break;
            }
        }
    }

    if (!p.c.empty()) {
        // Phase 2 over structural columns only.
        tb.z.assign((size_t)tb.n, 0.0);
        tb.obj = 0.0;
        for (int c = 0; c < ns; ++c) tb.z[(size_t)c] = p.c[(size_t)c];
        for (int r = 0; r < m; ++r) {
            int bc = tb.basis[(size_t)r];
            double cb = (bc < ns) ? p.c[(size_t)bc] : 0.0;
            if (cb == 0.0) continue;
            for (int c = 0; c < tb.n; ++c) tb.z[(size_t)c] -= cb * tb.at(r, c);
            tb.obj += cb * tb.rhs(r);
        }
        // run(ns) never considers artificial columns for entering.
        if (!tb.run(ns)) {
            res.status = LpStatus::Unbounded;
            res.iterations = tb.iterations;
            return res;
        }
    }

    res.status = LpStatus::Optimal;
    res.iterations = tb.iterations;
    res.x.assign((size_t)ns, 0.0);
    for (int r = 0; r < m; ++r)
        if (tb.basis[(size_t)r] < ns) res.x[(size_t)tb.basis[(size_t)r]] = tb.rhs(r);
    res.objective = 0.0;
    if (!p.c.empty())
        for (int c = 0; c < ns; ++c) res.objective += p.c[(size_t)c] * res.x[(size_t)c];
    return res;
}

}  // namespace pefcert
