#pragma once
#include <vector>

namespace pefcert {

// Equality-form linear program: minimize c.x subject to A x = b, x >= 0.
// An empty objective vector means a pure feasibility problem.
struct LpProblem {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;  // row-major, rows x cols
    std::vector<double> b;  // length rows
    std::vector<double> c;  // length cols, or empty
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;       // primal solution when Optimal
    double objective = 0.0;      // c.x when Optimal
    std::vector<double> farkas;  // when Infeasible: y with y.A <= 0 for every column
                                 // and y.b > 0, scaled to unit max-norm
    int iterations = 0;
};

// Two-phase primal simplex on a dense tableau with Bland's anti-cycling rule.
LpResult lp_solve(const LpProblem& p);

// Residual check of a candidate point: max over |A x - b| and negative-part of x.
double lp_point_residual(const LpProblem& p, const std::vector<double>& x);

}  // namespace pefcert
