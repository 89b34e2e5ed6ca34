#include "pefcert/polytope.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "pefcert/boxes.hpp"
#include "pefcert/errors.hpp"
#include "pefcert/lp.hpp"

namespace pefcert {

std::string pr_label(int alpha, int beta, int gamma) {
    return "PR:" + std::to_string(alpha) + std::to_string(beta) + std::to_string(gamma);
}

std::string ld_label(int alpha, int beta, int gamma, int delta) {
    return "LD:" + std::to_string(alpha) + std::to_string(beta) + std::to_string(gamma) +
           std::to_string(delta);
}

MembershipResult local_membership(const Behaviour& b) {
    const std::vector<Behaviour> lds = ld_enumerate(b.scenario);
    const long long cells = b.scenario.cell_count();
    const int nv = (int)lds.size();

    // Feasibility system: convex weights over deterministic boxes matching
    // every coordinate, plus the normalization row.
    LpProblem p;
    p.rows = (int)cells + 1;
    p.cols = nv;
    p.a.assign((size_t)p.rows * (size_t)p.cols, 0.0);
    p.b.assign((size_t)p.rows, 0.0);
    for (int j = 0; j < nv; ++j)
        for (long long i = 0; i < cells; ++i) p.a[(size_t)i * (size_t)nv + (size_t)j] = lds[(size_t)j].probs[(size_t)i];
    for (long long i = 0; i < cells; ++i) p.b[(size_t)i] = b.probs[(size_t)i];
    for (int j = 0; j < nv; ++j) p.a[(size_t)cells * (size_t)nv + (size_t)j] = 1.0;
    p.b[(size_t)cells] = 1.0;

    LpResult r = lp_solve(p);
    MembershipResult out;
    if (r.status == LpStatus::Optimal) {
        out.local = true;
        out.weights = std::move(r.x);
        return out;
    }
    if (r.status != LpStatus::Infeasible) throw SolverError("membership LP ended without a verdict");

    out.local = false;
    out.witness = r.farkas;  // one coefficient per cell, then the constant
    double fb = 0.0;
    for (long long i = 0; i < cells; ++i) fb += out.witness[(size_t)i] * b.probs[(size_t)i];
    fb += out.witness[(size_t)cells];
    double fmax = -1e300;
    for (auto& ld : lds) {
        double fv = 0.0;
        for (long long i = 0; i < cells; ++i) fv += out.witness[(size_t)i] * ld.probs[(size_t)i];
        fv += out.witness[(size_t)cells];
        fmax = std::max(fmax, fv);
    }
    out.witness_margin = fb - fmax;
    return out;
}

std::optional<std::array<int, 3>> violated_inequality(const Behaviour& b) {
    std::optional<std::array<int, 3>> found;
    for (int f = 0; f < 8; ++f) {
        int al = (f >> 2) & 1, be = (f >> 1) & 1, ga = f & 1;
        if (chsh_value(b, al, be, ga) > 2.0 + 1e-10) {
            if (found) throw SolverError("more than one functional above the local bound");
            found = std::array<int, 3>{al, be, ga};
        }
    }
    return found;
}

std::vector<int> facet_ld_codes(int alpha, int beta, int gamma) {
    std::vector<int> codes;
    for (int code = 0; code < 16; ++code) {
        Behaviour ld = ld_box((code >> 3) & 1, (code >> 2) & 1, (code >> 1) & 1, code & 1);
        if (std::abs(chsh_value(ld, alpha, beta, gamma) - 2.0) < 1e-12) codes.push_back(code);
    }
    return codes;
}

AttackDecomposition decompose_nonlocal(const Behaviour& b) {
    if (!(b.scenario == scenario_222()))
        throw ValidationError("decompose_nonlocal requires a (2,2,2) behaviour");
    auto ns = no_signalling_check(b);
    if (!ns.ok) throw ValidationError("decompose_nonlocal requires a no-signalling behaviour");
    auto viol = violated_inequality(b);
    if (!viol)
        throw ValidationError("behaviour lies on the local side; use local_membership instead");
    const auto [al, be, ga] = *viol;

    Behaviour pr = pr_box(al, be, ga);
    std::vector<int> codes = facet_ld_codes(al, be, ga);
    std::vector<Behaviour> verts;
    verts.push_back(pr);
    for (int code : codes)
        verts.push_back(ld_box((code >> 3) & 1, (code >> 2) & 1, (code >> 1) & 1, code & 1));

    // Barycentric weights: least squares over the 16 coordinates plus the
    // affine normalization row.  The vertex family is affinely independent, so
    // an interior point of the simplex has exactly one representation and the
    // residual must vanish.
    Eigen::MatrixXd M(17, 9);
    Eigen::VectorXd rhs(17);
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 9; ++j) M(i, j) = verts[(size_t)j].probs[(size_t)i];
        rhs(i) = b.probs[(size_t)i];
    }
    for (int j = 0; j < 9; ++j) M(16, j) = 1.0;
    rhs(16) = 1.0;
    Eigen::VectorXd w = M.colPivHouseholderQr().solve(rhs);
    double residual = (M * w - rhs).norm();
    if (residual > 1e-9)
        throw SolverError("barycentric solve residual too large; input not in the simplex");

    AttackDecomposition out;
    out.pr = *viol;
    double sum = 0.0;
    for (int j = 0; j < 9; ++j) {
        if (w(j) < -1e-9) throw SolverError("negative barycentric weight; input not in the simplex");
        if (w(j) < 0) w(j) = 0.0;
        sum += w(j);
    }
    for (int j = 0; j < 9; ++j) w(j) /= sum;
    out.lambda_pr = w(0);
    for (int j = 0; j < 8; ++j) {
        int code = codes[(size_t)j];
        out.ld_weights.emplace_back(
            ld_label((code >> 3) & 1, (code >> 2) & 1, (code >> 1) & 1, code & 1), w(j + 1));
    }
    out.entropy_cost = out.lambda_pr;

    double err = 0.0;
    for (int i = 0; i < 16; ++i) {
        double v = 0.0;
        for (int j = 0; j < 9; ++j) v += w(j) * verts[(size_t)j].probs[(size_t)i];
        err = std::max(err, std::abs(v - b.probs[(size_t)i]));
    }
    out.reconstruction_error = err;
    return out;
}

double nonlocality_strength(const Behaviour& b) {
    if (!(b.scenario == scenario_222()))
        throw ValidationError("nonlocality_strength requires a (2,2,2) behaviour");
    const std::vector<Behaviour> lds = ld_enumerate(b.scenario);
    const int nv = (int)lds.size();
    const int cells = 16;

    // minimize sum of |b - L q| via split variables: for each cell,
    // (L q)_i + tplus_i - tminus_i = b_i, plus convexity of q.
    LpProblem p;
    p.rows = cells + 1;
    p.cols = nv + 2 * cells;
    p.a.assign((size_t)p.rows * (size_t)p.cols, 0.0);
    p.b.assign((size_t)p.rows, 0.0);
    p.c.assign((size_t)p.cols, 0.0);
    auto A = [&](int r, int c) -> double& { return p.a[(size_t)r * (size_t)p.cols + (size_t)c]; };
    for (int i = 0; i < cells; ++i) {
        for (int j = 0; j < nv; ++j) A(i, j) = lds[(size_t)j].probs[(size_t)i];
        A(i, nv + i) = 1.0;
        A(i, nv + cells + i) = -1.0;
        p.b[(size_t)i] = b.probs[(size_t)i];
    }
    for (int j = 0; j < nv; ++j) A(cells, j) = 1.0;
    p.b[(size_t)cells] = 1.0;
    // objective (1/(2 * #settings)) * sum |diff| with uniform settings over 4 pairs
    for (int i = 0; i < 2 * cells; ++i) p.c[(size_t)(nv + i)] = 1.0 / 8.0;

    LpResult r = lp_solve(p);
    if (r.status != LpStatus::Optimal) throw SolverError("strength LP did not reach an optimum");
    return r.objective;
}

}  // namespace pefcert
