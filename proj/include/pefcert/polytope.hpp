#pragma once
#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pefcert/behaviour.hpp"

namespace pefcert {

// Label helpers for extremal (2,2,2) boxes: "PR:abc" and "LD:abcd" encode the
// defining parameter bits of pr_box / ld_box.
std::string pr_label(int alpha, int beta, int gamma);
std::string ld_label(int alpha, int beta, int gamma, int delta);

struct MembershipResult {
    bool local = false;
    // when local: weights over ld_enumerate(scenario) order, reconstructing
    // the input within 1e-8
    std::vector<double> weights;
    // when nonlocal: affine functional (one coefficient per cell plus a
    // constant) with f(v) <= 0 on every deterministic box and f(input) > 0,
    // scaled to unit max-norm
    std::vector<double> witness;
    double witness_margin = 0.0;  // f(input) - max over boxes of f(box)
};

// Local-polytope membership by feasibility LP over the deterministic boxes.
MembershipResult local_membership(const Behaviour& b);

// The unique correlation functional exceeding the local bound, if any.
std::optional<std::array<int, 3>> violated_inequality(const Behaviour& b);

// The eight deterministic boxes lying on the B^{alpha,beta,gamma} = 2 facet,
// as 4-bit parameter codes (alpha<<3 | beta<<2 | gamma<<1 | delta), ascending.
std::vector<int> facet_ld_codes(int alpha, int beta, int gamma);

struct AttackDecomposition {
    std::optional<std::array<int, 3>> pr;  // violated functional / box id; nullopt if none
    double lambda_pr = 0.0;
    std::vector<std::pair<std::string, double>> ld_weights;  // label -> weight
    double entropy_cost = 0.0;           // bits: lambda_pr * 1
    double reconstruction_error = 0.0;   // max abs entrywise deviation
};

// Expresses a violating no-signalling behaviour as one extremal nonlocal box
// plus eight deterministic boxes (barycentric solve over the 9 affinely
// independent vertices of the matching simplex).
AttackDecomposition decompose_nonlocal(const Behaviour& b);

// Scaled total-variation distance to the local polytope under uniform
// settings, computed as an LP; (chsh - 2)/8 for standard violators.
double nonlocality_strength(const Behaviour& b);

}  // namespace pefcert
