#pragma once
#include <vector>

#include "pefcert/behaviour.hpp"

namespace pefcert {

inline Scenario scenario_222() { return Scenario{2, 2, 2}; }

// Extremal nonlocal box: entries 1/2 where a XOR b = xy XOR alpha*x XOR beta*y XOR gamma.
Behaviour pr_box(int alpha, int beta, int gamma);

// Deterministic local box: entry 1 where a = alpha*x XOR beta and b = gamma*y XOR delta.
Behaviour ld_box(int alpha, int beta, int gamma, int delta);

// All deterministic local behaviours of a scenario: one outcome function per
// party and setting, k^(n*m) in total, in lexicographic assignment order.
std::vector<Behaviour> ld_enumerate(const Scenario& sc);

// Correlation-function Bell expression
//   B = (-1)^g E00 + (-1)^(b+g) E01 + (-1)^(a+g) E10 + (-1)^(a+b+g+1) E11
// with E_xy = sum_ab (-1)^(a+b) mu(ab|xy).  Local bound 2, no-signalling bound 4.
double chsh_value(const Behaviour& b, int alpha, int beta, int gamma);

// Two-parameter slice of the (2,2,2) no-signalling polytope spanned by the two
// boxes maximizing B^000 and B^111 and the uniform local mixture.
struct SliceCoords {
    double S = 0.0;
    double S_prime = 0.0;
    bool in_ns_diamond() const;  // |S+S'| <= 4 and |S-S'| <= 4
    bool in_quantum_disk() const;  // S^2 + S'^2 <= 8
};

Behaviour slice_behaviour(const SliceCoords& c);
inline Behaviour slice_behaviour(double S, double S_prime) {
    return slice_behaviour(SliceCoords{S, S_prime});
}

// A (2,3,2) box pair with the four underdetermined cells resolved to perfect
// correlation (bit 0) or perfect anti-correlation (bit 1); `mixture` is the
// equal mixture of the two boxes, the object whose nonlocality is tested.
struct BoxPair232 {
    int resolution_bits;  // 4-bit code
    Behaviour first;
    Behaviour second;
    Behaviour mixture;
};

struct SpecialBoxes {
    Behaviour nl_box_223;             // 1/3 where b - a = x*y (mod 3)
    Behaviour nl_box_223_relabelled;  // same box with x<->x' and y<->y'
    std::vector<BoxPair232> nl_boxes_232;  // all 16 resolutions
    Behaviour ghz_mixture_322;        // (1/8)(1 + (-1)^(a+b+c) E_xyz), GHZ correlators
};

SpecialBoxes special_boxes();

}  // namespace pefcert
