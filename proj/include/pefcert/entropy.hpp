#pragma once
#include "pefcert/behaviour.hpp"

namespace pefcert {

enum class Conditioning { Settings, SettingsAndE };

// Conditional Shannon entropy of the outcomes, in bits: H(C|Z) or H(C|Z,E).
double cond_shannon(const JointDistribution& d, Conditioning mode);

// Average conditional min-entropy -log2 sum_{ze} max_c p(c|ze) p(ze) and the
// worst-case variant -log2 max_{c,z,e} p(c|ze), both in bits.
double minentropy_avg(const JointDistribution& d);
double minentropy_worst(const JointDistribution& d);

// A single-trial adversary strategy repeated independently over n trials.
// Each e value selects a no-signalling branch behaviour with its own weight.
struct AttackModel {
    JointDistribution single_trial;
    long long trial_count = 1;
};

// Validates branch structure: every branch passes the no-signalling check,
// and for (2,2,2) the side information takes at most 9 values.
AttackModel make_attack_model(JointDistribution single_trial, long long trial_count);

// Error budget split for finite-statistics entropy accumulation.
struct AepParams {
    double eps_a = 0.0;
    double eps_s = 0.0;
    double delta = 0.0;
};

AepParams make_aep_params(double eps_a, double eps_s, double delta);

// Certified bits per trial against the attack; equals minentropy_avg of the
// n-fold product divided by n, for every n.
double iid_minentropy_rate(const AttackModel& a);

// Branch decomposition of the target that minimizes the conditional Shannon
// entropy: one nonlocal extremal box plus deterministic boxes when the target
// is nonlocal, deterministic boxes alone when it is local.
AttackModel optimal_iid_attack(const Behaviour& target, const SettingsDistribution& s);

// Conditional Shannon entropy H(C|Z,E) of the optimal attack.
double hmin(const Behaviour& target, const SettingsDistribution& s);

struct SmoothBounds {
    double lower = 0.0;  // worst-case min-entropy of d
    double upper = 0.0;  // truncated worst-case at eps_prime plus log2(1/eps_prime)
};

// Envelope around minentropy_avg: lower <= avg <= upper, with the upper side
// built from the eps_prime-truncation of d (blocks whose peak conditional
// probability exceeds 2^-avg / eps_prime are dropped and the rest rescaled).
SmoothBounds smooth_bound_relation(const JointDistribution& d, double eps, double eps_prime);

}  // namespace pefcert
