#pragma once

#include <cstdint>
#include <vector>

#include "pefcert/behaviour.hpp"
#include "pefcert/entropy.hpp"
#include "pefcert/pef.hpp"

namespace pefcert {

// Deterministic counter-based generator (splitmix64 finalizer): one 64-bit
// seed, one independent uniform draw in [0,1) per counter value. Trial i of a
// run consumes counters 2i and 2i+1, so simulation can be sharded by trial
// index without changing the stream.
double counter_uniform(std::uint64_t seed, std::uint64_t counter);

struct TrialRecord {
    long long index = 0;        // 1-based, contiguous
    std::vector<int> settings;  // one symbol per party
    std::vector<int> outcomes;  // one symbol per party
    int e = -1;                 // side-information label index, -1 when absent
};

// n independent draws from d. When d carries more than one side-information
// label, each record stores the sampled label index.
std::vector<TrialRecord> simulate(const JointDistribution& d, long long n, std::uint64_t seed);

// Sum of log2 F(c_i, z_i) over the records, compensated summation.
double accumulate(const Pef& f, const Scenario& s, const std::vector<TrialRecord>& trials);

struct Certificate {
    long long n = 0;
    double beta = 0.0;
    double epsilon = 0.0;  // tail error bound, in (0,1)
    double log2_p = 0.0;   // success threshold in log2 domain (p in (0,1])
    double kappa = 1.0;    // completeness bound, in (0,1]
    double log2_pef_product = 0.0;
    bool success = false;
    // Certified smooth min-entropy in bits. Zero whenever success is false:
    // an aborted run certifies nothing.
    double bound_kappa_smooth = 0.0;  // log2(kappa) - log2(p), smoothing epsilon/kappa
    double bound_eps_smooth = 0.0;    // (1+1/beta)log2(kappa) - log2(p), smoothing epsilon
    double smoothing = 0.0;           // epsilon/kappa
};

// Evaluates the success event sum(log2 F_i)/beta + log2(epsilon)/beta >=
// -log2(p) and fills the entropy bounds.
Certificate certify(const Pef& f, const Scenario& s, const std::vector<TrialRecord>& trials,
                    double epsilon, double log2_p, double kappa);

// Success threshold anticipated from the model: log2(p) such that the run
// passes whenever the accumulated product reaches its 5th percentile under n
// IID draws from d (normal approximation).
double choose_p(const Pef& f, const JointDistribution& d, long long n, double epsilon);

struct ExactTailReport {
    bool pass = false;
    double max_excess = 0.0;     // max over the grid of P(miss) - epsilon
    double worst_epsilon = 0.0;  // grid point attaining max_excess
    double product_moment = 0.0;  // exact E[prod F * prod cond^beta]
};

// Exhaustively enumerates all n-trial sequences under the IID product of d
// and computes, for each epsilon in the grid, the exact probability that the
// running conditional probability beats the certification threshold
// (epsilon * prod F)^(-1/beta). Requires d without side information and a
// small enough support.
ExactTailReport exact_tail_check(const Pef& f, const JointDistribution& d, int n,
                                 const std::vector<double>& eps_grid);

struct ModelCheckReport {
    // sup |P(z_i | e_i, history) - s(z_i)| over the explicit n-fold product
    double settings_residual = 0.0;
    // sup |P(c_i | z_i, e_i, history) - branch_e(c_i|z_i)|
    double behaviour_residual = 0.0;
};

// Builds the explicit n-fold product of the attack's single-trial joint
// (n <= 3) and verifies the chained trial-model conditions by enumeration.
ModelCheckReport model_check(const AttackModel& a, int n);

struct AttackTrace {
    std::vector<TrialRecord> trials;
    std::vector<double> e_frequency;  // realized fraction per label
    double marginal_chsh = 0.0;       // CHSH value of the pooled empirical behaviour
    double max_component_deviation = 0.0;  // worst empirical-vs-component conditional cell
};

// Samples the attack (label first, then settings and outcomes) and reports
// the realized statistics alongside the records.
AttackTrace attack_trace(const AttackModel& a, long long n, std::uint64_t seed);

}  // namespace pefcert
