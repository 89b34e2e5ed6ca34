#pragma once
#include <array>
#include <vector>

#include "pefcert/behaviour.hpp"

namespace pefcert {

// Probability estimation factor: positive values over the (settings, outcomes)
// cells in canonical order, with power beta > 0.  Valid against a model when
// E_sigma[F sigma(C|Z)^beta] <= 1 at every extremal point of the model.
struct Pef {
    std::vector<double> values;
    double beta = 0.0;
};

Pef make_pef(std::vector<double> values, double beta);

// The 24 extremal joints of the (2,2,2) no-signalling model under settings s:
// the 8 nonlocal extremal boxes (codes 000..111) followed by the 16
// deterministic boxes in enumeration order.
std::vector<JointDistribution> ns_extremals_222(const SettingsDistribution& s);

struct PefValidity {
    bool valid = false;
    double worst_constraint = 0.0;
};

PefValidity is_valid_pef(const Pef& f, const std::vector<JointDistribution>& extremals);

// Same check on a raw value vector; admits zero entries, which make_pef
// rejects (used by reports that probe functions lying outside the type).
PefValidity pef_constraint_report(const std::vector<double>& values, double beta,
                                  const std::vector<JointDistribution>& extremals);

struct PefOptConfig {
    double beta = 1.0;
    JointDistribution target;   // distribution the rate is evaluated against
    long long n = 1;            // trials, for the net rate
    double epsilon = 0.5;       // error bound, for the net rate
    double f_min = 1e-12;       // positivity floor on the values
};

struct PefOptResult {
    Pef pef;
    double objective = 0.0;  // E_target[log2 F]
    double rate = 0.0;       // objective / beta
    double net_rate = 0.0;   // rate + log2(epsilon) / (n beta)
    bool converged = false;
    double worst_constraint = 0.0;
    double kkt_residual = 0.0;
};

// Maximizes E_target[log2 F] over valid PEFs of power cfg.beta with values at
// least cfg.f_min.  Non-convergence is reported in the result, which then
// still carries the best iterate found.
PefOptResult optimize_pef(const PefOptConfig& cfg, const std::vector<JointDistribution>& extremals);

// E_d[log2 F] / beta, in bits per trial.
double logprob_rate(const Pef& f, const JointDistribution& d);

// logprob_rate + log2(epsilon) / (n beta).
double net_logprob_rate(const Pef& f, const JointDistribution& d, long long n, double epsilon);

// K over cells with E_sigma[K] <= E_sigma[-log2 sigma(C|Z)] at every extremal.
struct EntropyEstimator {
    std::vector<double> values;
};

struct EstimatorValidity {
    bool valid = false;
    double worst_gap = 0.0;  // max over extremals of E[K] - E[-log2 sigma(C|Z)]
};

EstimatorValidity is_valid_estimator(const EntropyEstimator& k,
                                     const std::vector<JointDistribution>& extremals);

// The (2,2,2) uniform-settings estimator: 1 where a xor b = x and y, else -3.
EntropyEstimator k_star();

// Largest-power factor of the form F = 2^{(K - eps) gamma} with beta = gamma
// that stays valid, found by bisection on gamma.  Its log-prob rate at any d
// is E_d[K] - eps, independent of gamma.
Pef pef_from_estimator(const EntropyEstimator& k, double eps,
                       const std::vector<JointDistribution>& extremals);

struct RobustnessReport {
    double bound = 0.0;       // (L - l) * tv with L, l the extremes of log2 F / beta
    double actual_gap = 0.0;  // |rate(rho) - rate(sigma)|
    double tv = 0.0;          // total variation distance between rho and sigma
    double radius = 0.0;      // rate(rho) / (L - l): TV ball keeping the rate positive
};

RobustnessReport robustness(const Pef& f, const JointDistribution& rho,
                            const JointDistribution& sigma);

struct BetaThresholdReport {
    double threshold = 0.0;  // log2(4/3)
    std::array<double, 4> probe_betas{};
    double max_entrywise_diff = 0.0;  // across optimizer outputs at the probes
    bool stable_above = false;
    double counterexample_pr_below = 0.0;  // top extremal-box constraint just below
    double counterexample_worst_at = 0.0;  // worst constraint at the threshold
    std::vector<double> counterexample_ld;  // per-deterministic-box constraint values
    bool flips_at_threshold = false;
};

// Probes the power threshold: optimizer output stability above log2(4/3) and
// the indicator-based counterexample that is infeasible just below it.
BetaThresholdReport beta_threshold_report(const SettingsDistribution& s);

}  // namespace pefcert
