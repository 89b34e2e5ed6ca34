#include "pefcert/entropy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "pefcert/boxes.hpp"
#include "pefcert/errors.hpp"
#include "pefcert/polytope.hpp"

namespace pefcert {

namespace {

constexpr double kMarginalTol = 1e-10;
constexpr double kWeightFloor = 1e-12;

// Conditional behaviour of one side-information branch.
Behaviour branch_behaviour(const JointDistribution& d, long long e) {
    const long long Z = d.scenario.settings_count(), K = d.scenario.outcomes_count();
    std::vector<double> p((size_t)(Z * K));
    for (long long z = 0; z < Z; ++z) {
        double mass = d.settings_mass(e, z);
        if (mass <= 0.0)
            throw ValidationError("attack branch assigns zero probability to a settings tuple");
        for (long long c = 0; c < K; ++c) p[(size_t)(z * K + c)] = d.at(e, z, c) / mass;
    }
    return make_behaviour(d.scenario, std::move(p));
}

struct Branch {
    std::string label;
    Behaviour box;
    double weight;
};

// ld_enumerate codes list outcome assignments (a0,a1,b0,b1); translate to the
// (alpha,beta,gamma,delta) box parameters used in labels.
std::string label_from_assignment(int code) {
    int a0 = (code >> 3) & 1, a1 = (code >> 2) & 1, b0 = (code >> 1) & 1, b1 = code & 1;
    return ld_label(a0 ^ a1, a0, b0 ^ b1, b0);
}

std::vector<Branch> local_branches(const Behaviour& target) {
    MembershipResult mem = local_membership(target);
    if (!mem.local) throw SolverError("membership verdict flipped between checks");
    std::vector<int> support;
    for (int i = 0; i < 16; ++i)
        if (mem.weights[(size_t)i] > 1e-10) support.push_back(i);
    if (support.empty()) support.push_back(0);

    // Tighten the LP weights by least squares on the support columns.
    std::vector<Behaviour> lds = ld_enumerate(scenario_222());
    Eigen::MatrixXd A(17, (Eigen::Index)support.size());
    Eigen::VectorXd rhs(17);
    for (int r = 0; r < 16; ++r) {
        rhs(r) = target.probs[(size_t)r];
        for (size_t j = 0; j < support.size(); ++j)
            A(r, (Eigen::Index)j) = lds[(size_t)support[j]].probs[(size_t)r];
    }
    rhs(16) = 1.0;
    for (size_t j = 0; j < support.size(); ++j) A(16, (Eigen::Index)j) = 1.0;
    Eigen::VectorXd w = A.colPivHouseholderQr().solve(rhs);

    std::vector<Branch> out;
    double total = 0.0;
    for (size_t j = 0; j < support.size(); ++j) {
        double v = w((Eigen::Index)j);
        if (v < -1e-9) throw SolverError("negative weight in local decomposition");
        if (v <= kWeightFloor) continue;
        out.push_back(Branch{label_from_assignment(support[j]), lds[(size_t)support[j]], v});
        total += v;
    }
    if (out.empty() || total <= 0.0) throw SolverError("empty local decomposition");
    for (Branch& br : out) br.weight /= total;
    return out;
}

std::vector<Branch> nonlocal_branches(const Behaviour& target) {
    AttackDecomposition d = decompose_nonlocal(target);
    std::vector<Branch> out;
    const auto& f = *d.pr;
    out.push_back(Branch{pr_label(f[0], f[1], f[2]), pr_box(f[0], f[1], f[2]), d.lambda_pr});
    std::vector<int> codes = facet_ld_codes(f[0], f[1], f[2]);
    double total = d.lambda_pr;
    for (size_t j = 0; j < codes.size(); ++j) {
        double v = d.ld_weights[j].second;
        if (v <= kWeightFloor) continue;
        int c = codes[j];
        out.push_back(Branch{d.ld_weights[j].first,
                             ld_box((c >> 3) & 1, (c >> 2) & 1, (c >> 1) & 1, c & 1), v});
        total += v;
    }
    for (Branch& br : out) br.weight /= total;
    return out;
}

}  // namespace

double cond_shannon(const JointDistribution& d, Conditioning mode) {
    const long long E = d.e_count(), Z = d.scenario.settings_count(), K = d.scenario.outcomes_count();
    double h = 0.0;
    if (mode == Conditioning::SettingsAndE) {
        for (long long e = 0; e < E; ++e)
            for (long long z = 0; z < Z; ++z) {
                double mass = d.settings_mass(e, z);
                if (mass <= 0.0) continue;
                for (long long c = 0; c < K; ++c) {
                    double p = d.at(e, z, c);
                    if (p > 0.0) h -= p * std::log2(p / mass);
                }
            }
    } else {
        for (long long z = 0; z < Z; ++z) {
            double mass = 0.0;
            for (long long e = 0; e < E; ++e) mass += d.settings_mass(e, z);
            if (mass <= 0.0) continue;
            for (long long c = 0; c < K; ++c) {
                double p = 0.0;
                for (long long e = 0; e < E; ++e) p += d.at(e, z, c);
                if (p > 0.0) h -= p * std::log2(p / mass);
            }
        }
    }
    return std::max(h, 0.0);
}

double minentropy_avg(const JointDistribution& d) {
    const long long E = d.e_count(), Z = d.scenario.settings_count(), K = d.scenario.outcomes_count();
    double sum = 0.0;
    for (long long e = 0; e < E; ++e)
        for (long long z = 0; z < Z; ++z) {
            double peak = 0.0;
            for (long long c = 0; c < K; ++c) peak = std::max(peak, d.at(e, z, c));
            sum += peak;
        }
    return -std::log2(sum);
}

double minentropy_worst(const JointDistribution& d) {
    const long long E = d.e_count(), Z = d.scenario.settings_count(), K = d.scenario.outcomes_count();
    double peak = 0.0;
    for (long long e = 0; e < E; ++e)
        for (long long z = 0; z < Z; ++z) {
            double mass = d.settings_mass(e, z);
            if (mass <= 0.0) continue;
            for (long long c = 0; c < K; ++c) peak = std::max(peak, d.at(e, z, c) / mass);
        }
    return -std::log2(peak);
}

AttackModel make_attack_model(JointDistribution single_trial, long long trial_count) {
    if (trial_count < 1) throw ValidationError("trial_count must be positive");
    const long long E = single_trial.e_count();
    if (single_trial.scenario == scenario_222() && E > 9)
        throw ValidationError("side information support exceeds 9 branches");
    for (long long e = 0; e < E; ++e) {
        double weight = 0.0;
        for (long long z = 0; z < single_trial.scenario.settings_count(); ++z)
            weight += single_trial.settings_mass(e, z);
        if (weight <= 0.0) continue;
        NoSignallingReport rep = no_signalling_check(branch_behaviour(single_trial, e));
        if (!rep.ok) throw ValidationError("attack branch is signalling");
    }
    return AttackModel{std::move(single_trial), trial_count};
}

AepParams make_aep_params(double eps_a, double eps_s, double delta) {
    if (!(eps_a > 0.0 && eps_a < 1.0)) throw ValidationError("eps_a must lie in (0,1)");
    if (!(eps_s >= 0.0)) throw ValidationError("eps_s must be nonnegative");
    if (!(delta > 0.0)) throw ValidationError("delta must be positive");
    if (!(eps_a + 2.0 * eps_s < 1.0)) throw ValidationError("eps_a + 2 eps_s must be below 1");
    return AepParams{eps_a, eps_s, delta};
}

double iid_minentropy_rate(const AttackModel& a) { return minentropy_avg(a.single_trial); }

AttackModel optimal_iid_attack(const Behaviour& target, const SettingsDistribution& s) {
    if (!(target.scenario == scenario_222()))
        throw ValidationError("optimal_iid_attack requires the (2,2,2) scenario");
    NoSignallingReport rep = no_signalling_check(target);
    if (!rep.ok) throw ValidationError("optimal_iid_attack target is signalling");
    const long long Z = target.scenario.settings_count(), K = target.scenario.outcomes_count();
    if ((long long)s.probs.size() != Z)
        throw ValidationError("settings distribution size mismatch");

    std::vector<Branch> branches =
        violated_inequality(target) ? nonlocal_branches(target) : local_branches(target);

    std::vector<double> probs((size_t)((long long)branches.size() * Z * K), 0.0);
    std::vector<std::string> labels;
    for (size_t e = 0; e < branches.size(); ++e) {
        labels.push_back(branches[e].label);
        for (long long z = 0; z < Z; ++z)
            for (long long c = 0; c < K; ++c)
                probs[(size_t)(((long long)e * Z + z) * K + c)] =
                    branches[e].weight * s.probs[(size_t)z] * branches[e].box.at(z, c);
    }
    AttackModel am =
        make_attack_model(make_joint_distribution(target.scenario, std::move(probs), labels), 1);

    JointDistribution want = joint(target, s);
    for (long long z = 0; z < Z; ++z)
        for (long long c = 0; c < K; ++c) {
            double got = 0.0;
            for (long long e = 0; e < am.single_trial.e_count(); ++e) got += am.single_trial.at(e, z, c);
            if (std::abs(got - want.at(0, z, c)) > kMarginalTol)
                throw SolverError("attack marginal does not reproduce the target");
        }
    return am;
}

double hmin(const Behaviour& target, const SettingsDistribution& s) {
    return cond_shannon(optimal_iid_attack(target, s).single_trial, Conditioning::SettingsAndE);
}

SmoothBounds smooth_bound_relation(const JointDistribution& d, double eps, double eps_prime) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw ValidationError("eps must lie in [0,1]");
    if (!(eps_prime > 0.0 && eps_prime < 1.0)) throw ValidationError("eps_prime must lie in (0,1)");
    const long long E = d.e_count(), Z = d.scenario.settings_count(), K = d.scenario.outcomes_count();

    double sum = 0.0;  // sum_{ze} max_c p(c,z,e) = 2^-avg
    for (long long e = 0; e < E; ++e)
        for (long long z = 0; z < Z; ++z) {
            double peak = 0.0;
            for (long long c = 0; c < K; ++c) peak = std::max(peak, d.at(e, z, c));
            sum += peak;
        }
    const double threshold = sum / eps_prime;

    // Drop blocks whose peak conditional exceeds the threshold; by Markov the
    // dropped settings mass is at most eps_prime, so the kept part rescaled is
    // an eps_prime-close witness whose conditionals are unchanged.
    double kept_peak = 0.0, kept_mass = 0.0;
    for (long long e = 0; e < E; ++e)
        for (long long z = 0; z < Z; ++z) {
            double mass = d.settings_mass(e, z);
            if (mass <= 0.0) continue;
            double peak = 0.0;
            for (long long c = 0; c < K; ++c) peak = std::max(peak, d.at(e, z, c) / mass);
            if (peak <= threshold) {
                kept_peak = std::max(kept_peak, peak);
                kept_mass += mass;
            }
        }
    if (kept_mass <= 0.0) throw SolverError("truncation removed all settings mass");

    SmoothBounds out;
    out.lower = minentropy_worst(d);
    out.upper = -std::log2(kept_peak) + std::log2(1.0 / eps_prime);
    double avg = -std::log2(sum);
    if (out.lower > avg + 1e-9 || avg > out.upper + 1e-9)
        throw SolverError("min-entropy envelope check failed");
    return out;
}

}  // namespace pefcert
