#pragma once
#include <string>
#include <vector>

namespace pefcert {

// An (n,m,k) Bell scenario: n parties, m settings per party, k outcomes per setting.
struct Scenario {
    int parties = 2;
    int settings_per_party = 2;
    int outcomes_per_setting = 2;

    long long settings_count() const;   // m^n settings tuples
    long long outcomes_count() const;   // k^n outcomes tuples
    long long cell_count() const;       // (k*m)^n = settings_count * outcomes_count

    bool operator==(const Scenario& o) const {
        return parties == o.parties && settings_per_party == o.settings_per_party &&
               outcomes_per_setting == o.outcomes_per_setting;
    }
};

// Canonical coordinate order: settings tuples enumerated lexicographically with
// party 0 as the most significant digit (base m), and within each settings block
// outcomes tuples enumerated the same way (base k).  For (2,2,2) this is the
// block order xy = 00,01,10,11 with ab = 00,01,10,11 inside each block.
long long settings_index(const Scenario& sc, const std::vector<int>& z);
long long outcomes_index(const Scenario& sc, const std::vector<int>& c);
std::vector<int> settings_tuple(const Scenario& sc, long long z_index);
std::vector<int> outcomes_tuple(const Scenario& sc, long long c_index);

// Conditional outcome probabilities mu(c|z), stored flat: probs[z*K + c]
// with K = outcomes_count.
struct Behaviour {
    Scenario scenario;
    std::vector<double> probs;

    double at(long long z, long long c) const {
        return probs[z * scenario.outcomes_count() + c];
    }
};

// Distribution over settings tuples; all entries strictly positive.
struct SettingsDistribution {
    std::vector<double> probs;
};

// Distribution over (outcomes, settings) cells, optionally extended by a
// side-information label e.  Storage: probs[(e*Z + z)*K + c]; e_support empty
// means there is no e coordinate (a single implicit e).
struct JointDistribution {
    Scenario scenario;
    std::vector<double> probs;
    std::vector<std::string> e_support;

    long long e_count() const { return e_support.empty() ? 1 : (long long)e_support.size(); }
    double at(long long e, long long z, long long c) const {
        return probs[(e * scenario.settings_count() + z) * scenario.outcomes_count() + c];
    }
    // Probability of the settings(+e) event, i.e. the marginal over outcomes.
    double settings_mass(long long e, long long z) const;
    // Conditional probability of outcomes given settings (and e); 0 when the
    // conditioning event has probability 0.
    double conditional(long long e, long long z, long long c) const;
};

// Validating constructors.  All throw ValidationError on violated invariants.
Behaviour make_behaviour(const Scenario& sc, std::vector<double> probs);
SettingsDistribution make_settings(const Scenario& sc, std::vector<double> probs);
SettingsDistribution uniform_settings(const Scenario& sc);
JointDistribution make_joint_distribution(const Scenario& sc, std::vector<double> probs,
                                          std::vector<std::string> e_support = {});

// Product joint mu(c,z) = mu(c|z) * s(z).
JointDistribution joint(const Behaviour& b, const SettingsDistribution& s);

// Inverse of joint(): recover the behaviour and settings marginal (requires
// every settings tuple to have positive mass and no e coordinate).
struct BehaviourAndSettings {
    Behaviour behaviour;
    SettingsDistribution settings;
};
BehaviourAndSettings split_joint(const JointDistribution& d);

struct NoSignallingReport {
    bool ok = false;
    double max_violation = 0.0;
};

// Checks that each party's outcome marginals are independent of the other
// parties' settings, within tolerance 1e-9.
NoSignallingReport no_signalling_check(const Behaviour& b);

}  // namespace pefcert
