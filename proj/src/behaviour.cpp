#include "pefcert/behaviour.hpp"

#include <cmath>
#include <cstdlib>

#include "pefcert/errors.hpp"

namespace pefcert {

namespace {

constexpr double kNormTol = 1e-9;

long long ipow(long long base, int exp) {
    long long r = 1;
    for (int i = 0; i < exp; ++i) {
        if (r > (1LL << 40)) throw ResourceError("scenario index space too large");
        r *= base;
    }
    return r;
}

}  // namespace

long long Scenario::settings_count() const { return ipow(settings_per_party, parties); }
long long Scenario::outcomes_count() const { return ipow(outcomes_per_setting, parties); }
long long Scenario::cell_count() const { return settings_count() * outcomes_count(); }

long long settings_index(const Scenario& sc, const std::vector<int>& z) {
    long long idx = 0;
    for (int i = 0; i < sc.parties; ++i) idx = idx * sc.settings_per_party + z[i];
    return idx;
}

long long outcomes_index(const Scenario& sc, const std::vector<int>& c) {
    long long idx = 0;
    for (int i = 0; i < sc.parties; ++i) idx = idx * sc.outcomes_per_setting + c[i];
    return idx;
}

std::vector<int> settings_tuple(const Scenario& sc, long long z_index) {
    std::vector<int> z(sc.parties);
    for (int i = sc.parties - 1; i >= 0; --i) {
        z[i] = (int)(z_index % sc.settings_per_party);
        z_index /= sc.settings_per_party;
    }
    return z;
}

std::vector<int> outcomes_tuple(const Scenario& sc, long long c_index) {
    std::vector<int> c(sc.parties);
    for (int i = sc.parties - 1; i >= 0; --i) {
        c[i] = (int)(c_index % sc.outcomes_per_setting);
        c_index /= sc.outcomes_per_setting;
    }
    return c;
}

double JointDistribution::settings_mass(long long e, long long z) const {
    const long long K = scenario.outcomes_count();
    double m = 0.0;
    for (long long c = 0; c < K; ++c) m += at(e, z, c);
    return m;
}

double JointDistribution::conditional(long long e, long long z, long long c) const {
    double m = settings_mass(e, z);
    if (m <= 0.0) return 0.0;
    return at(e, z, c) / m;
}

Behaviour make_behaviour(const Scenario& sc, std::vector<double> probs) {
    if (sc.parties < 1 || sc.settings_per_party < 1 || sc.outcomes_per_setting < 1)
        throw ValidationError("scenario dimensions must be >= 1");
    const long long Z = sc.settings_count(), K = sc.outcomes_count();
    if ((long long)probs.size() != Z * K)
        throw ValidationError("behaviour vector length does not match scenario");
    for (double p : probs)
        if (!(p >= -1e-15 && p <= 1.0 + kNormTol) || std::isnan(p))
            throw ValidationError("behaviour entries must lie in [0,1]");
    for (long long z = 0; z < Z; ++z) {
        double s = 0.0;
        for (long long c = 0; c < K; ++c) s += probs[z * K + c];
        if (std::abs(s - 1.0) > kNormTol)
            throw ValidationError("behaviour settings block does not sum to 1");
    }
    return Behaviour{sc, std::move(probs)};
}

SettingsDistribution make_settings(const Scenario& sc, std::vector<double> probs) {
    if ((long long)probs.size() != sc.settings_count())
        throw ValidationError("settings vector length does not match scenario");
    double s = 0.0;
    for (double p : probs) {
        if (!(p > 0.0)) throw ValidationError("settings probabilities must be strictly positive");
        s += p;
    }
    if (std::abs(s - 1.0) > kNormTol) throw ValidationError("settings distribution does not sum to 1");
    return SettingsDistribution{std::move(probs)};
}

SettingsDistribution uniform_settings(const Scenario& sc) {
    const long long Z = sc.settings_count();
    return SettingsDistribution{std::vector<double>((size_t)Z, 1.0 / (double)Z)};
}

JointDistribution make_joint_distribution(const Scenario& sc, std::vector<double> probs,
                                          std::vector<std::string> e_support) {
    const long long cells = sc.cell_count();
    const long long ne = e_support.empty() ? 1 : (long long)e_support.size();
    if ((long long)probs.size() != cells * ne)
        throw ValidationError("joint distribution length does not match scenario/e support");
    double s = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw ValidationError("joint probabilities must be nonnegative");
        s += p;
    }
    if (std::abs(s - 1.0) > kNormTol) throw ValidationError("joint distribution does not sum to 1");
    return JointDistribution{sc, std::move(probs), std::move(e_support)};
}

JointDistribution joint(const Behaviour& b, const SettingsDistribution& s) {
    const Scenario& sc = b.scenario;
    const long long Z = sc.settings_count(), K = sc.outcomes_count();
    if ((long long)s.probs.size() != Z) throw ValidationError("settings shape mismatch");
    std::vector<double> p((size_t)(Z * K));
    for (long long z = 0; z < Z; ++z)
        for (long long c = 0; c < K; ++c) p[(size_t)(z * K + c)] = b.probs[(size_t)(z * K + c)] * s.probs[(size_t)z];
    return JointDistribution{sc, std::move(p), {}};
}

BehaviourAndSettings split_joint(const JointDistribution& d) {
    if (!d.e_support.empty()) throw ValidationError("cannot split a joint with an e coordinate");
    const Scenario& sc = d.scenario;
    const long long Z = sc.settings_count(), K = sc.outcomes_count();
    std::vector<double> sp((size_t)Z), bp((size_t)(Z * K));
    for (long long z = 0; z < Z; ++z) {
        double m = d.settings_mass(0, z);
        if (!(m > 0.0)) throw ValidationError("settings tuple with zero mass; behaviour undefined");
        sp[(size_t)z] = m;
        for (long long c = 0; c < K; ++c) bp[(size_t)(z * K + c)] = d.at(0, z, c) / m;
    }
    return BehaviourAndSettings{make_behaviour(sc, std::move(bp)), make_settings(sc, std::move(sp))};
}

NoSignallingReport no_signalling_check(const Behaviour& b) {
    const Scenario& sc = b.scenario;
    const long long Z = sc.settings_count(), K = sc.outcomes_count();
    const int n = sc.parties, m = sc.settings_per_party, k = sc.outcomes_per_setting;
    double worst = 0.0;
    // For each party, each own (setting, outcome) pair: the marginal must agree
    // across all settings tuples that fix that party's setting.
    for (int party = 0; party < n; ++party) {
        for (int own_x = 0; own_x < m; ++own_x) {
            for (int own_a = 0; own_a < k; ++own_a) {
                double lo = 2.0, hi = -1.0;
                for (long long z = 0; z < Z; ++z) {
                    std::vector<int> zt = settings_tuple(sc, z);
                    if (zt[party] != own_x) continue;
                    double marg = 0.0;
                    for (long long c = 0; c < K; ++c) {
                        std::vector<int> ct = outcomes_tuple(sc, c);
                        if (ct[party] == own_a) marg += b.at(z, c);
                    }
                    lo = std::min(lo, marg);
                    hi = std::max(hi, marg);
                }
                if (hi >= 0.0) worst = std::max(worst, hi - lo);
            }
        }
    }
    return NoSignallingReport{worst <= 1e-9, worst};
}

}  // namespace pefcert
