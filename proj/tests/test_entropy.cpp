#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "pefcert/behaviour.hpp"
#include "pefcert/boxes.hpp"
#include "pefcert/entropy.hpp"
#include "pefcert/errors.hpp"

using namespace pefcert;

namespace {

// ---- Oracles ----------------------------------------------------------

// Plain Shannon entropy of a flat probability vector, in bits.
double oracle_shannon(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log2(v);
    return h;
}

// H(C|Z,E) or H(C|Z) computed as a difference of unconditional entropies.
double oracle_cond(const JointDistribution& d, bool with_e) {
    const long long E = d.e_count(), Z = d.scenario.settings_count(), K = d.scenario.outcomes_count();
    if (with_e) {
        std::vector<double> cond;
        for (long long e = 0; e < E; ++e)
            for (long long z = 0; z < Z; ++z) cond.push_back(d.settings_mass(e, z));
        return oracle_shannon(d.probs) - oracle_shannon(cond);
    }
    std::vector<double> all, cond;
    for (long long z = 0; z < Z; ++z) {
        double mass = 0.0;
        for (long long c = 0; c < K; ++c) {
            double p = 0.0;
            for (long long e = 0; e < E; ++e) p += d.at(e, z, c);
            all.push_back(p);
            mass += p;
        }
        cond.push_back(mass);
    }
    return oracle_shannon(all) - oracle_shannon(cond);
}

// 0.5 PR + 0.5 LD with the branch revealed: -log2(0.75).
constexpr double kMixAvg = 0.41503749927884381;

Behaviour random_conditional_table(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::vector<double> p(16);
    for (int z = 0; z < 4; ++z) {
        double s = 0.0;
        for (int c = 0; c < 4; ++c) {
            p[(size_t)(4 * z + c)] = u(rng);
            s += p[(size_t)(4 * z + c)];
        }
        for (int c = 0; c < 4; ++c) p[(size_t)(4 * z + c)] /= s;
    }
    return make_behaviour(scenario_222(), p);
}

SettingsDistribution random_settings(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> p(4);
    double s = 0.0;
    for (auto& v : p) {
        v = u(rng);
        s += v;
    }
    for (auto& v : p) v /= s;
    return make_settings(scenario_222(), p);
}

JointDistribution random_e_joint(std::mt19937_64& rng, int e_count) {
    std::uniform_real_distribution<double> u(0.001, 1.0);
    std::vector<double> p((size_t)(e_count * 16));
    double s = 0.0;
    for (auto& v : p) {
        v = u(rng);
        s += v;
    }
    for (auto& v : p) v /= s;
    std::vector<std::string> labels;
    for (int e = 0; e < e_count; ++e) labels.push_back("E" + std::to_string(e));
    return make_joint_distribution(scenario_222(), p, labels);
}

// Random point in the no-signalling polytope: mixture of the 24 extremals.
Behaviour random_ns_behaviour(std::mt19937_64& rng) {
    std::vector<Behaviour> ext;
    for (int f = 0; f < 8; ++f) ext.push_back(pr_box((f >> 2) & 1, (f >> 1) & 1, f & 1));
    for (const Behaviour& b : ld_enumerate(scenario_222())) ext.push_back(b);
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> w(24);
    double s = 0.0;
    for (auto& v : w) {
        v = ex(rng);
        s += v;
    }
    std::vector<double> p(16, 0.0);
    for (int j = 0; j < 24; ++j)
        for (int i = 0; i < 16; ++i) p[(size_t)i] += (w[(size_t)j] / s) * ext[(size_t)j].probs[(size_t)i];
    return make_behaviour(scenario_222(), p);
}

// Random interior point of the standard one-extremal simplex, all weights at
// least min_w.
Behaviour random_simplex_point(std::mt19937_64& rng, double min_w, double* chsh_out) {
    static const std::array<int, 8> kFacetCodes = {0, 2, 5, 7, 8, 11, 13, 14};
    std::exponential_distribution<double> ex(1.0);
    for (;;) {
        std::array<double, 9> w{};
        double s = 0.0;
        for (auto& v : w) {
            v = ex(rng);
            s += v;
        }
        double lo = 1.0;
        for (auto& v : w) {
            v /= s;
            lo = std::min(lo, v);
        }
        if (lo < min_w) continue;
        std::vector<double> p(16, 0.0);
        Behaviour pr = pr_box(0, 0, 0);
        for (int i = 0; i < 16; ++i) p[(size_t)i] = w[0] * pr.probs[(size_t)i];
        for (int j = 0; j < 8; ++j) {
            int c = kFacetCodes[(size_t)j];
            Behaviour ld = ld_box((c >> 3) & 1, (c >> 2) & 1, (c >> 1) & 1, c & 1);
            for (int i = 0; i < 16; ++i) p[(size_t)i] += w[(size_t)(j + 1)] * ld.probs[(size_t)i];
        }
        if (chsh_out) *chsh_out = 2.0 + 2.0 * w[0];
        return make_behaviour(scenario_222(), p);
    }
}

JointDistribution pr_joint() { return joint(pr_box(0, 0, 0), uniform_settings(scenario_222())); }

JointDistribution ld_joint() { return joint(ld_box(0, 0, 0, 0), uniform_settings(scenario_222())); }

// 0.5 PR + 0.5 LD with e revealing the branch, uniform settings.
JointDistribution revealed_mixture() {
    Behaviour pr = pr_box(0, 0, 0), ld = ld_box(0, 0, 0, 0);
    std::vector<double> p(32);
    for (int i = 0; i < 16; ++i) {
        p[(size_t)i] = 0.5 * 0.25 * pr.probs[(size_t)i];
        p[(size_t)(16 + i)] = 0.5 * 0.25 * ld.probs[(size_t)i];
    }
    return make_joint_distribution(scenario_222(), p, {"PR:000", "LD:0000"});
}

}  // namespace

TEST_CASE("cond_shannon on landmark distributions") {
    CHECK(cond_shannon(pr_joint(), Conditioning::Settings) == doctest::Approx(1.0).epsilon(1e-12));
    for (const Behaviour& ld : ld_enumerate(scenario_222()))
        CHECK(cond_shannon(joint(ld, uniform_settings(scenario_222())), Conditioning::Settings) == 0.0);
    Behaviour flat = make_behaviour(scenario_222(), std::vector<double>(16, 0.25));
    CHECK(cond_shannon(joint(flat, uniform_settings(scenario_222())), Conditioning::Settings) ==
          doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("cond_shannon agrees with the entropy-difference oracle") {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 30; ++t) {
        JointDistribution d = joint(random_conditional_table(rng), random_settings(rng));
        CHECK(std::abs(cond_shannon(d, Conditioning::Settings) - oracle_cond(d, false)) < 1e-12);
        CHECK(std::abs(cond_shannon(d, Conditioning::SettingsAndE) - oracle_cond(d, true)) < 1e-12);
    }
    for (int t = 0; t < 30; ++t) {
        JointDistribution d = random_e_joint(rng, 3);
        CHECK(std::abs(cond_shannon(d, Conditioning::Settings) - oracle_cond(d, false)) < 1e-12);
        CHECK(std::abs(cond_shannon(d, Conditioning::SettingsAndE) - oracle_cond(d, true)) < 1e-12);
        // extra conditioning cannot increase entropy
        CHECK(cond_shannon(d, Conditioning::SettingsAndE) <=
              cond_shannon(d, Conditioning::Settings) + 1e-12);
    }
}

TEST_CASE("conditional entropy is concave under shared settings") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        Behaviour b1 = random_conditional_table(rng), b2 = random_conditional_table(rng);
        SettingsDistribution s = random_settings(rng);
        double lam = u(rng);
        std::vector<double> mixed(16);
        for (int i = 0; i < 16; ++i)
            mixed[(size_t)i] = lam * b1.probs[(size_t)i] + (1 - lam) * b2.probs[(size_t)i];
        double hm = cond_shannon(joint(make_behaviour(scenario_222(), mixed), s), Conditioning::Settings);
        double h1 = cond_shannon(joint(b1, s), Conditioning::Settings);
        double h2 = cond_shannon(joint(b2, s), Conditioning::Settings);
        CHECK(hm >= lam * h1 + (1 - lam) * h2 - 1e-10);
    }
}

TEST_CASE("min-entropy on landmark distributions") {
    CHECK(minentropy_avg(pr_joint()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(minentropy_worst(pr_joint()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(minentropy_avg(ld_joint()) == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(minentropy_worst(ld_joint()) == doctest::Approx(0.0).scale(1).epsilon(1e-12));

    JointDistribution mix = revealed_mixture();
    CHECK(minentropy_avg(mix) == doctest::Approx(kMixAvg).epsilon(1e-12));
    CHECK(minentropy_worst(mix) == doctest::Approx(0.0).scale(1).epsilon(1e-12));
}

TEST_CASE("entropy ordering holds on random joints") {
    std::mt19937_64 rng(99);
    for (int t = 0; t < 60; ++t) {
        JointDistribution d = t % 2 ? random_e_joint(rng, 4)
                                    : joint(random_conditional_table(rng), random_settings(rng));
        double w = minentropy_worst(d), a = minentropy_avg(d), h = cond_shannon(d, Conditioning::SettingsAndE);
        CHECK(w <= a + 1e-12);
        CHECK(a <= h + 1e-12);
    }
}

TEST_CASE("optimal_iid_attack structure") {
    SettingsDistribution us = uniform_settings(scenario_222());

    SUBCASE("pure extremal target") {
        AttackModel am = optimal_iid_attack(pr_box(0, 0, 0), us);
        CHECK(am.single_trial.e_support == std::vector<std::string>{"PR:000"});
        CHECK(cond_shannon(am.single_trial, Conditioning::SettingsAndE) ==
              doctest::Approx(1.0).epsilon(1e-12));
        CHECK(iid_minentropy_rate(am) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("quantum boundary point") {
        AttackModel am = optimal_iid_attack(slice_behaviour(2.0 * std::sqrt(2.0), 0.0), us);
        CHECK(std::abs(cond_shannon(am.single_trial, Conditioning::SettingsAndE) -
                       (std::sqrt(2.0) - 1.0)) < 1e-9);
        CHECK(am.single_trial.e_count() == 9);
    }
    SUBCASE("slice point entropy cost") {
        AttackModel am = optimal_iid_attack(slice_behaviour(2.6, 0.0), us);
        double h = cond_shannon(am.single_trial, Conditioning::SettingsAndE);
        CHECK(std::abs(h - 0.3) < 1e-10);
        CHECK(iid_minentropy_rate(am) <= h + 1e-12);
    }
    SUBCASE("marginal reproduction and branch validity") {
        std::mt19937_64 rng(4242);
        for (int t = 0; t < 30; ++t) {
            Behaviour b = t % 3 == 0 ? random_simplex_point(rng, 0.001, nullptr) : random_ns_behaviour(rng);
            SettingsDistribution s = random_settings(rng);
            AttackModel am = optimal_iid_attack(b, s);
            CHECK(am.single_trial.e_count() <= 9);
            JointDistribution want = joint(b, s);
            double err = 0.0;
            for (long long z = 0; z < 4; ++z)
                for (long long c = 0; c < 4; ++c) {
                    double got = 0.0;
                    for (long long e = 0; e < am.single_trial.e_count(); ++e)
                        got += am.single_trial.at(e, z, c);
                    err = std::max(err, std::abs(got - want.at(0, z, c)));
                }
            CHECK(err <= 1e-10);
            // settings independent of the branch
            for (long long e = 0; e < am.single_trial.e_count(); ++e) {
                double we = 0.0;
                for (long long z = 0; z < 4; ++z) we += am.single_trial.settings_mass(e, z);
                for (long long z = 0; z < 4; ++z)
                    CHECK(std::abs(am.single_trial.settings_mass(e, z) - we * s.probs[(size_t)z]) < 1e-12);
            }
        }
    }
    SUBCASE("signalling target rejected") {
        std::vector<double> p(16, 0.25);
        p[0] = 0.45;
        p[1] = 0.05;  // block 00 marginal shifted, block 01 untouched
        CHECK_THROWS_AS(optimal_iid_attack(make_behaviour(scenario_222(), p), us), ValidationError);
    }
}

TEST_CASE("local targets have zero-entropy attacks") {
    SettingsDistribution us = uniform_settings(scenario_222());
    std::mt19937_64 rng(616);
    std::exponential_distribution<double> ex(1.0);
    std::vector<Behaviour> lds = ld_enumerate(scenario_222());
    for (int t = 0; t < 15; ++t) {
        std::vector<double> w(16);
        double s = 0.0;
        for (auto& v : w) {
            v = ex(rng);
            s += v;
        }
        std::vector<double> p(16, 0.0);
        for (int j = 0; j < 16; ++j)
            for (int i = 0; i < 16; ++i) p[(size_t)i] += (w[(size_t)j] / s) * lds[(size_t)j].probs[(size_t)i];
        AttackModel am = optimal_iid_attack(make_behaviour(scenario_222(), p), us);
        for (const std::string& lbl : am.single_trial.e_support) CHECK(lbl.substr(0, 3) == "LD:");
        CHECK(cond_shannon(am.single_trial, Conditioning::SettingsAndE) == 0.0);
        CHECK(hmin(make_behaviour(scenario_222(), p), us) == 0.0);
    }
}

TEST_CASE("hmin landmark values and the score formula") {
    SettingsDistribution us = uniform_settings(scenario_222());
    CHECK(std::abs(hmin(slice_behaviour(2.6, 0.0), us) - 0.3) < 1e-10);
    for (int f = 0; f < 8; ++f)
        CHECK(hmin(pr_box((f >> 2) & 1, (f >> 1) & 1, f & 1), us) == doctest::Approx(1.0).epsilon(1e-12));
    // behaviour violating a different functional goes through its own simplex
    CHECK(std::abs(hmin(slice_behaviour(0.0, 2.6), us) - 0.3) < 1e-10);

    std::mt19937_64 rng(321);
    for (int t = 0; t < 100; ++t) {
        double S = 0.0;
        Behaviour b = random_simplex_point(rng, 0.002, &S);
        CHECK(std::abs(hmin(b, us) - (S - 2.0) / 2.0) < 1e-8);
    }
}

TEST_CASE("no random decomposition beats the optimal attack") {
    SettingsDistribution us = uniform_settings(scenario_222());
    std::mt19937_64 rng(777);
    for (int t = 0; t < 40; ++t) {
        Behaviour target = random_simplex_point(rng, 0.01, nullptr);
        double best = hmin(target, us);
        // perturb two small random no-signalling branches out of the target
        Behaviour n1 = random_ns_behaviour(rng), n2 = random_ns_behaviour(rng);
        const double w1 = 0.002, w2 = 0.002, w3 = 1.0 - w1 - w2;
        std::vector<double> rest(16);
        bool ok = true;
        for (int i = 0; i < 16; ++i) {
            rest[(size_t)i] =
                (target.probs[(size_t)i] - w1 * n1.probs[(size_t)i] - w2 * n2.probs[(size_t)i]) / w3;
            if (rest[(size_t)i] < 0.0) ok = false;
        }
        REQUIRE(ok);
        Behaviour n3 = make_behaviour(scenario_222(), rest);
        double h = w1 * cond_shannon(joint(n1, us), Conditioning::Settings) +
                   w2 * cond_shannon(joint(n2, us), Conditioning::Settings) +
                   w3 * cond_shannon(joint(n3, us), Conditioning::Settings);
        CHECK(h >= best - 1e-9);
    }
}

TEST_CASE("iid rate factorizes over explicit small products") {
    SettingsDistribution us = uniform_settings(scenario_222());
    AttackModel am = optimal_iid_attack(slice_behaviour(2.6, 0.0), us);
    const JointDistribution& w = am.single_trial;
    const long long E = w.e_count();
    double rate = iid_minentropy_rate(am);

    for (int n = 2; n <= 3; ++n) {
        // enumerate (e,z) tuples; brute-force max over outcome tuples
        double sum = 0.0, comp = 0.0;
        std::vector<long long> ez((size_t)n, 0);
        const long long rows = [&] {
            long long r = 1;
            for (int i = 0; i < n; ++i) r *= E * 4;
            return r;
        }();
        for (long long row = 0; row < rows; ++row) {
            long long rest = row;
            for (int i = n - 1; i >= 0; --i) {
                ez[(size_t)i] = rest % (E * 4);
                rest /= E * 4;
            }
            double peak = 0.0;
            long long combos = 1;
            for (int i = 0; i < n; ++i) combos *= 4;
            for (long long cc = 0; cc < combos; ++cc) {
                long long rc = cc;
                double prod = 1.0;
                for (int i = n - 1; i >= 0; --i) {
                    long long c = rc % 4;
                    rc /= 4;
                    prod *= w.at(ez[(size_t)i] / 4, ez[(size_t)i] % 4, c);
                }
                peak = std::max(peak, prod);
            }
            double t = sum + peak;  // Neumaier compensation
            comp += std::abs(sum) >= std::abs(peak) ? (sum - t) + peak : (peak - t) + sum;
            sum = t;
        }
        CHECK(std::abs(-std::log2(sum + comp) - n * rate) < 1e-12);
    }
}

TEST_CASE("chain rule structure of the product attack") {
    SettingsDistribution us = uniform_settings(scenario_222());
    AttackModel am = optimal_iid_attack(slice_behaviour(2.6, 0.0), us);
    const JointDistribution& w = am.single_trial;
    const long long E = w.e_count();
    // two-trial product: P(c2,z2 | c1,z1,e1,e2) equals w(c2,z2|e2)
    for (long long e1 = 0; e1 < E; ++e1)
        for (long long z1 = 0; z1 < 4; ++z1)
            for (long long c1 = 0; c1 < 4; ++c1) {
                double hist = w.at(e1, z1, c1);
                if (hist <= 0.0) continue;
                for (long long e2 = 0; e2 < E; ++e2) {
                    double we2 = 0.0;
                    for (long long z = 0; z < 4; ++z) we2 += w.settings_mass(e2, z);
                    if (we2 <= 0.0) continue;
                    for (long long z2 = 0; z2 < 4; ++z2)
                        for (long long c2 = 0; c2 < 4; ++c2) {
                            double lhs = hist * w.at(e2, z2, c2) / (hist * we2);
                            double rhs = w.at(e2, z2, c2) / we2;
                            CHECK(std::abs(lhs - rhs) < 1e-12);
                        }
                }
            }
}

TEST_CASE("smooth bound envelope") {
    SUBCASE("extremal nonlocal box") {
        SmoothBounds sb = smooth_bound_relation(pr_joint(), 0.0, 0.5);
        CHECK(sb.lower == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(sb.upper == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("deterministic box") {
        SmoothBounds sb = smooth_bound_relation(ld_joint(), 0.0, 0.25);
        CHECK(sb.lower == doctest::Approx(0.0).scale(1).epsilon(1e-12));
        CHECK(sb.upper == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("branch-revealing mixture") {
        SmoothBounds sb = smooth_bound_relation(revealed_mixture(), 0.0, 0.3);
        double avg = minentropy_avg(revealed_mixture());
        CHECK(sb.lower <= avg + 1e-12);
        CHECK(avg <= sb.upper + 1e-12);
    }
    SUBCASE("random joints") {
        std::mt19937_64 rng(31337);
        std::uniform_real_distribution<double> u(0.02, 0.98);
        for (int t = 0; t < 50; ++t) {
            JointDistribution d = t % 2 ? random_e_joint(rng, 5)
                                        : joint(random_conditional_table(rng), random_settings(rng));
            double ep = u(rng);
            SmoothBounds sb = smooth_bound_relation(d, 0.0, ep);
            double avg = minentropy_avg(d);
            CHECK(sb.lower <= avg + 1e-12);
            CHECK(avg <= sb.upper + 1e-12);
        }
    }
    SUBCASE("parameter validation") {
        CHECK_THROWS_AS(smooth_bound_relation(pr_joint(), -0.1, 0.5), ValidationError);
        CHECK_THROWS_AS(smooth_bound_relation(pr_joint(), 1.5, 0.5), ValidationError);
        CHECK_THROWS_AS(smooth_bound_relation(pr_joint(), 0.0, 0.0), ValidationError);
        CHECK_THROWS_AS(smooth_bound_relation(pr_joint(), 0.0, 1.0), ValidationError);
    }
}

TEST_CASE("attack model validation") {
    SUBCASE("signalling branch rejected") {
        std::vector<double> p(16, 0.25 * 0.25);
        // skew one settings block so Bob's marginal depends on Alice's setting
        p[0] = 0.45 * 0.25;
        p[1] = 0.05 * 0.25;
        CHECK_THROWS_AS(
            make_attack_model(make_joint_distribution(scenario_222(), p, {"E0"}), 1),
            ValidationError);
    }
    SUBCASE("too many branches rejected for (2,2,2)") {
        std::vector<double> p((size_t)(10 * 16), 1.0 / 160.0);
        std::vector<std::string> labels;
        for (int e = 0; e < 10; ++e) labels.push_back("E" + std::to_string(e));
        CHECK_THROWS_AS(make_attack_model(make_joint_distribution(scenario_222(), p, labels), 1),
                        ValidationError);
    }
    SUBCASE("nonpositive trial count rejected") {
        CHECK_THROWS_AS(make_attack_model(pr_joint(), 0), ValidationError);
    }
}

TEST_CASE("aep parameter validation") {
    AepParams ok = make_aep_params(0.5, 0.2, 1e-6);
    CHECK(ok.eps_a == 0.5);
    CHECK_THROWS_AS(make_aep_params(0.0, 0.1, 1e-6), ValidationError);
    CHECK_THROWS_AS(make_aep_params(1.0, 0.0, 1e-6), ValidationError);
    CHECK_THROWS_AS(make_aep_params(0.5, -0.1, 1e-6), ValidationError);
    CHECK_THROWS_AS(make_aep_params(0.5, 0.2, 0.0), ValidationError);
    CHECK_THROWS_AS(make_aep_params(0.8, 0.15, 1e-6), ValidationError);
}
