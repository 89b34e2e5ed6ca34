#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "pefcert/behaviour.hpp"
#include "pefcert/boxes.hpp"
#include "pefcert/errors.hpp"

using namespace pefcert;

namespace {

// ---- Oracles ----------------------------------------------------------
// Independent reference computations; expected values below are frozen from
// these oracles, not from the library under test.

// Reference slice vector computed straight from the four closed-form entries.
std::vector<double> oracle_slice(double S, double Sp) {
    double s1 = (4 + S - Sp) / 16, s2 = (4 + Sp - S) / 16, s3 = (4 + S + Sp) / 16,
           s4 = (4 - S - Sp) / 16;
    return {s1, s2, s2, s1, s3, s4, s4, s3, s3, s4, s4, s3, s2, s1, s1, s2};
}

// Reference correlation functional evaluated from raw probabilities.
double oracle_chsh(const std::vector<double>& p, int al, int be, int ga) {
    double e[4];
    for (int z = 0; z < 4; ++z)
        e[z] = p[z * 4 + 0] - p[z * 4 + 1] - p[z * 4 + 2] + p[z * 4 + 3];
    auto sg = [](int s) { return (s % 2) ? -1.0 : 1.0; };
    return sg(ga) * e[0] + sg(be + ga) * e[1] + sg(al + ga) * e[2] + sg(al + be + ga + 1) * e[3];
}

// Independent deterministic-box enumeration: recursively assign one outcome per
// (party, setting) and tabulate the induced behaviour vectors.
void oracle_ld_recurse(const Scenario& sc, std::vector<int>& assign, int pos,
                       std::set<std::vector<double>>& found) {
    const int n = sc.parties, m = sc.settings_per_party, k = sc.outcomes_per_setting;
    if (pos == n * m) {
        const long long Z = sc.settings_count(), K = sc.outcomes_count();
        std::vector<double> p((size_t)(Z * K), 0.0);
        for (long long z = 0; z < Z; ++z) {
            auto zt = settings_tuple(sc, z);
            std::vector<int> ct(sc.parties);
            for (int i = 0; i < n; ++i) ct[(size_t)i] = assign[(size_t)(i * m + zt[(size_t)i])];
            p[(size_t)(z * K + outcomes_index(sc, ct))] = 1.0;
        }
        found.insert(p);
        return;
    }
    for (int o = 0; o < k; ++o) {
        assign[(size_t)pos] = o;
        oracle_ld_recurse(sc, assign, pos + 1, found);
    }
}

std::set<std::vector<double>> oracle_ld_set(const Scenario& sc) {
    std::set<std::vector<double>> found;
    std::vector<int> assign((size_t)(sc.parties * sc.settings_per_party));
    oracle_ld_recurse(sc, assign, 0, found);
    return found;
}

// Row-reduction rank with pivot tolerance, used for the affine-independence check.
int oracle_rank(std::vector<std::vector<double>> rows) {
    size_t nr = rows.size(), nc = rows.empty() ? 0 : rows[0].size();
    int rank = 0;
    for (size_t col = 0; col < nc && (size_t)rank < nr; ++col) {
        size_t piv = (size_t)rank;
        for (size_t r = (size_t)rank + 1; r < nr; ++r)
            if (std::abs(rows[r][col]) > std::abs(rows[piv][col])) piv = r;
        if (std::abs(rows[piv][col]) < 1e-12) continue;
        std::swap(rows[(size_t)rank], rows[piv]);
        for (size_t r = 0; r < nr; ++r) {
            if (r == (size_t)rank) continue;
            double f = rows[r][col] / rows[(size_t)rank][col];
            for (size_t cl = col; cl < nc; ++cl) rows[r][cl] -= f * rows[(size_t)rank][cl];
        }
        ++rank;
    }
    return rank;
}

// Frozen reference vectors for the standard box family (canonical order:
// settings blocks 00,01,10,11; outcomes 00,01,10,11 inside each block).
const std::vector<double> kPr1 = {.5, 0, 0, .5, .5, 0, 0, .5, .5, 0, 0, .5, 0, .5, .5, 0};
const std::vector<std::vector<double>> kStandardLd = {
    {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0},  // 0000
    {0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1},  // 0101
    {1, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0},  // 0010
    {0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 1, 0},  // 0111
    {1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0},  // 1000
    {0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0, 0},  // 1101
    {0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0},  // 1011
    {0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 1, 0, 0},  // 1110
};
const int kStandardLdCodes[8] = {0b0000, 0b0101, 0b0010, 0b0111, 0b1000, 0b1101, 0b1011, 0b1110};

bool close_all(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > tol) return false;
    return true;
}

}  // namespace

TEST_CASE("pr_box coordinates and functional values") {
    Behaviour pr1 = pr_box(0, 0, 0);
    CHECK(close_all(pr1.probs, kPr1, 0.0));
    CHECK(chsh_value(pr1, 0, 0, 0) == doctest::Approx(4.0).epsilon(1e-15));

    // gamma flip: support is the complement inside each settings block
    Behaviour flipped = pr_box(0, 0, 1);
    for (int i = 0; i < 16; ++i) {
        if (kPr1[(size_t)i] > 0)
            CHECK(flipped.probs[(size_t)i] == 0.0);
        else
            CHECK(flipped.probs[(size_t)i] == 0.5);
    }

    for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be)
            for (int ga = 0; ga < 2; ++ga) {
                Behaviour pr = pr_box(al, be, ga);
                CHECK(chsh_value(pr, al, be, ga) == doctest::Approx(4.0).epsilon(1e-15));
                auto ns = no_signalling_check(pr);
                CHECK(ns.ok);
            }
}

TEST_CASE("ld_box determinism and standard family") {
    for (int code = 0; code < 16; ++code) {
        Behaviour ld = ld_box((code >> 3) & 1, (code >> 2) & 1, (code >> 1) & 1, code & 1);
        // exactly one unit entry per settings block
        for (int z = 0; z < 4; ++z) {
            int ones = 0;
            for (int c = 0; c < 4; ++c) {
                double v = ld.at(z, c);
                CHECK((v == 0.0 || v == 1.0));
                if (v == 1.0) ++ones;
            }
            CHECK(ones == 1);
        }
        CHECK(no_signalling_check(ld).ok);
    }
    for (int i = 0; i < 8; ++i) {
        int c = kStandardLdCodes[i];
        Behaviour ld = ld_box((c >> 3) & 1, (c >> 2) & 1, (c >> 1) & 1, c & 1);
        CHECK(close_all(ld.probs, kStandardLd[(size_t)i], 0.0));
        CHECK(chsh_value(ld, 0, 0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    }
}

TEST_CASE("ld_enumerate counts and set equality with the oracle") {
    SUBCASE("(2,2,2)") {
        auto lds = ld_enumerate(scenario_222());
        CHECK(lds.size() == 16);
        auto oracle = oracle_ld_set(scenario_222());
        CHECK(oracle.size() == 16);
        std::set<std::vector<double>> got;
        for (auto& b : lds) got.insert(b.probs);
        CHECK(got == oracle);
    }
    SUBCASE("(2,2,3)") {
        Scenario sc{2, 2, 3};
        auto lds = ld_enumerate(sc);
        CHECK(lds.size() == 81);
        CHECK(oracle_ld_set(sc).size() == 81);
    }
    SUBCASE("(3,2,2)") {
        Scenario sc{3, 2, 2};
        auto lds = ld_enumerate(sc);
        CHECK(lds.size() == 64);
        CHECK(oracle_ld_set(sc).size() == 64);
        for (auto& b : lds) CHECK(no_signalling_check(b).ok);
    }
    SUBCASE("(2,3,2)") {
        Scenario sc{2, 3, 2};
        CHECK(ld_enumerate(sc).size() == 64);
    }
}

TEST_CASE("chsh_value exhaustive membership table") {
    // PR boxes hit {4, -4, 0} depending on the functional; LD boxes always hit +-2.
    for (int box = 0; box < 8; ++box) {
        Behaviour pr = pr_box((box >> 2) & 1, (box >> 1) & 1, box & 1);
        for (int f = 0; f < 8; ++f) {
            double v = chsh_value(pr, (f >> 2) & 1, (f >> 1) & 1, f & 1);
            bool member = std::abs(v - 4) < 1e-12 || std::abs(v + 4) < 1e-12 || std::abs(v) < 1e-12;
            CHECK(member);
            // the matching functional is the only one reaching +4
            if (f == box)
                CHECK(v == doctest::Approx(4.0));
            else
                CHECK(v < 4.0 - 1e-9);
        }
    }
    for (int code = 0; code < 16; ++code) {
        Behaviour ld = ld_box((code >> 3) & 1, (code >> 2) & 1, (code >> 1) & 1, code & 1);
        for (int f = 0; f < 8; ++f) {
            double v = chsh_value(ld, (f >> 2) & 1, (f >> 1) & 1, f & 1);
            CHECK(std::abs(std::abs(v) - 2.0) < 1e-12);
        }
    }
    // uniform behaviour: all functionals vanish
    Behaviour uni = make_behaviour(scenario_222(), std::vector<double>(16, 0.25));
    for (int f = 0; f < 8; ++f)
        CHECK(chsh_value(uni, (f >> 2) & 1, (f >> 1) & 1, f & 1) == doctest::Approx(0.0));
}

TEST_CASE("slice_behaviour matches the closed form and the convex combination") {
    Behaviour s26 = slice_behaviour(2.6, 0.0);
    CHECK(close_all(s26.probs, oracle_slice(2.6, 0.0), 1e-15));
    CHECK(chsh_value(s26, 0, 0, 0) == doctest::Approx(2.6).epsilon(1e-14));
    CHECK(oracle_chsh(oracle_slice(2.6, 0.0), 0, 0, 0) == doctest::Approx(2.6).epsilon(1e-14));

    CHECK(close_all(slice_behaviour(4, 0).probs, pr_box(0, 0, 0).probs, 1e-15));
    CHECK(close_all(slice_behaviour(0, 0).probs, std::vector<double>(16, 0.25), 1e-15));

    double r2 = 2.0 * std::sqrt(2.0);
    Behaviour tsir = slice_behaviour(r2, 0.0);
    CHECK(chsh_value(tsir, 0, 0, 0) == doctest::Approx(r2).epsilon(1e-14));
    CHECK(SliceCoords{r2, 0.0}.in_quantum_disk());
    CHECK_FALSE(SliceCoords{2.9, 1.0}.in_quantum_disk());

    // slice = (S/4) pr_box(0,0,0) + (S'/4) pr_box(1,1,1) + (1-(S+S')/4) uniform
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    Behaviour pr2 = pr_box(1, 1, 1);
    int tested = 0;
    while (tested < 200) {
        double S = u(rng), Sp = u(rng);
        if (std::abs(S + Sp) > 4 || std::abs(S - Sp) > 4) continue;
        ++tested;
        Behaviour sl = slice_behaviour(S, Sp);
        for (int i = 0; i < 16; ++i) {
            double want = S / 4 * kPr1[(size_t)i] + Sp / 4 * pr2.probs[(size_t)i] +
                          (1 - (S + Sp) / 4) * 0.25;
            CHECK(sl.probs[(size_t)i] == doctest::Approx(want).epsilon(0).scale(1).epsilon(1e-12));
        }
        CHECK(no_signalling_check(sl).ok);
    }
    CHECK_THROWS_AS(slice_behaviour(3.0, 2.0), ValidationError);
}

TEST_CASE("exactly one functional above the local bound on random simplex mixtures") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int f = 0; f < 8; ++f) {
        int al = (f >> 2) & 1, be = (f >> 1) & 1, ga = f & 1;
        Behaviour pr = pr_box(al, be, ga);
        // the simplex companions: deterministic boxes meeting this functional at +2
        std::vector<Behaviour> verts;
        for (int code = 0; code < 16; ++code) {
            Behaviour ld = ld_box((code >> 3) & 1, (code >> 2) & 1, (code >> 1) & 1, code & 1);
            if (std::abs(chsh_value(ld, al, be, ga) - 2.0) < 1e-12) verts.push_back(ld);
        }
        REQUIRE(verts.size() == 8);
        for (int trial = 0; trial < 25; ++trial) {
            double lam = 0.05 + 0.95 * u(rng);  // keep a nonlocal share
            std::vector<double> w(8);
            double tot = 0;
            for (auto& x : w) {
                x = u(rng);
                tot += x;
            }
            std::vector<double> mix(16, 0.0);
            for (int i = 0; i < 16; ++i) {
                double v = lam * pr.probs[(size_t)i];
                for (int j = 0; j < 8; ++j) v += (1 - lam) * w[(size_t)j] / tot * verts[(size_t)j].probs[(size_t)i];
                mix[(size_t)i] = v;
            }
            Behaviour bm = make_behaviour(scenario_222(), mix);
            int over = 0, which = -1;
            for (int g = 0; g < 8; ++g) {
                if (chsh_value(bm, (g >> 2) & 1, (g >> 1) & 1, g & 1) > 2.0 + 1e-10) {
                    ++over;
                    which = g;
                }
            }
            CHECK(over == 1);
            CHECK(which == f);
        }
    }
}

TEST_CASE("affine independence of the nine-vertex family") {
    std::vector<std::vector<double>> diffs;
    for (auto& row : kStandardLd) {
        std::vector<double> d(16);
        for (int i = 0; i < 16; ++i) d[(size_t)i] = row[(size_t)i] - kPr1[(size_t)i];
        diffs.push_back(d);
    }
    CHECK(oracle_rank(diffs) == 8);
}

TEST_CASE("joint construction and no-signalling checks") {
    Behaviour pr = pr_box(0, 0, 0);
    auto s = uniform_settings(scenario_222());
    JointDistribution j = joint(pr, s);
    int eighths = 0;
    for (double v : j.probs) {
        CHECK((v == 0.0 || v == doctest::Approx(0.125)));
        if (v > 0) ++eighths;
    }
    CHECK(eighths == 8);
    for (int z = 0; z < 4; ++z) CHECK(j.settings_mass(0, z) == doctest::Approx(0.25).epsilon(1e-13));

    auto back = split_joint(j);
    CHECK(close_all(back.behaviour.probs, pr.probs, 1e-13));
    CHECK(close_all(back.settings.probs, s.probs, 1e-13));

    // skewed settings round-trip too
    auto s2 = make_settings(scenario_222(), {0.4, 0.3, 0.2, 0.1});
    auto back2 = split_joint(joint(slice_behaviour(1.5, -0.5), s2));
    CHECK(close_all(back2.settings.probs, s2.probs, 1e-13));

    // constructed signalling behaviour: Alice's marginal depends on y
    std::vector<double> sig = {
        0.3, 0.3, 0.2, 0.2, 0.25, 0.25, 0.25, 0.25,
        0.3, 0.3, 0.2, 0.2, 0.25, 0.25, 0.25, 0.25,
    };
    auto rep = no_signalling_check(make_behaviour(scenario_222(), sig));
    CHECK_FALSE(rep.ok);
    CHECK(rep.max_violation == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("special boxes") {
    SpecialBoxes sp = special_boxes();

    SUBCASE("(2,2,3) grids") {
        const double t = 1.0 / 3.0;
        // blocks xy = 00,01,10: weight on b=a; block 11: weight on b-a=1 (mod 3)
        for (int z = 0; z < 4; ++z) {
            int shift = (z == 3) ? 1 : 0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    double want = (((b - a) % 3 + 3) % 3 == shift) ? t : 0.0;
                    CHECK(sp.nl_box_223.at(z, 3 * a + b) == doctest::Approx(want));
                    // relabelled partner shifts on block 00 instead
                    int shift2 = (z == 0) ? 1 : 0;
                    double want2 = (((b - a) % 3 + 3) % 3 == shift2) ? t : 0.0;
                    CHECK(sp.nl_box_223_relabelled.at(z, 3 * a + b) == doctest::Approx(want2));
                }
        }
        CHECK(no_signalling_check(sp.nl_box_223).ok);
        CHECK(no_signalling_check(sp.nl_box_223_relabelled).ok);
    }

    SUBCASE("(2,3,2) variants restrict to the standard nonlocal pattern") {
        CHECK(sp.nl_boxes_232.size() == 16);
        Behaviour pr = pr_box(0, 0, 0);
        for (auto& pair : sp.nl_boxes_232) {
            CHECK(no_signalling_check(pair.first).ok);
            CHECK(no_signalling_check(pair.second).ok);
            CHECK(no_signalling_check(pair.mixture).ok);
            // upper-left 2x2 settings corner of the mixture is the standard box
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b)
                            CHECK(pair.mixture.at(3 * x + y, 2 * a + b) ==
                                  doctest::Approx(pr.at(2 * x + y, 2 * a + b)));
        }
    }

    SUBCASE("(3,2,2) correlator pattern") {
        const Behaviour& g = sp.ghz_mixture_322;
        CHECK(no_signalling_check(g).ok);
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int w = 0; w < 2; ++w) {
                    double corr = 0.0;
                    for (int c = 0; c < 8; ++c) {
                        int bits = ((c >> 2) & 1) + ((c >> 1) & 1) + (c & 1);
                        corr += ((bits & 1) ? -1.0 : 1.0) * g.at(4 * x + 2 * y + w, c);
                    }
                    int ones = x + y + w;
                    double want = ones == 0 ? 1.0 : (ones == 2 ? -1.0 : 0.0);
                    CHECK(corr == doctest::Approx(want).epsilon(1e-13));
                }
    }
}

TEST_CASE("validation errors") {
    CHECK_THROWS_AS(make_behaviour(scenario_222(), std::vector<double>(15, 0.25)), ValidationError);
    std::vector<double> bad(16, 0.25);
    bad[0] = 0.5;  // block no longer sums to 1
    CHECK_THROWS_AS(make_behaviour(scenario_222(), bad), ValidationError);
    CHECK_THROWS_AS(make_settings(scenario_222(), {0.5, 0.5, 0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(pr_box(2, 0, 0), ValidationError);
    CHECK_THROWS_AS(ld_enumerate(Scenario{4, 4, 4}), ResourceError);
}
