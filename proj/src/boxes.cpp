#include "pefcert/boxes.hpp"

#include <cmath>

#include "pefcert/errors.hpp"

namespace pefcert {

namespace {

int bit_ok(int v, const char* name) {
    if (v != 0 && v != 1) throw ValidationError(std::string(name) + " must be 0 or 1");
    return v;
}

}  // namespace

Behaviour pr_box(int alpha, int beta, int gamma) {
    bit_ok(alpha, "alpha");
    bit_ok(beta, "beta");
    bit_ok(gamma, "gamma");
    const Scenario sc = scenario_222();
    std::vector<double> p(16, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    int parity = (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma;
                    if ((a ^ b) == parity) p[(size_t)(((2 * x + y) * 4) + 2 * a + b)] = 0.5;
                }
    return make_behaviour(sc, std::move(p));
}

Behaviour ld_box(int alpha, int beta, int gamma, int delta) {
    bit_ok(alpha, "alpha");
    bit_ok(beta, "beta");
    bit_ok(gamma, "gamma");
    bit_ok(delta, "delta");
    const Scenario sc = scenario_222();
    std::vector<double> p(16, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            int a = (alpha & x) ^ beta;
            int b = (gamma & y) ^ delta;
            p[(size_t)(((2 * x + y) * 4) + 2 * a + b)] = 1.0;
        }
    return make_behaviour(sc, std::move(p));
}

std::vector<Behaviour> ld_enumerate(const Scenario& sc) {
    const int n = sc.parties, m = sc.settings_per_party, k = sc.outcomes_per_setting;
    // One deterministic assignment is an outcome per (party, setting).
    long long total = 1;
    for (int i = 0; i < n * m; ++i) {
        total *= k;
        if (total > 200000) throw ResourceError("too many deterministic assignments to enumerate");
    }
    const long long Z = sc.settings_count(), K = sc.outcomes_count();
    if (total * Z * K > 50'000'000) throw ResourceError("deterministic enumeration exceeds memory budget");

    std::vector<Behaviour> out;
    out.reserve((size_t)total);
    std::vector<int> assign((size_t)(n * m));  // assign[party*m + setting] = outcome
    for (long long code = 0; code < total; ++code) {
        long long rest = code;
        for (int i = n * m - 1; i >= 0; --i) {
            assign[(size_t)i] = (int)(rest % k);
            rest /= k;
        }
        std::vector<double> p((size_t)(Z * K), 0.0);
        for (long long z = 0; z < Z; ++z) {
            std::vector<int> zt = settings_tuple(sc, z);
            std::vector<int> ct(sc.parties);
            for (int i = 0; i < n; ++i) ct[(size_t)i] = assign[(size_t)(i * m + zt[(size_t)i])];
            p[(size_t)(z * K + outcomes_index(sc, ct))] = 1.0;
        }
        out.push_back(make_behaviour(sc, std::move(p)));
    }
    return out;
}

double chsh_value(const Behaviour& b, int alpha, int beta, int gamma) {
    bit_ok(alpha, "alpha");
    bit_ok(beta, "beta");
    bit_ok(gamma, "gamma");
    if (!(b.scenario == scenario_222())) throw ValidationError("chsh_value requires a (2,2,2) behaviour");
    double e[2][2];
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            double v = 0.0;
            for (int a = 0; a < 2; ++a)
                for (int c = 0; c < 2; ++c)
                    v += ((a ^ c) ? -1.0 : 1.0) * b.at(2 * x + y, 2 * a + c);
            e[x][y] = v;
        }
    auto sgn = [](int s) { return (s & 1) ? -1.0 : 1.0; };
    return sgn(gamma) * e[0][0] + sgn(beta + gamma) * e[0][1] + sgn(alpha + gamma) * e[1][0] +
           sgn(alpha + beta + gamma + 1) * e[1][1];
}

bool SliceCoords::in_ns_diamond() const {
    return std::abs(S + S_prime) <= 4.0 + 1e-12 && std::abs(S - S_prime) <= 4.0 + 1e-12;
}

bool SliceCoords::in_quantum_disk() const { return S * S + S_prime * S_prime <= 8.0 + 1e-12; }

Behaviour slice_behaviour(const SliceCoords& c) {
    if (!c.in_ns_diamond())
        throw ValidationError("slice coordinates outside the no-signalling diamond");
    const double S = c.S, Sp = c.S_prime;
    const double s1 = (4.0 + S - Sp) / 16.0;
    const double s2 = (4.0 + Sp - S) / 16.0;
    const double s3 = (4.0 + S + Sp) / 16.0;
    const double s4 = (4.0 - S - Sp) / 16.0;
    // Rows are settings blocks xy = 00,01,10,11; columns outcomes ab = 00,01,10,11.
    std::vector<double> p = {
        s1, s2, s2, s1,
        s3, s4, s4, s3,
        s3, s4, s4, s3,
        s2, s1, s1, s2,
    };
    return make_behaviour(scenario_222(), std::move(p));
}

namespace {

// Cell patterns for the (2,3,2) boxes: 2x2 outcome blocks per settings pair.
enum class Cell232 { Corr, Anti, BobZero };

Behaviour build_232(const Cell232 grid[3][3]) {
    const Scenario sc{2, 3, 2};
    const long long K = sc.outcomes_count();
    std::vector<double> p((size_t)(sc.cell_count()), 0.0);
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y) {
            long long z = 3 * x + y;
            auto set = [&](int a, int b, double v) { p[(size_t)(z * K + 2 * a + b)] = v; };
            switch (grid[x][y]) {
                case Cell232::Corr:
                    set(0, 0, 0.5);
                    set(1, 1, 0.5);
                    break;
                case Cell232::Anti:
                    set(0, 1, 0.5);
                    set(1, 0, 0.5);
                    break;
                case Cell232::BobZero:
                    set(0, 0, 0.5);
                    set(1, 0, 0.5);
                    break;
            }
        }
    return make_behaviour(sc, std::move(p));
}

Behaviour mix_equal(const Behaviour& u, const Behaviour& v) {
    std::vector<double> p(u.probs.size());
    for (size_t i = 0; i < p.size(); ++i) p[i] = 0.5 * (u.probs[i] + v.probs[i]);
    return make_behaviour(u.scenario, std::move(p));
}

}  // namespace

SpecialBoxes special_boxes() {
    SpecialBoxes out{
        Behaviour{}, Behaviour{}, {}, Behaviour{},
    };

    // (2,2,3): 1/3 exactly where b - a = x*y (mod 3).
    {
        const Scenario sc{2, 2, 3};
        const long long K = sc.outcomes_count();
        std::vector<double> p((size_t)sc.cell_count(), 0.0);
        std::vector<double> q((size_t)sc.cell_count(), 0.0);
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        long long z = 2 * x + y;
                        size_t idx = (size_t)(z * K + 3 * a + b);
                        if (((b - a) % 3 + 3) % 3 == x * y) p[idx] = 1.0 / 3.0;
                        // Relabelled partner: swap the two settings of each party.
                        if (((b - a) % 3 + 3) % 3 == (1 - x) * (1 - y)) q[idx] = 1.0 / 3.0;
                    }
        out.nl_box_223 = make_behaviour(sc, std::move(p));
        out.nl_box_223_relabelled = make_behaviour(sc, std::move(q));
    }

    // (2,3,2): two boxes with four underdetermined cells, every resolution kept.
    {
        using C = Cell232;
        for (int bits = 0; bits < 16; ++bits) {
            auto pick = [&](int bit) { return (bits >> bit) & 1 ? C::Anti : C::Corr; };
            const C first[3][3] = {
                {C::Corr, C::Corr, C::Corr},
                {C::Corr, C::Anti, pick(0)},
                {C::Corr, pick(1), pick(2)},
            };
            const C second[3][3] = {
                {C::Corr, C::Corr, C::BobZero},
                {C::Corr, C::Anti, C::BobZero},
                {C::Corr, pick(3), C::BobZero},
            };
            Behaviour f = build_232(first);
            Behaviour s = build_232(second);
            Behaviour m = mix_equal(f, s);
            out.nl_boxes_232.push_back(BoxPair232{bits, std::move(f), std::move(s), std::move(m)});
        }
    }

    // (3,2,2): correlation-only tripartite behaviour with the GHZ pattern
    // E_000 = +1, E_011 = E_101 = E_110 = -1, all other correlators zero.
    {
        const Scenario sc{3, 2, 2};
        const long long K = sc.outcomes_count();
        std::vector<double> p((size_t)sc.cell_count(), 0.0);
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int w = 0; w < 2; ++w) {
                    int ones = x + y + w;
                    double corr = (ones == 0) ? 1.0 : (ones == 2 ? -1.0 : 0.0);
                    long long z = 4 * x + 2 * y + w;
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b)
                            for (int c = 0; c < 2; ++c) {
                                double sign = ((a + b + c) & 1) ? -1.0 : 1.0;
                                p[(size_t)(z * K + 4 * a + 2 * b + c)] = (1.0 + sign * corr) / 8.0;
                            }
                }
        out.ghz_mixture_322 = make_behaviour(sc, std::move(p));
    }

    return out;
}

}  // namespace pefcert
