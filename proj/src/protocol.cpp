#include "pefcert/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "pefcert/boxes.hpp"
#include "pefcert/errors.hpp"

namespace pefcert {

namespace {

constexpr double kNormalQuantile5 = -1.6448536269514722;  // 5th percentile of N(0,1)

// First index whose running mass exceeds u * total; zero-mass entries can
// never be selected.
long long pick(const double* w, long long count, double total, double u) {
    double target = u * total;
    double cum = 0.0;
    long long last = 0;
    for (long long i = 0; i < count; ++i) {
        if (w[i] <= 0.0) continue;
        cum += w[i];
        last = i;
        if (target < cum) return i;
    }
    return last;
}

void add_compensated(double& sum, double& comp, double term) {
    double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
}

long long checked_cell_index(const Scenario& s, const TrialRecord& t) {
    if ((int)t.settings.size() != s.parties || (int)t.outcomes.size() != s.parties)
        throw ValidationError("trial record arity does not match the scenario");
    for (int v : t.settings)
        if (v < 0 || v >= s.settings_per_party)
            throw ValidationError("setting symbol out of range");
    for (int v : t.outcomes)
        if (v < 0 || v >= s.outcomes_per_setting)
            throw ValidationError("outcome symbol out of range");
    return settings_index(s, t.settings) * s.outcomes_count() + outcomes_index(s, t.outcomes);
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return (double)(z >> 11) * 0x1.0p-53;
}

std::vector<TrialRecord> simulate(const JointDistribution& d, long long n, std::uint64_t seed) {
    if (n < 0) throw ValidationError("trial count must be nonnegative");
    const Scenario& sc = d.scenario;
    const long long Z = sc.settings_count(), K = sc.outcomes_count(), E = d.e_count();
    std::vector<double> we((size_t)E, 0.0);
    for (long long e = 0; e < E; ++e)
        for (long long z = 0; z < Z; ++z) we[(size_t)e] += d.settings_mass(e, z);

    std::vector<TrialRecord> out;
    out.reserve((size_t)n);
    for (long long i = 0; i < n; ++i) {
        double u1 = counter_uniform(seed, (std::uint64_t)(2 * i));
        double u2 = counter_uniform(seed, (std::uint64_t)(2 * i) + 1);
        long long e = (E == 1) ? 0 : pick(we.data(), E, 1.0, u1);
        const double* row = d.probs.data() + (size_t)(e * Z * K);
        long long cell = pick(row, Z * K, we[(size_t)e], u2);
        TrialRecord r;
        r.index = i + 1;
        r.settings = settings_tuple(sc, cell / K);
        r.outcomes = outcomes_tuple(sc, cell % K);
        r.e = (E == 1) ? -1 : (int)e;
        out.push_back(std::move(r));
    }
    return out;
}

double accumulate(const Pef& f, const Scenario& s, const std::vector<TrialRecord>& trials) {
    if ((long long)f.values.size() != s.cell_count())
        throw ValidationError("factor table does not match the scenario");
    double sum = 0.0, comp = 0.0;
    for (const TrialRecord& t : trials)
        add_compensated(sum, comp, std::log2(f.values[(size_t)checked_cell_index(s, t)]));
    return sum + comp;
}

Certificate certify(const Pef& f, const Scenario& s, const std::vector<TrialRecord>& trials,
                    double epsilon, double log2_p, double kappa) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in (0,1)");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw ValidationError("kappa must lie in (0,1]");
    if (!(log2_p <= 0.0)) throw ValidationError("success threshold must not exceed 1");
    long long n = (long long)trials.size();
    double floor_log2_p = -(double)n * std::log2((double)s.outcomes_count());
    if (log2_p < floor_log2_p - 1e-12)
        throw ValidationError("success threshold is below the smallest attainable probability");

    Certificate cert;
    cert.n = n;
    cert.beta = f.beta;
    cert.epsilon = epsilon;
    cert.log2_p = log2_p;
    cert.kappa = kappa;
    cert.smoothing = epsilon / kappa;
    cert.log2_pef_product = accumulate(f, s, trials);
    cert.success = (cert.log2_pef_product + std::log2(epsilon)) / f.beta + log2_p >= 0.0;
    if (cert.success) {
        cert.bound_kappa_smooth = std::log2(kappa) - log2_p;
        cert.bound_eps_smooth = (1.0 + 1.0 / f.beta) * std::log2(kappa) - log2_p;
    }
    return cert;
}

double choose_p(const Pef& f, const JointDistribution& d, long long n, double epsilon) {
    if (n < 1) throw ValidationError("trial count must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in (0,1)");
    const Scenario& sc = d.scenario;
    if ((long long)f.values.size() != sc.cell_count())
        throw ValidationError("factor table does not match the scenario");
    const long long Z = sc.settings_count(), K = sc.outcomes_count(), E = d.e_count();
    double m1 = 0.0, m2 = 0.0;
    for (long long e = 0; e < E; ++e)
        for (long long cell = 0; cell < Z * K; ++cell) {
            double p = d.probs[(size_t)(e * Z * K + cell)];
            if (p <= 0.0) continue;
            double lf = std::log2(f.values[(size_t)cell]);
            m1 += p * lf;
            m2 += p * lf * lf;
        }
    double var = std::max(0.0, m2 - m1 * m1);
    double anticipated = (double)n * m1 + kNormalQuantile5 * std::sqrt((double)n * var);
    double log2_p = -(anticipated + std::log2(epsilon)) / f.beta;
    double floor_log2_p = -(double)n * std::log2((double)K);
    return std::min(0.0, std::max(floor_log2_p, log2_p));
}

ExactTailReport exact_tail_check(const Pef& f, const JointDistribution& d, int n,
                                 const std::vector<double>& eps_grid) {
    if (d.e_count() != 1)
        throw ValidationError("exact enumeration needs a trial model without side information");
    if (n < 1) throw ValidationError("trial count must be positive");
    const Scenario& sc = d.scenario;
    if ((long long)f.values.size() != sc.cell_count())
        throw ValidationError("factor table does not match the scenario");
    for (double eps : eps_grid)
        if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("epsilon grid must lie in (0,1)");

    struct Cell {
        double prob, log2_f, log2_cond;
    };
    std::vector<Cell> cells;
    const long long Z = sc.settings_count(), K = sc.outcomes_count();
    for (long long z = 0; z < Z; ++z)
        for (long long c = 0; c < K; ++c) {
            double p = d.at(0, z, c);
            if (p <= 0.0) continue;
            cells.push_back({p, std::log2(f.values[(size_t)(z * K + c)]),
                             std::log2(d.conditional(0, z, c))});
        }
    double sequences = std::pow((double)cells.size(), n);
    if (sequences > 4.2e6) throw ValidationError("state space too large to enumerate");

    // statistic t = beta*log2 mu(C|Z) + log2 prod F; the threshold event is
    // t >= -log2 eps
    std::vector<std::pair<double, double>> seqs;  // (t, probability)
    seqs.reserve((size_t)sequences);
    double moment = 0.0, moment_comp = 0.0;
    std::vector<size_t> idx((size_t)n, 0);
    for (;;) {
        double prob = 1.0, lf = 0.0, lc = 0.0;
        for (int i = 0; i < n; ++i) {
            const Cell& cl = cells[idx[(size_t)i]];
            prob *= cl.prob;
            lf += cl.log2_f;
            lc += cl.log2_cond;
        }
        seqs.push_back({f.beta * lc + lf, prob});
        add_compensated(moment, moment_comp, prob * std::exp2(lf + f.beta * lc));
        int pos = n - 1;
        while (pos >= 0 && ++idx[(size_t)pos] == cells.size()) idx[(size_t)pos--] = 0;
        if (pos < 0) break;
    }

    std::sort(seqs.begin(), seqs.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> prefix(seqs.size() + 1, 0.0);
    double sum = 0.0, comp = 0.0;
    for (size_t i = 0; i < seqs.size(); ++i) {
        add_compensated(sum, comp, seqs[i].second);
        prefix[i + 1] = sum + comp;
    }

    ExactTailReport rep;
    rep.product_moment = moment + moment_comp;
    rep.max_excess = -1e300;
    for (double eps : eps_grid) {
        double tau = -std::log2(eps);
        // number of sequences with t >= tau
        size_t lo = 0, hi = seqs.size();
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (seqs[mid].first >= tau)
                lo = mid + 1;
            else
                hi = mid;
        }
        double excess = prefix[lo] - eps;
        if (excess > rep.max_excess) {
            rep.max_excess = excess;
            rep.worst_epsilon = eps;
        }
    }
    rep.pass = rep.max_excess <= 1e-12;
    return rep;
}

ModelCheckReport model_check(const AttackModel& a, int n) {
    if (n < 1 || n > 3) throw ValidationError("model check enumerates one to three trials");
    const JointDistribution& d = a.single_trial;
    const Scenario& sc = d.scenario;
    const long long Z = sc.settings_count(), K = sc.outcomes_count(), E = d.e_count();
    const long long D = E * Z * K;
    double seq_count = std::pow((double)D, n);
    if (seq_count > 4.2e6) throw ValidationError("state space too large to enumerate");

    std::vector<double> s_marginal((size_t)Z, 0.0);
    for (long long e = 0; e < E; ++e)
        for (long long z = 0; z < Z; ++z) s_marginal[(size_t)z] += d.settings_mass(e, z);

    const long long total = (long long)seq_count;
    std::vector<double> probs((size_t)total);
    for (long long flat = 0; flat < total; ++flat) {
        double p = 1.0;
        long long rest = flat;
        for (int j = 0; j < n; ++j) {
            long long digit = rest % D;
            rest /= D;
            p *= d.probs[(size_t)digit];
        }
        probs[(size_t)flat] = p;
    }

    ModelCheckReport rep;
    for (int i = 0; i < n; ++i) {
        long long suffix = 1;
        for (int j = i + 1; j < n; ++j) suffix *= D;
        long long prefix_count = total / (suffix * D);
        std::vector<double> mass_e((size_t)(prefix_count * E), 0.0);
        std::vector<double> mass_ez((size_t)(prefix_count * E * Z), 0.0);
        std::vector<double> mass_ezc((size_t)(prefix_count * E * Z * K), 0.0);
        for (long long flat = 0; flat < total; ++flat) {
            long long digit = (flat / suffix) % D;
            long long prefix = flat / (suffix * D);
            long long e = digit / (Z * K), z = (digit / K) % Z, c = digit % K;
            long long be = prefix * E + e;
            mass_e[(size_t)be] += probs[(size_t)flat];
            mass_ez[(size_t)(be * Z + z)] += probs[(size_t)flat];
            mass_ezc[(size_t)((be * Z + z) * K + c)] += probs[(size_t)flat];
        }
        for (long long be = 0; be < prefix_count * E; ++be) {
            if (mass_e[(size_t)be] <= 1e-15) continue;
            long long e = be % E;
            for (long long z = 0; z < Z; ++z) {
                double cond_z = mass_ez[(size_t)(be * Z + z)] / mass_e[(size_t)be];
                rep.settings_residual =
                    std::max(rep.settings_residual, std::abs(cond_z - s_marginal[(size_t)z]));
                if (mass_ez[(size_t)(be * Z + z)] <= 1e-15) continue;
                for (long long c = 0; c < K; ++c) {
                    double cond_c =
                        mass_ezc[(size_t)((be * Z + z) * K + c)] / mass_ez[(size_t)(be * Z + z)];
                    rep.behaviour_residual =
                        std::max(rep.behaviour_residual, std::abs(cond_c - d.conditional(e, z, c)));
                }
            }
        }
    }
    return rep;
}

AttackTrace attack_trace(const AttackModel& a, long long n, std::uint64_t seed) {
    const JointDistribution& d = a.single_trial;
    const Scenario& sc = d.scenario;
    const long long Z = sc.settings_count(), K = sc.outcomes_count(), E = d.e_count();

    AttackTrace trace;
    trace.trials = simulate(d, n, seed);
    trace.e_frequency.assign((size_t)E, 0.0);

    std::vector<double> cnt_ezc((size_t)(E * Z * K), 0.0);
    std::vector<double> cnt_z((size_t)Z, 0.0), cnt_zc((size_t)(Z * K), 0.0);
    for (const TrialRecord& t : trace.trials) {
        long long e = t.e < 0 ? 0 : t.e;
        long long z = settings_index(sc, t.settings), c = outcomes_index(sc, t.outcomes);
        trace.e_frequency[(size_t)e] += 1.0;
        cnt_ezc[(size_t)((e * Z + z) * K + c)] += 1.0;
        cnt_z[(size_t)z] += 1.0;
        cnt_zc[(size_t)(z * K + c)] += 1.0;
    }
    if (n > 0)
        for (double& v : trace.e_frequency) v /= (double)n;

    for (long long e = 0; e < E; ++e)
        for (long long z = 0; z < Z; ++z) {
            double ez = 0.0;
            for (long long c = 0; c < K; ++c) ez += cnt_ezc[(size_t)((e * Z + z) * K + c)];
            if (ez <= 0.0) continue;
            for (long long c = 0; c < K; ++c) {
                double dev = std::abs(cnt_ezc[(size_t)((e * Z + z) * K + c)] / ez -
                                      d.conditional(e, z, c));
                trace.max_component_deviation = std::max(trace.max_component_deviation, dev);
            }
        }

    bool all_settings_seen = true;
    for (long long z = 0; z < Z; ++z) all_settings_seen &= cnt_z[(size_t)z] > 0.0;
    if (sc == scenario_222() && all_settings_seen) {
        std::vector<double> emp((size_t)(Z * K), 0.0);
        for (long long z = 0; z < Z; ++z)
            for (long long c = 0; c < K; ++c)
                emp[(size_t)(z * K + c)] = cnt_zc[(size_t)(z * K + c)] / cnt_z[(size_t)z];
        trace.marginal_chsh = chsh_value(make_behaviour(sc, emp), 0, 0, 0);
    }
    return trace;
}

}  // namespace pefcert
