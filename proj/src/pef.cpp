#include "pefcert/pef.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "pefcert/boxes.hpp"
#include "pefcert/errors.hpp"
#include "pefcert/polytope.hpp"

namespace pefcert {

namespace {

constexpr double kValidityTol = 1e-9;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

void check_extremals(const Scenario& sc, const std::vector<JointDistribution>& ext) {
    if (ext.empty()) throw ValidationError("extremal list is empty");
    for (const JointDistribution& e : ext) {
        if (!(e.scenario == sc)) throw ValidationError("extremal scenario mismatch");
        if (e.e_count() != 1) throw ValidationError("extremals must not carry side information");
    }
}

// Constraint row of one extremal: value(F) = sum_i w_i F_i with
// w_i = sigma(c,z) sigma(c|z)^beta.
std::vector<double> constraint_row(const JointDistribution& sigma, double beta) {
    const long long Z = sigma.scenario.settings_count(), K = sigma.scenario.outcomes_count();
    std::vector<double> w((size_t)(Z * K), 0.0);
    for (long long z = 0; z < Z; ++z)
        for (long long c = 0; c < K; ++c) {
            double mass = sigma.at(0, z, c);
            if (mass > 0.0)
                w[(size_t)(z * K + c)] = mass * std::pow(sigma.conditional(0, z, c), beta);
        }
    return w;
}

double row_value(const std::vector<double>& w, const std::vector<double>& f) {
    double v = 0.0;
    for (size_t i = 0; i < w.size(); ++i) v += w[i] * f[i];
    return v;
}

PefValidity check_values(const std::vector<double>& values, double beta,
                         const std::vector<JointDistribution>& ext) {
    if (!(beta > 0.0)) throw ValidationError("beta must be positive");
    check_extremals(ext.front().scenario, ext);
    const size_t cells = (size_t)(ext.front().scenario.settings_count() *
                                  ext.front().scenario.outcomes_count());
    if (values.size() != cells) throw ValidationError("value vector size mismatch");
    PefValidity out;
    out.worst_constraint = -kInfinity;
    for (const JointDistribution& sigma : ext)
        out.worst_constraint = std::max(out.worst_constraint, row_value(constraint_row(sigma, beta), values));
    out.valid = out.worst_constraint <= 1.0 + kValidityTol;
    return out;
}

// ---- Optimizer ---------------------------------------------------------

struct Workspace {
    std::vector<std::vector<double>> w;  // one constraint row per extremal
    std::vector<double> rho;             // target joint masses over cells
    std::vector<size_t> support;         // cells with rho > 0
    double f_min = 1e-12;
};

double worst_value(const Workspace& ws, const std::vector<double>& f) {
    double v = -kInfinity;
    for (const auto& row : ws.w) v = std::max(v, row_value(row, f));
    return v;
}

struct Candidate {
    std::vector<double> f;
    double kkt = kInfinity;
    bool ok = false;
    double objective = -kInfinity;  // E_rho[log2 F], filled after rescale
};

// Multiplier polish on a working active set.  Stationarity of the Lagrangian
// pins F_i = rho_i / sum_j lam_j w_ji (floored at f_min), so the multipliers
// are the only unknowns; Newton drives the active constraint values to 1,
// then the set is refined by dropping negative multipliers and adding
// violated constraints.
Candidate polish(const Workspace& ws, std::vector<int> active, std::vector<double> lam) {
    Candidate out;
    const size_t cells = ws.rho.size();
    const int m = (int)ws.w.size();

    std::vector<double> f(cells, ws.f_min);
    auto compute_f = [&](const Eigen::VectorXd& l) {
        for (size_t i : ws.support) {
            double denom = 0.0;
            for (int a = 0; a < (int)active.size(); ++a) denom += l(a) * ws.w[(size_t)active[(size_t)a]][i];
            double v = denom > 0.0 ? ws.rho[i] / denom : 1e30;
            f[i] = std::clamp(v, ws.f_min, 1e30);
        }
    };
    auto residuals = [&](Eigen::VectorXd& phi) {
        for (int a = 0; a < (int)active.size(); ++a)
            phi(a) = row_value(ws.w[(size_t)active[(size_t)a]], f) - 1.0;
    };

    for (int round = 0; round < 40; ++round) {
        if (active.empty()) return out;
        const int na = (int)active.size();
        Eigen::VectorXd l(na);
        for (int a = 0; a < na; ++a) l(a) = std::max(lam[(size_t)a], 1e-12);

        bool newton_ok = false;
        for (int it = 0; it < 120; ++it) {
            compute_f(l);
            Eigen::VectorXd phi(na);
            residuals(phi);
            if (phi.lpNorm<Eigen::Infinity>() < 1e-13) {
                newton_ok = true;
                break;
            }
            Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(na, na);
            for (size_t i : ws.support) {
                if (f[i] <= ws.f_min || f[i] >= 1e30) continue;  // clamped, zero derivative
                double fi2 = f[i] * f[i] / ws.rho[i];
                for (int a = 0; a < na; ++a) {
                    double wa = ws.w[(size_t)active[(size_t)a]][i];
                    if (wa == 0.0) continue;
                    for (int b = a; b < na; ++b)
                        mm(a, b) += wa * ws.w[(size_t)active[(size_t)b]][i] * fi2;
                }
            }
            for (int a = 0; a < na; ++a)
                for (int b = a + 1; b < na; ++b) mm(b, a) = mm(a, b);
            mm.diagonal().array() += 1e-14;
            Eigen::VectorXd step = mm.ldlt().solve(phi);

            double base = phi.norm();
            double alpha = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 45; ++ls) {
                Eigen::VectorXd cand = l + alpha * step;
                compute_f(cand);
                Eigen::VectorXd pc(na);
                residuals(pc);
                if (pc.norm() < base * (1.0 - 1e-4 * alpha)) {
                    l = cand;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved) break;
        }
        if (!newton_ok) return out;

        // drop constraints with negative multipliers
        std::vector<int> keep;
        std::vector<double> keep_lam;
        for (int a = 0; a < na; ++a)
            if (l(a) >= -1e-12) {
                keep.push_back(active[(size_t)a]);
                keep_lam.push_back(std::max(l(a), 0.0));
            }
        if ((int)keep.size() != na) {
            active = std::move(keep);
            lam = std::move(keep_lam);
            continue;
        }

        // add the most violated inactive constraint, if any
        compute_f(l);
        int worst_j = -1;
        double worst_v = 1e-12;
        for (int j = 0; j < m; ++j) {
            if (std::find(active.begin(), active.end(), j) != active.end()) continue;
            double v = row_value(ws.w[(size_t)j], f) - 1.0;
            if (v > worst_v) {
                worst_v = v;
                worst_j = j;
            }
        }
        if (worst_j >= 0) {
            active.push_back(worst_j);
            lam.assign(active.size(), 0.0);
            for (int a = 0; a < na; ++a) lam[(size_t)a] = l(a);
            lam.back() = 1e-6;
            continue;
        }

        // success: assemble the residual measure
        double kkt = 0.0;
        Eigen::VectorXd phi(na);
        residuals(phi);
        kkt = std::max(kkt, phi.lpNorm<Eigen::Infinity>());
        for (int j = 0; j < m; ++j)
            kkt = std::max(kkt, row_value(ws.w[(size_t)j], f) - 1.0);
        for (size_t i : ws.support) {
            if (f[i] >= 1e30) return out;  // unbounded coordinate, wrong set
            if (f[i] <= ws.f_min) {
                double denom = 0.0;
                for (int a = 0; a < na; ++a) denom += l(a) * ws.w[(size_t)active[(size_t)a]][i];
                kkt = std::max(kkt, ws.rho[i] - ws.f_min * denom);
            }
        }
        out.f = f;
        out.kkt = kkt;
        out.ok = kkt < 1e-6;
        return out;
    }
    return out;
}

struct BarrierOut {
    std::vector<double> f;
    std::vector<double> lam;   // multiplier estimates per constraint
    std::vector<int> active;
};

// Interior-point phase: maximize sum rho_i u_i + (1/t) sum_j ln(1 - value_j)
// over u = ln F on the support, for an increasing ladder of t.
BarrierOut barrier(const Workspace& ws, std::vector<double> f0) {
    const auto& sup = ws.support;
    const int m = (int)ws.w.size();
    std::vector<double> u(sup.size());
    for (size_t k = 0; k < sup.size(); ++k) u[k] = std::log(f0[sup[k]]);

    std::vector<double> f = f0;
    std::vector<double> h((size_t)m);
    auto eval = [&](const std::vector<double>& uu, double t, double* bval) -> bool {
        for (size_t k = 0; k < sup.size(); ++k) f[sup[k]] = std::exp(uu[k]);
        double b = 0.0;
        for (size_t k = 0; k < sup.size(); ++k) b += ws.rho[sup[k]] * uu[k];
        for (int j = 0; j < m; ++j) {
            h[(size_t)j] = 1.0 - row_value(ws.w[(size_t)j], f);
            if (h[(size_t)j] <= 0.0) return false;
            b += std::log(h[(size_t)j]) / t;
        }
        if (bval) *bval = b;
        return true;
    };

    double t = 10.0, tf = 10.0;
    std::vector<double> grad(sup.size()), trial(sup.size());
    for (int stage = 0; stage < 9; ++stage, t *= 10.0) {
        tf = t;
        for (int it = 0; it < 300; ++it) {
            double b0 = 0.0;
            if (!eval(u, t, &b0)) break;  // cannot happen while line search guards
            double gmax = 0.0;
            for (size_t k = 0; k < sup.size(); ++k) {
                double g = ws.rho[sup[k]];
                for (int j = 0; j < m; ++j)
                    g -= ws.w[(size_t)j][sup[k]] * f[sup[k]] / (t * h[(size_t)j]);
                grad[k] = g;
                gmax = std::max(gmax, std::abs(g));
            }
            if (gmax < 1e-11) break;
            double alpha = 1.0 / (1.0 + gmax);
            bool moved = false;
            for (int ls = 0; ls < 50; ++ls) {
                for (size_t k = 0; k < sup.size(); ++k) trial[k] = u[k] + alpha * grad[k];
                double b1 = 0.0;
                if (eval(trial, t, &b1) && b1 > b0) {
                    u = trial;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved) break;
        }
    }

    BarrierOut out;
    eval(u, tf, nullptr);
    out.f = f;
    out.lam.resize((size_t)m);
    for (int j = 0; j < m; ++j) out.lam[(size_t)j] = 1.0 / (tf * h[(size_t)j]);
    double peak = *std::max_element(out.lam.begin(), out.lam.end());
    for (int j = 0; j < m; ++j)
        if (h[(size_t)j] < 1e-5 || out.lam[(size_t)j] > 1e-6 * peak) out.active.push_back(j);
    if (out.active.empty())
        out.active.push_back((int)(std::max_element(out.lam.begin(), out.lam.end()) - out.lam.begin()));
    return out;
}

// Active set guess from the target's own nonlocal decomposition: the violated
// extremal box plus the eight deterministic boxes of its facet.
std::optional<std::vector<int>> attack_active_set(const JointDistribution& target) {
    if (!(target.scenario == scenario_222())) return std::nullopt;
    try {
        BehaviourAndSettings bs = split_joint(target);
        auto v = violated_inequality(bs.behaviour);
        if (!v) return std::nullopt;
        const auto& fc = *v;
        std::vector<int> active{4 * fc[0] + 2 * fc[1] + fc[2]};
        for (int code : facet_ld_codes(fc[0], fc[1], fc[2])) {
            int al = (code >> 3) & 1, be = (code >> 2) & 1, ga = (code >> 1) & 1, de = code & 1;
            int a0 = be, a1 = al ^ be, b0 = de, b1 = ga ^ de;
            active.push_back(8 + (a0 << 3 | a1 << 2 | b0 << 1 | b1));
        }
        return active;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void finalize(const Workspace& ws, Candidate& c) {
    double v = worst_value(ws, c.f);
    if (v > 0.0)
        for (double& x : c.f) x = std::max(x / v, ws.f_min);
    c.objective = 0.0;
    for (size_t i : ws.support) c.objective += ws.rho[i] * std::log2(c.f[i]);
}

}  // namespace

Pef make_pef(std::vector<double> values, double beta) {
    if (!(beta > 0.0)) throw ValidationError("beta must be positive");
    if (values.empty()) throw ValidationError("empty value vector");
    for (double v : values)
        if (!(v > 0.0) || !std::isfinite(v))
            throw ValidationError("values must be strictly positive and finite");
    return Pef{std::move(values), beta};
}

std::vector<JointDistribution> ns_extremals_222(const SettingsDistribution& s) {
    std::vector<JointDistribution> out;
    out.reserve(24);
    for (int f = 0; f < 8; ++f) out.push_back(joint(pr_box((f >> 2) & 1, (f >> 1) & 1, f & 1), s));
    for (const Behaviour& b : ld_enumerate(scenario_222())) out.push_back(joint(b, s));
    return out;
}

PefValidity is_valid_pef(const Pef& f, const std::vector<JointDistribution>& extremals) {
    return check_values(f.values, f.beta, extremals);
}

PefValidity pef_constraint_report(const std::vector<double>& values, double beta,
                                  const std::vector<JointDistribution>& extremals) {
    for (double v : values)
        if (v < 0.0 || !std::isfinite(v)) throw ValidationError("values must be nonnegative");
    return check_values(values, beta, extremals);
}

PefOptResult optimize_pef(const PefOptConfig& cfg, const std::vector<JointDistribution>& extremals) {
    if (!(cfg.beta > 0.0)) throw ValidationError("beta must be positive");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw ValidationError("epsilon must lie in (0,1)");
    if (cfg.n < 1) throw ValidationError("n must be positive");
    if (!(cfg.f_min > 0.0 && cfg.f_min <= 1.0)) throw ValidationError("f_min must lie in (0,1]");
    if (cfg.target.e_count() != 1) throw ValidationError("target must not carry side information");
    check_extremals(cfg.target.scenario, extremals);

    Workspace ws;
    ws.f_min = cfg.f_min;
    ws.rho = cfg.target.probs;
    for (size_t i = 0; i < ws.rho.size(); ++i)
        if (ws.rho[i] > 0.0) ws.support.push_back(i);
    if (ws.support.empty()) throw ValidationError("target distribution is empty");
    for (const JointDistribution& e : extremals) ws.w.push_back(constraint_row(e, cfg.beta));

    std::vector<Candidate> cands;
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (int r = 0; r < 10; ++r) {
        std::vector<double> f0(ws.rho.size(), ws.f_min);
        for (size_t i : ws.support) f0[i] = r == 0 ? 1.0 : std::exp(noise(rng));
        double v = worst_value(ws, f0);
        for (size_t i : ws.support) f0[i] = std::max(f0[i] / (v * 1.001), ws.f_min);
        BarrierOut b = barrier(ws, f0);
        std::vector<double> lam0;
        for (int j : b.active) lam0.push_back(b.lam[(size_t)j]);
        Candidate c = polish(ws, b.active, lam0);
        if (c.f.empty()) {  // keep the barrier point as a fallback iterate
            c.f = b.f;
            c.kkt = kInfinity;
            c.ok = false;
        }
        finalize(ws, c);
        cands.push_back(std::move(c));
    }
    if (auto act = attack_active_set(cfg.target)) {
        Candidate c = polish(ws, *act, std::vector<double>(act->size(), 1.0 / (double)act->size()));
        if (!c.f.empty()) {
            finalize(ws, c);
            cands.push_back(std::move(c));
        }
    }
    {
        std::vector<int> all_ld(16);
        for (int j = 0; j < 16; ++j) all_ld[(size_t)j] = 8 + j;
        Candidate c = polish(ws, all_ld, std::vector<double>(16, 1.0 / 16.0));
        if (!c.f.empty()) {
            finalize(ws, c);
            cands.push_back(std::move(c));
        }
    }

    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.ok != b.ok) return a.ok;
        return a.objective > b.objective;
    });
    const Candidate& best = cands.front();

    double second = -kInfinity;
    int ok_count = 0;
    for (const Candidate& c : cands)
        if (c.ok) {
            ++ok_count;
            if (ok_count == 2) second = c.objective;
        }
    bool restart_stable = ok_count < 2 || std::abs(best.objective - second) <= 1e-6;

    PefOptResult out;
    out.pef = make_pef(best.f, cfg.beta);
    out.objective = best.objective;
    out.rate = best.objective / cfg.beta;
    out.net_rate = out.rate + std::log2(cfg.epsilon) / ((double)cfg.n * cfg.beta);
    out.worst_constraint = worst_value(ws, best.f);
    out.kkt_residual = best.kkt;
    out.converged = best.ok && restart_stable && out.worst_constraint <= 1.0 + kValidityTol;
    return out;
}

double logprob_rate(const Pef& f, const JointDistribution& d) {
    if (d.e_count() != 1) throw ValidationError("rate target must not carry side information");
    if (d.probs.size() != f.values.size()) throw ValidationError("shape mismatch");
    double obj = 0.0;
    for (size_t i = 0; i < d.probs.size(); ++i)
        if (d.probs[i] > 0.0) obj += d.probs[i] * std::log2(f.values[i]);
    return obj / f.beta;
}

double net_logprob_rate(const Pef& f, const JointDistribution& d, long long n, double epsilon) {
    if (n < 1) throw ValidationError("n must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in (0,1)");
    return logprob_rate(f, d) + std::log2(epsilon) / ((double)n * f.beta);
}

EstimatorValidity is_valid_estimator(const EntropyEstimator& k,
                                     const std::vector<JointDistribution>& extremals) {
    check_extremals(extremals.front().scenario, extremals);
    EstimatorValidity out;
    out.worst_gap = -kInfinity;
    for (const JointDistribution& sigma : extremals) {
        if (sigma.probs.size() != k.values.size()) throw ValidationError("shape mismatch");
        double gap = 0.0;
        for (size_t i = 0; i < k.values.size(); ++i) {
            double mass = sigma.probs[i];
            if (mass <= 0.0) continue;
            long long z = (long long)i / sigma.scenario.outcomes_count();
            long long c = (long long)i % sigma.scenario.outcomes_count();
            gap += mass * (k.values[i] + std::log2(sigma.conditional(0, z, c)));
        }
        out.worst_gap = std::max(out.worst_gap, gap);
    }
    out.valid = out.worst_gap <= 1e-12;
    return out;
}

EntropyEstimator k_star() {
    std::vector<double> v(16);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    v[(size_t)((2 * x + y) * 4 + 2 * a + b)] = ((a ^ b) == (x & y)) ? 1.0 : -3.0;
    return EntropyEstimator{std::move(v)};
}

Pef pef_from_estimator(const EntropyEstimator& k, double eps,
                       const std::vector<JointDistribution>& extremals) {
    if (!(eps > 0.0 && eps < 0.5)) throw ValidationError("eps must lie in (0, 1/2)");
    EstimatorValidity ev = is_valid_estimator(k, extremals);
    if (!ev.valid) throw ValidationError("estimator violates its defining inequality");

    auto values_at = [&](double gamma) {
        std::vector<double> v(k.values.size());
        for (size_t i = 0; i < v.size(); ++i) v[i] = std::exp2((k.values[i] - eps) * gamma);
        return v;
    };
    auto feasible = [&](double gamma) {
        std::vector<double> v = values_at(gamma);
        double worst = -kInfinity;
        for (const JointDistribution& sigma : extremals)
            worst = std::max(worst, row_value(constraint_row(sigma, gamma), v));
        return worst <= 1.0 + 1e-12;
    };

    double gamma = 1.0;
    int halvings = 0;
    while (!feasible(gamma)) {
        gamma *= 0.5;
        if (++halvings > 200) throw SolverError("no feasible power found for the estimator");
    }
    double lo = gamma, hi;
    if (halvings == 0) {
        hi = 2.0;
        int doublings = 0;
        while (feasible(hi) && doublings < 60) {
            lo = hi;
            hi *= 2.0;
            ++doublings;
        }
        if (doublings == 60) return make_pef(values_at(lo), lo);
    } else {
        hi = gamma * 2.0;
    }
    for (int it = 0; it < 40; ++it) {
        double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            lo = mid;
        else
            hi = mid;
    }
    return make_pef(values_at(lo), lo);
}

RobustnessReport robustness(const Pef& f, const JointDistribution& rho,
                            const JointDistribution& sigma) {
    if (!(rho.scenario == sigma.scenario)) throw ValidationError("scenario mismatch");
    if (rho.e_count() != 1 || sigma.e_count() != 1)
        throw ValidationError("robustness targets must not carry side information");
    if (rho.probs.size() != f.values.size()) throw ValidationError("shape mismatch");

    std::vector<double> logg(f.values.size());
    double top = -kInfinity, bot = kInfinity;
    for (size_t i = 0; i < f.values.size(); ++i) {
        logg[i] = std::log2(f.values[i]) / f.beta;
        top = std::max(top, logg[i]);
        bot = std::min(bot, logg[i]);
    }
    if (top - bot < 1e-12) throw ValidationError("constant function has no robustness scale");

    RobustnessReport out;
    double o_rho = 0.0, o_sigma = 0.0;
    for (size_t i = 0; i < logg.size(); ++i) {
        o_rho += rho.probs[i] * logg[i];
        o_sigma += sigma.probs[i] * logg[i];
        out.tv += std::abs(rho.probs[i] - sigma.probs[i]);
    }
    out.tv *= 0.5;
    out.bound = (top - bot) * out.tv;
    out.actual_gap = std::abs(o_rho - o_sigma);
    if (out.actual_gap > out.bound + 1e-9) throw SolverError("robustness envelope violated");
    out.radius = o_rho / (top - bot);
    return out;
}

BetaThresholdReport beta_threshold_report(const SettingsDistribution& s) {
    BetaThresholdReport rep;
    rep.threshold = std::log2(4.0 / 3.0);
    rep.probe_betas = {rep.threshold, 0.5, 0.7, 1.0};
    std::vector<JointDistribution> ext = ns_extremals_222(s);

    PefOptConfig cfg;
    cfg.target = joint(slice_behaviour(2.6, 0.0), s);
    std::vector<Pef> sols;
    for (double b : rep.probe_betas) {
        cfg.beta = b;
        sols.push_back(optimize_pef(cfg, ext).pef);
    }
    for (size_t a = 1; a < sols.size(); ++a)
        for (size_t i = 0; i < sols[a].values.size(); ++i)
            rep.max_entrywise_diff =
                std::max(rep.max_entrywise_diff, std::abs(sols[a].values[i] - sols[0].values[i]));
    rep.stable_above = rep.max_entrywise_diff <= 1e-6;

    // Indicator counterexample: (1/3) [a xor b = x and y] / s(z).
    std::vector<double> cx(16, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    if ((a ^ b) == (x & y))
                        cx[(size_t)((2 * x + y) * 4 + 2 * a + b)] =
                            (1.0 / 3.0) / s.probs[(size_t)(2 * x + y)];
    PefValidity below = pef_constraint_report(cx, rep.threshold - 0.05, ext);
    PefValidity at = pef_constraint_report(cx, rep.threshold, ext);
    rep.counterexample_pr_below = row_value(constraint_row(ext[0], rep.threshold - 0.05), cx);
    rep.counterexample_worst_at = at.worst_constraint;
    for (int j = 8; j < 24; ++j)
        rep.counterexample_ld.push_back(row_value(constraint_row(ext[(size_t)j], rep.threshold), cx));
    rep.flips_at_threshold = !below.valid && at.valid;
    return rep;
}

}  // namespace pefcert
