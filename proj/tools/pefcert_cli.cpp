#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pefcert/behaviour.hpp"
#include "pefcert/boxes.hpp"
#include "pefcert/entropy.hpp"
#include "pefcert/errors.hpp"
#include "pefcert/io.hpp"
#include "pefcert/pef.hpp"
#include "pefcert/polytope.hpp"
#include "pefcert/protocol.hpp"

namespace {

using namespace pefcert;

// JSON config file support: top-level keys are option names, nested objects
// scope options to a subcommand.
class ConfigJson : public CLI::Config {
  public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        nlohmann::json j;
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const std::string& name = opt->get_lnames()[0];
            if (opt->count() > 0)
                j[name] = opt->results().size() == 1 ? nlohmann::json(opt->results()[0])
                                                     : nlohmann::json(opt->results());
            else if (default_also)
                j[name] = opt->get_default_str();
        }
        return j.dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            input >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
        }
        return walk(j, {});
    }

  private:
    static std::string scalar(const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static std::vector<CLI::ConfigItem> walk(const nlohmann::json& j,
                                             std::vector<std::string> prefix) {
        std::vector<CLI::ConfigItem> out;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.value().is_object()) {
                auto deeper = prefix;
                deeper.push_back(it.key());
                auto sub = walk(it.value(), deeper);
                out.insert(out.end(), sub.begin(), sub.end());
                continue;
            }
            CLI::ConfigItem item;
            item.parents = prefix;
            item.name = it.key();
            if (it.value().is_array())
                for (const auto& v : it.value()) item.inputs.push_back(scalar(v));
            else
                item.inputs.push_back(scalar(it.value()));
            out.push_back(std::move(item));
        }
        return out;
    }
};

struct Options {
    std::string behaviour_path;
    std::string trials_path;
    std::string out_path;
    std::string format;
    std::string scenario;
    std::string beta_grid = "1e-3,1e-1,200";
    std::vector<long long> net_n;
    double beta = 0.01;
    double epsilon = 1e-6;
    double kappa = 1.0;
    double p = 0.0;
    bool p_given = false;
    long long n = 1000;
    std::uint64_t seed = 0;
};

void emit(const Options& o, const std::string& text) {
    if (o.out_path.empty())
        std::cout << text;
    else
        write_text_file(o.out_path, text);
}

void require_format(const Options& o, const std::string& natural) {
    if (!o.format.empty() && o.format != natural)
        throw ValidationError("this command only writes " + natural);
}

struct LoadedBehaviour {
    Behaviour behaviour;
    SettingsDistribution settings;
    JointDistribution model;
};

LoadedBehaviour load_behaviour(const Options& o) {
    if (o.behaviour_path.empty()) throw ValidationError("--behaviour FILE is required");
    BehaviourFile bf = read_behaviour_file(o.behaviour_path);
    SettingsDistribution s =
        bf.settings ? *bf.settings : uniform_settings(bf.behaviour.scenario);
    return {bf.behaviour, s, joint(bf.behaviour, s)};
}

Pef optimize_or_fail(const JointDistribution& target, double beta,
                     const std::vector<JointDistribution>& extremals) {
    PefOptConfig cfg;
    cfg.target = target;
    cfg.beta = beta;
    PefOptResult r = optimize_pef(cfg, extremals);
    if (!r.converged) throw SolverError("factor optimization did not converge");
    return r.pef;
}

std::string ld_assignment_label(const Scenario& sc, size_t index) {
    if (sc == scenario_222()) {
        int code = (int)index;
        int a0 = (code >> 3) & 1, a1 = (code >> 2) & 1, b0 = (code >> 1) & 1, b1 = code & 1;
        return ld_label(a0 ^ a1, a0, b0 ^ b1, b0);
    }
    return "LD:" + std::to_string(index);
}

int cmd_optimize(const Options& o) {
    require_format(o, "json");
    LoadedBehaviour lb = load_behaviour(o);
    std::vector<JointDistribution> ext = ns_extremals_222(lb.settings);
    Pef f = optimize_or_fail(lb.model, o.beta, ext);
    emit(o, pef_json(f, is_valid_pef(f, ext)));
    return 0;
}

int cmd_rates(const Options& o) {
    require_format(o, "csv");
    LoadedBehaviour lb = load_behaviour(o);
    std::vector<JointDistribution> ext = ns_extremals_222(lb.settings);

    double lo = 0.0, hi = 0.0;
    int count = 0;
    {
        std::istringstream ss(o.beta_grid);
        char c1 = 0, c2 = 0;
        if (!(ss >> lo >> c1 >> hi >> c2 >> count) || c1 != ',' || c2 != ',')
            throw ValidationError("--beta-grid expects LO,HI,COUNT");
    }
    if (!(lo > 0.0 && hi > lo && count >= 2)) throw ValidationError("bad --beta-grid range");
    if (!(o.epsilon > 0.0 && o.epsilon < 1.0)) throw ValidationError("epsilon must lie in (0,1)");

    std::vector<long long> ns = o.net_n;
    if (ns.empty()) ns = {150000, 240000};
    if (ns.size() == 1) ns.push_back(240000);
    if (ns.size() != 2 || ns[0] < 1 || ns[1] < 1)
        throw ValidationError("rates expects one or two positive trial counts");

    std::string out = "beta,rate,net_rate_n1,net_rate_n2\n";
    std::vector<double> best_net(2, -1e300), best_beta(2, 0.0);
    for (int i = 0; i < count; ++i) {
        double beta = lo * std::pow(hi / lo, (double)i / (count - 1));
        PefOptConfig cfg;
        cfg.target = lb.model;
        cfg.beta = beta;
        PefOptResult r = optimize_pef(cfg, ext);
        if (!r.converged) throw SolverError("factor optimization did not converge");
        double net[2];
        for (int k = 0; k < 2; ++k) {
            net[k] = r.rate + std::log2(o.epsilon) / ((double)ns[(size_t)k] * beta);
            if (net[k] > best_net[(size_t)k]) {
                best_net[(size_t)k] = net[k];
                best_beta[(size_t)k] = beta;
            }
        }
        out += format_double(beta) + "," + format_double(r.rate) + "," + format_double(net[0]) +
               "," + format_double(net[1]) + "\n";
    }
    for (int k = 0; k < 2; ++k)
        out += "# argmax n=" + std::to_string(ns[(size_t)k]) +
               " beta=" + format_double(best_beta[(size_t)k]) +
               " net_rate=" + format_double(best_net[(size_t)k]) + "\n";
    emit(o, out);
    return 0;
}

int cmd_heatmap(const Options& o) {
    require_format(o, "csv");
    SettingsDistribution uniform = uniform_settings(scenario_222());
    std::vector<JointDistribution> ext = ns_extremals_222(uniform);
    JointDistribution anchor = joint(slice_behaviour(2.6, 0.0), uniform);
    Pef coarse = optimize_or_fail(anchor, 0.1, ext);
    Pef fine = optimize_or_fail(anchor, 0.01, ext);

    const int steps = 41;
    const double smax = 2.0 * std::sqrt(2.0);
    std::string out = "s_prime,s,rate_beta_0.1,rate_beta_0.01\n";
    for (int j = 0; j < steps; ++j) {
        double sp = -2.0 + 4.0 * j / (steps - 1);
        for (int i = 0; i < steps; ++i) {
            double s = 2.0 + (smax - 2.0) * i / (steps - 1);
            if (s * s + sp * sp > 8.0 + 1e-12) continue;
            JointDistribution d = joint(slice_behaviour(s, sp), uniform);
            out += format_double(sp) + "," + format_double(s) + "," +
                   format_double(logprob_rate(coarse, d)) + "," +
                   format_double(logprob_rate(fine, d)) + "\n";
        }
    }
    emit(o, out);
    return 0;
}

int cmd_decompose(const Options& o) {
    require_format(o, "json");
    LoadedBehaviour lb = load_behaviour(o);
    emit(o, decomposition_json(decompose_nonlocal(lb.behaviour)));
    return 0;
}

int cmd_attack(const Options& o) {
    require_format(o, "json");
    LoadedBehaviour lb = load_behaviour(o);
    AttackModel a = optimal_iid_attack(lb.behaviour, lb.settings);
    emit(o, attack_json(a, o.behaviour_path, hmin(lb.behaviour, lb.settings)));
    return 0;
}

int cmd_membership(const Options& o) {
    require_format(o, "json");
    LoadedBehaviour lb = load_behaviour(o);
    if (!o.scenario.empty()) {
        std::istringstream ss(o.scenario);
        int n = 0, m = 0, k = 0;
        char c1 = 0, c2 = 0;
        if (!(ss >> n >> c1 >> m >> c2 >> k) || c1 != ',' || c2 != ',')
            throw ValidationError("--scenario expects n,m,k");
        if (!(Scenario{n, m, k} == lb.behaviour.scenario))
            throw ValidationError("behaviour file does not match --scenario");
    }
    MembershipResult m = local_membership(lb.behaviour);
    std::string out = "{\n";
    out += std::string("  \"local\": ") + (m.local ? "true" : "false") + ",\n";
    out += "  \"witness_margin\": " + format_double(m.witness_margin) + ",\n";
    if (lb.behaviour.scenario == scenario_222()) {
        auto v = violated_inequality(lb.behaviour);
        if (v)
            out += "  \"violated_inequality\": [" + std::to_string((*v)[0]) + "," +
                   std::to_string((*v)[1]) + "," + std::to_string((*v)[2]) + "],\n";
        else
            out += "  \"violated_inequality\": null,\n";
    }
    out += "  \"weights\": {";
    bool first = true;
    for (size_t i = 0; i < m.weights.size(); ++i) {
        if (m.weights[i] <= 1e-12) continue;
        if (!first) out += ", ";
        first = false;
        out += "\"" + ld_assignment_label(lb.behaviour.scenario, i) +
               "\": " + format_double(m.weights[i]);
    }
    out += "}\n}\n";
    emit(o, out);
    return 0;
}

int cmd_simulate(const Options& o) {
    require_format(o, "csv");
    LoadedBehaviour lb = load_behaviour(o);
    if (o.n < 0) throw ValidationError("--n must be nonnegative");
    std::vector<TrialRecord> trials = simulate(lb.model, o.n, o.seed);
    emit(o, trials_csv(trials, lb.model.e_support));
    return 0;
}

int cmd_certify(const Options& o) {
    require_format(o, "json");
    if (o.trials_path.empty()) throw ValidationError("certify needs a trial CSV path");
    std::string text = read_text_file(o.trials_path);
    std::vector<TrialRecord> trials = parse_trials_csv(text, scenario_222());
    LoadedBehaviour lb = load_behaviour(o);
    if (!(lb.behaviour.scenario == scenario_222()))
        throw ValidationError("certification supports the two-party binary scenario");
    std::vector<JointDistribution> ext = ns_extremals_222(lb.settings);
    Pef f = optimize_or_fail(lb.model, o.beta, ext);
    double log2_p;
    if (o.p_given)
        log2_p = o.p > 0.0 ? std::log2(o.p) : o.p;
    else
        log2_p = choose_p(f, lb.model, (long long)trials.size(), o.epsilon);
    Certificate cert =
        certify(f, scenario_222(), trials, o.epsilon, log2_p, o.kappa);
    emit(o, certificate_json(cert, fnv1a_hex(text)));
    return 0;
}

int cmd_counterexamples(const Options& o) {
    require_format(o, "json");
    int pair_local = 0;
    for (int f1 = 0; f1 < 8; ++f1)
        for (int f2 = f1 + 1; f2 < 8; ++f2) {
            Behaviour b1 = pr_box((f1 >> 2) & 1, (f1 >> 1) & 1, f1 & 1);
            Behaviour b2 = pr_box((f2 >> 2) & 1, (f2 >> 1) & 1, f2 & 1);
            std::vector<double> mix(16);
            for (size_t i = 0; i < 16; ++i) mix[i] = 0.5 * (b1.probs[i] + b2.probs[i]);
            if (local_membership(make_behaviour(scenario_222(), mix)).local) ++pair_local;
        }

    SpecialBoxes sb = special_boxes();
    std::vector<double> mix223(sb.nl_box_223.probs.size());
    for (size_t i = 0; i < mix223.size(); ++i)
        mix223[i] = 0.5 * (sb.nl_box_223.probs[i] + sb.nl_box_223_relabelled.probs[i]);
    bool nonlocal_223 =
        !local_membership(make_behaviour(sb.nl_box_223.scenario, mix223)).local;

    int nonlocal_232 = 0;
    for (const BoxPair232& pair : sb.nl_boxes_232)
        if (!local_membership(pair.mixture).local) ++nonlocal_232;

    bool nonlocal_322 = !local_membership(sb.ghz_mixture_322).local;

    bool ok = pair_local == 28 && nonlocal_223 && nonlocal_232 == 16 && nonlocal_322;
    std::string out = "{\n";
    out += "  \"pr_pair_mixtures_local\": " + std::to_string(pair_local) + ",\n";
    out += std::string("  \"mixture_223_nonlocal\": ") + (nonlocal_223 ? "true" : "false") + ",\n";
    out += "  \"resolutions_232_nonlocal\": " + std::to_string(nonlocal_232) + ",\n";
    out += std::string("  \"ghz_322_nonlocal\": ") + (nonlocal_322 ? "true" : "false") + ",\n";
    out += std::string("  \"all_expected\": ") + (ok ? "true" : "false") + "\n";
    out += "}\n";
    emit(o, out);
    return ok ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bell-test randomness certification toolkit"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<ConfigJson>());
    app.set_config("--config", "", "JSON config file; flags take precedence");

    Options o;
    auto add_common = [&](CLI::App* cmd, bool needs_behaviour) {
        cmd->fallthrough();  // lets --config reach the root parser
        if (needs_behaviour)
            cmd->add_option("--behaviour", o.behaviour_path, "behaviour JSON file");
        cmd->add_option("--out", o.out_path, "output path (default stdout)");
        cmd->add_option("--format", o.format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
    };

    CLI::App* rates = app.add_subcommand("rates", "sweep the power grid and report rates");
    add_common(rates, true);
    rates->add_option("--beta-grid", o.beta_grid, "LO,HI,COUNT log-spaced sweep");
    rates->add_option("--n", o.net_n, "trial counts for the net-rate columns")->expected(1, 2);
    rates->add_option("--epsilon", o.epsilon, "error bound for net rates");

    CLI::App* heatmap = app.add_subcommand("heatmap", "rate heat map over the slice plane");
    add_common(heatmap, false);

    CLI::App* optimize = app.add_subcommand("optimize", "optimize a factor table");
    add_common(optimize, true);
    optimize->add_option("--beta", o.beta, "factor power");

    CLI::App* decompose = app.add_subcommand("decompose", "attack decomposition of a behaviour");
    add_common(decompose, true);

    CLI::App* attack = app.add_subcommand("attack", "optimal IID attack report");
    add_common(attack, true);

    CLI::App* membership = app.add_subcommand("membership", "local-polytope membership verdict");
    add_common(membership, true);
    membership->add_option("--scenario", o.scenario, "expected scenario n,m,k");

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "sample a seeded trial stream");
    add_common(simulate_cmd, true);
    simulate_cmd->add_option("--n", o.n, "number of trials");
    simulate_cmd->add_option("--seed", o.seed, "generator seed");

    CLI::App* certify_cmd = app.add_subcommand("certify", "certificate from a trial file");
    certify_cmd->add_option("trials", o.trials_path, "trial CSV file")->required();
    add_common(certify_cmd, true);
    certify_cmd->add_option("--beta", o.beta, "factor power");
    certify_cmd->add_option("--epsilon", o.epsilon, "tail error bound");
    certify_cmd->add_option("--kappa", o.kappa, "completeness bound");
    CLI::Option* p_opt =
        certify_cmd->add_option("--p", o.p, "success threshold (plain if > 0, else log2)");

    CLI::App* counterexamples =
        app.add_subcommand("counterexamples", "mixture locality verdict suite");
    add_common(counterexamples, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    o.p_given = p_opt->count() > 0;
    if (certify_cmd->parsed() && certify_cmd->count("--epsilon") == 0) o.epsilon = 1e-4;

    try {
        if (rates->parsed()) return cmd_rates(o);
        if (heatmap->parsed()) return cmd_heatmap(o);
        if (optimize->parsed()) return cmd_optimize(o);
        if (decompose->parsed()) return cmd_decompose(o);
        if (attack->parsed()) return cmd_attack(o);
        if (membership->parsed()) return cmd_membership(o);
        if (simulate_cmd->parsed()) return cmd_simulate(o);
        if (certify_cmd->parsed()) return cmd_certify(o);
        if (counterexamples->parsed()) return cmd_counterexamples(o);
    } catch (const ValidationError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const ResourceError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
