#include "pefcert/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pefcert/errors.hpp"

namespace pefcert {

namespace {

std::string json_string(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += ch;
        }
    }
    out += '"';
    return out;
}

std::string double_array(const std::vector<double>& v) {
    std::string out = "[";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    out += ']';
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string behaviour_json(const Behaviour& b, const SettingsDistribution* settings) {
    std::string out = "{\n";
    out += "  \"scenario\": [" + std::to_string(b.scenario.parties) + "," +
           std::to_string(b.scenario.settings_per_party) + "," +
           std::to_string(b.scenario.outcomes_per_setting) + "],\n";
    out += "  \"order\": \"lex\",\n";
    out += "  \"probs\": " + double_array(b.probs);
    if (settings != nullptr) out += ",\n  \"settings\": " + double_array(settings->probs);
    out += "\n}\n";
    return out;
}

BehaviourFile parse_behaviour_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed behaviour JSON: ") + e.what());
    }
    try {
        if (!j.contains("scenario") || !j["scenario"].is_array() || j["scenario"].size() != 3)
            throw ValidationError("behaviour JSON needs \"scenario\": [parties,settings,outcomes]");
        Scenario sc{j["scenario"][0].get<int>(), j["scenario"][1].get<int>(),
                    j["scenario"][2].get<int>()};
        if (j.contains("order") && j["order"].get<std::string>() != "lex")
            throw ValidationError("unsupported coordinate order");
        if (!j.contains("probs") || !j["probs"].is_array())
            throw ValidationError("behaviour JSON needs a \"probs\" array");
        BehaviourFile out{make_behaviour(sc, j["probs"].get<std::vector<double>>()), std::nullopt};
        if (j.contains("settings"))
            out.settings = make_settings(sc, j["settings"].get<std::vector<double>>());
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed behaviour JSON: ") + e.what());
    }
}

BehaviourFile read_behaviour_file(const std::string& path) {
    return parse_behaviour_json(read_text_file(path));
}

std::string decomposition_json(const AttackDecomposition& d) {
    std::string out = "{\n";
    if (d.pr)
        out += "  \"pr\": [" + std::to_string((*d.pr)[0]) + "," + std::to_string((*d.pr)[1]) +
               "," + std::to_string((*d.pr)[2]) + "],\n";
    else
        out += "  \"pr\": null,\n";
    out += "  \"lambda_pr\": " + format_double(d.lambda_pr) + ",\n";
    out += "  \"ld_weights\": {";
    bool first = true;
    for (const auto& [label, w] : d.ld_weights) {
        if (!first) out += ", ";
        first = false;
        out += json_string(label) + ": " + format_double(w);
    }
    out += "},\n";
    out += "  \"entropy_bits\": " + format_double(d.entropy_cost) + ",\n";
    out += "  \"reconstruction_error\": " + format_double(d.reconstruction_error) + "\n";
    out += "}\n";
    return out;
}

std::string attack_json(const AttackModel& a, const std::string& target_ref,
                        double entropy_bits) {
    const JointDistribution& d = a.single_trial;
    std::string out = "{\n";
    out += "  \"target\": " + json_string(target_ref) + ",\n";
    out += "  \"components\": [\n";
    for (long long e = 0; e < d.e_count(); ++e) {
        double w = 0.0;
        for (long long z = 0; z < d.scenario.settings_count(); ++z) w += d.settings_mass(e, z);
        std::string label = d.e_support.empty() ? std::to_string(e) : d.e_support[(size_t)e];
        out += "    {\"e\": " + json_string(label) + ", \"weight\": " + format_double(w) + "}";
        out += e + 1 < d.e_count() ? ",\n" : "\n";
    }
    out += "  ],\n";
    out += "  \"entropy_bits_per_trial\": " + format_double(entropy_bits) + "\n";
    out += "}\n";
    return out;
}

std::string pef_json(const Pef& f, const PefValidity& v) {
    std::string out = "{\n";
    out += "  \"beta\": " + format_double(f.beta) + ",\n";
    out += "  \"values\": " + double_array(f.values) + ",\n";
    out += "  \"model\": \"ns-222\",\n";
    out += "  \"validity\": {\"worst_constraint\": " + format_double(v.worst_constraint) + "}\n";
    out += "}\n";
    return out;
}

std::string trials_csv(const std::vector<TrialRecord>& trials,
                       const std::vector<std::string>& e_support) {
    bool labelled = false;
    for (const TrialRecord& t : trials) labelled |= t.e >= 0;
    std::string out = labelled ? "trial,x,y,a,b,e\n" : "trial,x,y,a,b\n";
    for (const TrialRecord& t : trials) {
        if (t.settings.size() != 2 || t.outcomes.size() != 2)
            throw ValidationError("trial CSV supports two-party records");
        out += std::to_string(t.index) + ',' + std::to_string(t.settings[0]) + ',' +
               std::to_string(t.settings[1]) + ',' + std::to_string(t.outcomes[0]) + ',' +
               std::to_string(t.outcomes[1]);
        if (labelled) {
            out += ',';
            if (t.e >= 0 && (size_t)t.e < e_support.size())
                out += e_support[(size_t)t.e];
            else
                out += std::to_string(t.e);
        }
        out += '\n';
    }
    return out;
}

std::vector<TrialRecord> parse_trials_csv(const std::string& text, const Scenario& sc) {
    if (sc.parties != 2) throw ValidationError("trial CSV supports two-party scenarios");
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty trial file");
    if (line.rfind("trial,x,y,a,b", 0) != 0) throw ValidationError("unrecognized trial CSV header");

    std::vector<TrialRecord> out;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(row, tok, ',')) cols.push_back(tok);
        if (cols.size() < 5) throw ValidationError("trial row has fewer than five columns");
        TrialRecord r;
        try {
            r.index = std::stoll(cols[0]);
            r.settings = {std::stoi(cols[1]), std::stoi(cols[2])};
            r.outcomes = {std::stoi(cols[3]), std::stoi(cols[4])};
        } catch (const std::exception&) {
            throw ValidationError("non-numeric trial row: " + line);
        }
        for (int v : r.settings)
            if (v < 0 || v >= sc.settings_per_party)
                throw ValidationError("setting symbol out of range in trial file");
        for (int v : r.outcomes)
            if (v < 0 || v >= sc.outcomes_per_setting)
                throw ValidationError("outcome symbol out of range in trial file");
        if (r.index != (long long)out.size() + 1)
            throw ValidationError("trial indices must be contiguous from 1");
        out.push_back(std::move(r));
    }
    return out;
}

std::string certificate_json(const Certificate& c, const std::string& input_digest) {
    std::string out = "{\n";
    out += "  \"n\": " + std::to_string(c.n) + ",\n";
    out += "  \"beta\": " + format_double(c.beta) + ",\n";
    out += "  \"epsilon\": " + format_double(c.epsilon) + ",\n";
    out += "  \"log2_p\": " + format_double(c.log2_p) + ",\n";
    out += "  \"kappa\": " + format_double(c.kappa) + ",\n";
    out += "  \"smoothing\": " + format_double(c.smoothing) + ",\n";
    out += "  \"log2_pef_product\": " + format_double(c.log2_pef_product) + ",\n";
    out += std::string("  \"success\": ") + (c.success ? "true" : "false") + ",\n";
    if (c.success) {
        out += "  \"bound_kappa_smooth\": " + format_double(c.bound_kappa_smooth) + ",\n";
        out += "  \"bound_eps_smooth\": " + format_double(c.bound_eps_smooth) + ",\n";
    }
    out += "  \"input_digest\": " + json_string(input_digest) + "\n";
    out += "}\n";
    return out;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << text;
}

}  // namespace pefcert
