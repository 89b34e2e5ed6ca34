#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pefcert/behaviour.hpp"
#include "pefcert/entropy.hpp"
#include "pefcert/pef.hpp"
#include "pefcert/polytope.hpp"
#include "pefcert/protocol.hpp"

namespace pefcert {

// Decimal rendering at 17 significant digits (round-trips any double).
std::string format_double(double v);

struct BehaviourFile {
    Behaviour behaviour;
    std::optional<SettingsDistribution> settings;
};

// {"scenario":[n,m,k],"order":"lex","probs":[...],"settings":[...]}
std::string behaviour_json(const Behaviour& b, const SettingsDistribution* settings);
BehaviourFile parse_behaviour_json(const std::string& text);
BehaviourFile read_behaviour_file(const std::string& path);

std::string decomposition_json(const AttackDecomposition& d);
std::string attack_json(const AttackModel& a, const std::string& target_ref, double entropy_bits);
std::string pef_json(const Pef& f, const PefValidity& v);

// header "trial,x,y,a,b[,e]"; the e column appears when any record carries a
// label and holds the label text when e_support names it
std::string trials_csv(const std::vector<TrialRecord>& trials,
                       const std::vector<std::string>& e_support);
std::vector<TrialRecord> parse_trials_csv(const std::string& text, const Scenario& sc);

std::string certificate_json(const Certificate& c, const std::string& input_digest);

// FNV-1a 64-bit digest as 16 hex characters.
std::string fnv1a_hex(const std::string& bytes);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace pefcert
