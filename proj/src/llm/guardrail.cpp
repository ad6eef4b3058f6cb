#include "ctirag/llm/guardrail.hpp"

#include "ctirag/common/text.hpp"
#include "ctirag/graph/ontology.hpp"

namespace ctirag::llm {

const char* to_string(GuardrailVerdict v) { return v == GuardrailVerdict::Accept ? "ACCEPT" : "REJECT"; }

const std::set<std::string>& Guardrail::default_keywords() {
    static const std::set<std::string> kWords = [] {
        std::set<std::string> w = {
            "cve",        "cves",        "malware",     "ransomware",  "threat",      "threats",    "actor",
            "actors",     "apt",         "attack",      "attacks",     "attacked",    "attacker",   "attackers",
            "exploit",    "exploits",    "exploited",   "exploitation", "vulnerability", "vulnerabilities",
            "campaign",   "campaigns",   "phishing",    "sector",      "sectors",     "c2",         "ioc",
            "iocs",       "indicator",   "indicators",  "ttp",         "ttps",        "technique",  "techniques",
            "tactic",     "tactics",     "mitre",       "backdoor",    "trojan",      "botnet",     "breach",
            "breaches",   "intrusion",   "espionage",   "cyber",       "cybersecurity", "security", "hacker",
            "hackers",    "hacking",     "payload",     "loader",      "stealer",     "infostealer", "cvss",
            "advisory",   "incident",    "incidents",   "victim",      "victims",     "mitigation", "mitigations",
            "patch",      "ddos",        "spyware",     "worm",       "rootkit",
            "credential", "credentials", "lateral",     "persistence", "exfiltration", "infrastructure",
            "targeted",   "targets",     "targeting",   "attribution", "attributed",  "alias",      "aliases",
            "motivation", "capability",  "capabilities", "tool",       "tools",       "threatactor"};
        for (const auto& l : graph::Ontology::cti().entity_types())
            for (const auto& t : text::normalize_tokens(l)) w.insert(t);
        return w;
    }();
    return kWords;
}

Guardrail::Guardrail() : keywords_(default_keywords()) {}

Guardrail::Guardrail(std::set<std::string> keywords, std::vector<std::string> entity_names)
    : keywords_(std::move(keywords)) {
    add_entities(entity_names);
}

void Guardrail::add_entities(const std::vector<std::string>& names) {
    for (const auto& n : names) {
        std::string t = text::trim(n);
        if (t.size() >= 2) entities_.push_back(t);
    }
}

GuardrailVerdict Guardrail::check(std::string_view question) const {
    const auto tokens = text::normalize_tokens(question);
    if (tokens.empty()) return GuardrailVerdict::Reject;
    for (const auto& t : tokens)
        if (keywords_.count(t)) return GuardrailVerdict::Accept;
    for (const auto& e : entities_)
        if (text::contains_phrase(question, e)) return GuardrailVerdict::Accept;
    return GuardrailVerdict::Reject;
}

}  // namespace ctirag::llm
