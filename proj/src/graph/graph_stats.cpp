#include "ctirag/graph/graph_stats.hpp"

#include <regex>

#include "ctirag/common/text.hpp"

namespace ctirag::graph {

std::set<std::string> extract_cve_ids(const std::string& text) {
    static const std::regex re(R"(\bCVE-\d{4}-\d{4,7}\b)", std::regex::icase);
    std::set<std::string> ids;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        std::string id = it->str();
        for (auto& c : id) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        ids.insert(std::move(id));
    }
    return ids;
}

GraphStats compute_stats(const PropertyGraph& graph, const std::vector<std::string>& source_texts) {
    if (!graph.frozen()) throw GraphError(GraphErrc::NotFrozen, "compute_stats needs a frozen graph");
    GraphStats s;
    s.node_total = graph.node_count();
    s.edge_total = graph.edge_count();
    for (const auto& n : graph.nodes()) ++s.node_counts_by_type[n.label];

    std::size_t evidence = 0, source_id = 0, page = 0;
    for (const auto& e : graph.edges()) {
        ++s.edge_counts_by_type[e.label];
        if (e.property("evidence")) ++evidence;
        if (e.property("source_id")) ++source_id;
        if (e.property("page")) ++page;
    }
    if (s.edge_total > 0) {
        const double total = static_cast<double>(s.edge_total);
        s.evidence_coverage = static_cast<double>(evidence) / total;
        s.source_id_coverage = static_cast<double>(source_id) / total;
        s.page_coverage = static_cast<double>(page) / total;
    }

    std::set<std::string> cves;
    for (const auto& t : source_texts) cves.merge(extract_cve_ids(t));
    s.cves_in_text = cves.size();
    for (const auto& id : cves) {
        if (graph.find_node("CVE", id)) ++s.cves_as_nodes;
    }
    if (s.cves_in_text > 0)
        s.cve_recall = static_cast<double>(s.cves_as_nodes) / static_cast<double>(s.cves_in_text);

    for (NodeId id : graph.nodes_with_label("Country")) {
        const Value* code = graph.node(id).property("code");
        if (!code) continue;
        ++s.country_codes;
        if (code->is_string() && is_iso3166_alpha2(code->as_string())) ++s.country_codes_valid;
    }
    if (s.country_codes > 0)
        s.iso_compliance =
            static_cast<double>(s.country_codes_valid) / static_cast<double>(s.country_codes);
    return s;
}

nlohmann::json to_json(const GraphStats& s) {
    return {{"node_counts_by_type", s.node_counts_by_type},
            {"edge_counts_by_type", s.edge_counts_by_type},
            {"node_total", s.node_total},
            {"edge_total", s.edge_total},
            {"evidence_coverage", s.evidence_coverage},
            {"source_id_coverage", s.source_id_coverage},
            {"page_coverage", s.page_coverage},
            {"cves_in_text", s.cves_in_text},
            {"cves_as_nodes", s.cves_as_nodes},
            {"cve_recall", s.cve_recall},
            {"country_codes", s.country_codes},
            {"country_codes_valid", s.country_codes_valid},
            {"iso_compliance", s.iso_compliance}};
}

}  // namespace ctirag::graph
