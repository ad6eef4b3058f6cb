/// @file graph_stats.hpp
/// @brief Structural and attribution statistics over a frozen graph.

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/graph/property_graph.hpp"

namespace ctirag::graph {

struct GraphStats {
    std::map<std::string, std::size_t> node_counts_by_type;
    std::map<std::string, std::size_t> edge_counts_by_type;
    std::size_t node_total = 0;
    std::size_t edge_total = 0;
    double evidence_coverage = 0.0;
    double source_id_coverage = 0.0;
    double page_coverage = 0.0;
    std::size_t cves_in_text = 0;
    std::size_t cves_as_nodes = 0;
    double cve_recall = 1.0;
    std::size_t country_codes = 0;
    std::size_t country_codes_valid = 0;
    double iso_compliance = 1.0;
};

/// Distinct, uppercased CVE identifiers (`CVE-\d{4}-\d{4,7}`, any case).
std::set<std::string> extract_cve_ids(const std::string& text);

/// Requires a frozen graph (GraphErrc::NotFrozen otherwise). Coverage
/// fractions are 0 on a graph without edges; cve_recall and iso_compliance
/// are 1 when their denominators are empty.
GraphStats compute_stats(const PropertyGraph& graph, const std::vector<std::string>& source_texts);

nlohmann::json to_json(const GraphStats& stats);

}  // namespace ctirag::graph
