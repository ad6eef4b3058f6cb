/// @file property_graph.hpp
/// @brief In-memory labelled property graph with MERGE-style ingestion.

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctirag/common/value.hpp"
#include "ctirag/graph/ontology.hpp"

namespace ctirag::graph {

using PropertyMap = std::map<std::string, Value, std::less<>>;

struct Node {
    NodeId id;
    std::string label;
    PropertyMap properties;

    const Value* property(std::string_view key) const;
    const std::string& name() const;
};

struct Edge {
    EdgeId id;
    NodeId source;
    NodeId target;
    std::string label;
    PropertyMap properties;

    const Value* property(std::string_view key) const;
};

enum class GraphErrc {
    UnknownLabel,
    MissingName,
    FrozenGraph,
    UnknownRelationship,
    DanglingEndpoint,
    UnknownElement,
    NotFrozen,
    BadSnapshot,
};

const char* to_string(GraphErrc code);

class GraphError : public std::runtime_error {
public:
    GraphError(GraphErrc code, const std::string& what);
    GraphErrc code() const { return code_; }

private:
    GraphErrc code_;
};

/// Nodes are keyed by (label, lowercase-trimmed name); edges by
/// (source, target, label). Re-merging unions property maps, new values win.
/// Ids are dense and assigned in creation order, so replaying the same
/// ingestion sequence yields the same ids.
class PropertyGraph {
public:
    explicit PropertyGraph(const Ontology& ontology = Ontology::cti());

    NodeId merge_node(std::string_view label, const PropertyMap& properties);
    EdgeId merge_edge(NodeId source, NodeId target, std::string_view label,
                      const PropertyMap& properties);

    /// A null value removes the property. Renaming a node through `name` is
    /// refused when it would collide with another node's key.
    void set_node_property(NodeId id, const std::string& key, const Value& value);
    void set_edge_property(EdgeId id, const std::string& key, const Value& value);

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    const Ontology& ontology() const { return *ontology_; }

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    const Node& node(NodeId id) const;
    const Edge& edge(EdgeId id) const;
    bool has_node(NodeId id) const { return id.value < nodes_.size(); }

    std::optional<NodeId> find_node(std::string_view label, std::string_view name) const;
    std::optional<EdgeId> find_edge(NodeId source, NodeId target, std::string_view label) const;
    const std::vector<NodeId>& nodes_with_label(std::string_view label) const;
    const std::vector<EdgeId>& out_edges(NodeId id) const;
    const std::vector<EdgeId>& in_edges(NodeId id) const;

    /// `{nodes:[{id,label,properties}], edges:[{id,source,target,label,properties}]}`
    nlohmann::json to_json() const;
    /// Rebuilds a graph from a snapshot. Snapshot ids may be arbitrary
    /// strings; they are remapped in document order. The result is frozen.
    static PropertyGraph from_json(const nlohmann::json& doc,
                                   const Ontology& ontology = Ontology::cti());

private:
    using NodeKey = std::pair<std::string, std::string>;
    struct EdgeKey {
        std::uint32_t source;
        std::uint32_t target;
        std::string label;
        auto operator<=>(const EdgeKey&) const = default;
    };

    void check_writable() const;
    static std::string name_key(std::string_view name);

    const Ontology* ontology_;
    bool frozen_ = false;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::map<NodeKey, NodeId> node_index_;
    std::map<EdgeKey, EdgeId> edge_index_;
    std::map<std::string, std::vector<NodeId>, std::less<>> by_label_;
    std::vector<std::vector<EdgeId>> out_;
    std::vector<std::vector<EdgeId>> in_;
};

}  // namespace ctirag::graph
