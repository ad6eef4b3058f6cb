#include "ctirag/graph/property_graph.hpp"

#include "ctirag/common/text.hpp"

namespace ctirag::graph {

namespace {

const std::vector<NodeId> kNoNodes;

}  // namespace

const Value* Node::property(std::string_view key) const {
    auto it = properties.find(key);
    return it == properties.end() ? nullptr : &it->second;
}

const std::string& Node::name() const {
    static const std::string empty;
    const Value* v = property("name");
    return v && v->is_string() ? v->as_string() : empty;
}

const Value* Edge::property(std::string_view key) const {
    auto it = properties.find(key);
    return it == properties.end() ? nullptr : &it->second;
}

const char* to_string(GraphErrc code) {
    switch (code) {
        case GraphErrc::UnknownLabel: return "UnknownLabel";
        case GraphErrc::MissingName: return "MissingName";
        case GraphErrc::FrozenGraph: return "FrozenGraph";
        case GraphErrc::UnknownRelationship: return "UnknownRelationship";
        case GraphErrc::DanglingEndpoint: return "DanglingEndpoint";
        case GraphErrc::UnknownElement: return "UnknownElement";
        case GraphErrc::NotFrozen: return "NotFrozen";
        case GraphErrc::BadSnapshot: return "BadSnapshot";
    }
    return "GraphError";
}

GraphError::GraphError(GraphErrc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

PropertyGraph::PropertyGraph(const Ontology& ontology) : ontology_(&ontology) {}

std::string PropertyGraph::name_key(std::string_view name) { return text::to_lower(text::trim(name)); }

void PropertyGraph::check_writable() const {
    if (frozen_) throw GraphError(GraphErrc::FrozenGraph, "graph is frozen");
}

NodeId PropertyGraph::merge_node(std::string_view label, const PropertyMap& properties) {
    check_writable();
    auto canonical = ontology_->canonical_entity_type(label);
    if (!canonical) throw GraphError(GraphErrc::UnknownLabel, std::string(label));
    auto name_it = properties.find("name");
    if (name_it == properties.end() || !name_it->second.is_string() ||
        text::trim(name_it->second.as_string()).empty())
        throw GraphError(GraphErrc::MissingName, "node of label " + *canonical + " has no name");

    NodeKey key{*canonical, name_key(name_it->second.as_string())};
    if (auto it = node_index_.find(key); it != node_index_.end()) {
        Node& existing = nodes_[it->second.value];
        for (const auto& [k, v] : properties) {
            if (k == "name") continue;
            if (v.is_null())
                existing.properties.erase(k);
            else
                existing.properties[k] = v;
        }
        return it->second;
    }

    NodeId id{static_cast<std::uint32_t>(nodes_.size())};
    Node node{id, *canonical, {}};
    for (const auto& [k, v] : properties) {
        if (!v.is_null()) node.properties.emplace(k, v);
    }
    node.properties["name"] = Value(text::trim(name_it->second.as_string()));
    nodes_.push_back(std::move(node));
    node_index_.emplace(std::move(key), id);
    by_label_[*canonical].push_back(id);
    out_.emplace_back();
    in_.emplace_back();
    return id;
}

EdgeId PropertyGraph::merge_edge(NodeId source, NodeId target, std::string_view label,
                                 const PropertyMap& properties) {
    check_writable();
    auto canonical = ontology_->canonical_relationship_type(label);
    if (!canonical) throw GraphError(GraphErrc::UnknownRelationship, std::string(label));
    if (!has_node(source) || !has_node(target))
        throw GraphError(GraphErrc::DanglingEndpoint,
                         "edge " + source.str() + "->" + target.str() + " references a missing node");

    EdgeKey key{source.value, target.value, *canonical};
    if (auto it = edge_index_.find(key); it != edge_index_.end()) {
        Edge& existing = edges_[it->second.value];
        for (const auto& [k, v] : properties) {
            if (v.is_null())
                existing.properties.erase(k);
            else
                existing.properties[k] = v;
        }
        return it->second;
    }

    EdgeId id{static_cast<std::uint32_t>(edges_.size())};
    Edge edge{id, source, target, *canonical, {}};
    for (const auto& [k, v] : properties) {
        if (!v.is_null()) edge.properties.emplace(k, v);
    }
    edges_.push_back(std::move(edge));
    edge_index_.emplace(std::move(key), id);
    out_[source.value].push_back(id);
    in_[target.value].push_back(id);
    return id;
}

void PropertyGraph::set_node_property(NodeId id, const std::string& key, const Value& value) {
    check_writable();
    if (!has_node(id)) throw GraphError(GraphErrc::UnknownElement, id.str());
    Node& n = nodes_[id.value];
    if (key == "name") {
        if (!value.is_string() || text::trim(value.as_string()).empty())
            throw GraphError(GraphErrc::MissingName, "name must be a non-empty string");
        NodeKey old_key{n.label, name_key(n.name())};
        NodeKey new_key{n.label, name_key(value.as_string())};
        if (new_key != old_key) {
            if (node_index_.contains(new_key))
                throw GraphError(GraphErrc::MissingName,
                                 "renaming " + n.name() + " collides with an existing node");
            node_index_.erase(old_key);
            node_index_.emplace(std::move(new_key), id);
        }
        n.properties["name"] = Value(text::trim(value.as_string()));
        return;
    }
    if (value.is_null())
        n.properties.erase(key);
    else
        n.properties[key] = value;
}

void PropertyGraph::set_edge_property(EdgeId id, const std::string& key, const Value& value) {
    check_writable();
    if (id.value >= edges_.size()) throw GraphError(GraphErrc::UnknownElement, id.str());
    Edge& e = edges_[id.value];
    if (value.is_null())
        e.properties.erase(key);
    else
        e.properties[key] = value;
}

const Node& PropertyGraph::node(NodeId id) const {
    if (!has_node(id)) throw GraphError(GraphErrc::UnknownElement, id.str());
    return nodes_[id.value];
}

const Edge& PropertyGraph::edge(EdgeId id) const {
    if (id.value >= edges_.size()) throw GraphError(GraphErrc::UnknownElement, id.str());
    return edges_[id.value];
}

std::optional<NodeId> PropertyGraph::find_node(std::string_view label, std::string_view name) const {
    auto canonical = ontology_->canonical_entity_type(label);
    if (!canonical) return std::nullopt;
    auto it = node_index_.find(NodeKey{*canonical, name_key(name)});
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<EdgeId> PropertyGraph::find_edge(NodeId source, NodeId target,
                                               std::string_view label) const {
    auto it = edge_index_.find(EdgeKey{source.value, target.value, std::string(label)});
    if (it == edge_index_.end()) return std::nullopt;
    return it->second;
}

const std::vector<NodeId>& PropertyGraph::nodes_with_label(std::string_view label) const {
    auto it = by_label_.find(label);
    return it == by_label_.end() ? kNoNodes : it->second;
}

const std::vector<EdgeId>& PropertyGraph::out_edges(NodeId id) const {
    if (!has_node(id)) throw GraphError(GraphErrc::UnknownElement, id.str());
    return out_[id.value];
}

const std::vector<EdgeId>& PropertyGraph::in_edges(NodeId id) const {
    if (!has_node(id)) throw GraphError(GraphErrc::UnknownElement, id.str());
    return in_[id.value];
}

nlohmann::json PropertyGraph::to_json() const {
    using nlohmann::json;
    auto props_json = [](const PropertyMap& props) {
        json out = json::object();
        for (const auto& [k, v] : props) out[k] = ctirag::to_json(v);
        return out;
    };
    json doc;
    doc["nodes"] = json::array();
    for (const auto& n : nodes_) {
        doc["nodes"].push_back(
            {{"id", n.id.str()}, {"label", n.label}, {"properties", props_json(n.properties)}});
    }
    doc["edges"] = json::array();
    for (const auto& e : edges_) {
        doc["edges"].push_back({{"id", e.id.str()},
                                {"source", e.source.str()},
                                {"target", e.target.str()},
                                {"label", e.label},
                                {"properties", props_json(e.properties)}});
    }
    return doc;
}

PropertyGraph PropertyGraph::from_json(const nlohmann::json& doc, const Ontology& ontology) {
    PropertyGraph g(ontology);
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges"))
        throw GraphError(GraphErrc::BadSnapshot, "snapshot needs `nodes` and `edges` arrays");
    auto read_props = [](const nlohmann::json& j) {
        PropertyMap props;
        if (j.is_object()) {
            for (auto it = j.begin(); it != j.end(); ++it) props[it.key()] = value_from_json(it.value());
        }
        return props;
    };
    std::map<std::string, NodeId> remap;
    try {
        for (const auto& jn : doc.at("nodes")) {
            NodeId id = g.merge_node(jn.at("label").get<std::string>(),
                                     read_props(jn.value("properties", nlohmann::json::object())));
            remap[jn.at("id").get<std::string>()] = id;
        }
        for (const auto& je : doc.at("edges")) {
            auto s = remap.find(je.at("source").get<std::string>());
            auto t = remap.find(je.at("target").get<std::string>());
            if (s == remap.end() || t == remap.end())
                throw GraphError(GraphErrc::DanglingEndpoint,
                                 "snapshot edge " + je.value("id", std::string("?")) +
                                     " references an unknown node");
            g.merge_edge(s->second, t->second, je.at("label").get<std::string>(),
                         read_props(je.value("properties", nlohmann::json::object())));
        }
    } catch (const nlohmann::json::exception& e) {
        throw GraphError(GraphErrc::BadSnapshot, e.what());
    }
    g.freeze();
    return g;
}

}  // namespace ctirag::graph
