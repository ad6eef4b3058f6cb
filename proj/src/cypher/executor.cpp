#include "ctirag/cypher/executor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>

#include "ctirag/common/text.hpp"
#include "ctirag/cypher/parser.hpp"

namespace ctirag::cypher {

namespace {

using Binding = std::map<std::string, Value, std::less<>>;
using graph::PropertyGraph;

struct Group {
    std::vector<const Binding*> rows;
};

bool is_name_property(const Expr& e) { return e.kind == Expr::Kind::Property && e.name == "name"; }

/// Cypher equality with three-valued logic; nullopt stands for null.
std::optional<bool> equals(const Value& a, const Value& b, bool ci) {
    if (a.is_null() || b.is_null()) return std::nullopt;
    if (a.is_number() && b.is_number()) {
        if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
        return a.as_number() == b.as_number();
    }
    if (a.is_string() && b.is_string()) {
        if (ci) return text::to_lower(a.as_string()) == text::to_lower(b.as_string());
        return a.as_string() == b.as_string();
    }
    if (a.is_list() && b.is_list()) {
        const auto& la = a.as_list();
        const auto& lb = b.as_list();
        if (la.size() != lb.size()) return false;
        bool unknown = false;
        for (std::size_t i = 0; i < la.size(); ++i) {
            auto r = equals(la[i], lb[i], ci);
            if (!r)
                unknown = true;
            else if (!*r)
                return false;
        }
        if (unknown) return std::nullopt;
        return true;
    }
    if (a.data.index() != b.data.index()) return false;
    return a == b;
}

std::optional<int> order(const Value& a, const Value& b) {
    if (a.is_number() && b.is_number()) {
        const double x = a.as_number(), y = b.as_number();
        return x < y ? -1 : (x > y ? 1 : 0);
    }
    if (a.is_string() && b.is_string()) {
        int c = a.as_string().compare(b.as_string());
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    if (a.is_bool() && b.is_bool()) return static_cast<int>(a.as_bool()) - static_cast<int>(b.as_bool());
    return std::nullopt;
}

Value from_tristate(std::optional<bool> b) { return b ? Value(*b) : Value(); }

std::optional<bool> truth(const Value& v) {
    if (v.is_null()) return std::nullopt;
    if (v.is_bool()) return v.as_bool();
    throw CypherRuntimeError("expected a boolean but got " + to_display(v));
}

class Executor {
public:
    Executor(PropertyGraph* mut, const PropertyGraph& g, const ExecOptions& opts)
        : mut_(mut), g_(g), opts_(opts) {}

    ResultTable run(const CypherAst& ast) {
        if (ast.kind == StatementKind::Read && !g_.frozen())
            throw CypherRuntimeError("read queries require a frozen graph");
        if (ast.kind == StatementKind::Write && (mut_ == nullptr || g_.frozen()))
            throw CypherRuntimeError("write statements require a mutable, unfrozen graph");
        std::vector<Binding> rows{Binding{}};
        ResultTable out;
        for (const auto& c : ast.clauses) {
            switch (c.kind) {
                case ClauseKind::Match: rows = match(rows, c, false); break;
                case ClauseKind::OptionalMatch: rows = match(rows, c, true); break;
                case ClauseKind::Merge:
                case ClauseKind::Create: rows = merge(rows, c); break;
                case ClauseKind::Set: set(rows, c.sets, std::nullopt); break;
                case ClauseKind::Return: out = project(rows, c); break;
            }
        }
        return out;
    }

private:
    // ---- pattern matching -------------------------------------------------

    using Emit = std::function<void(const Binding&)>;

    std::vector<Binding> match(const std::vector<Binding>& input, const Clause& c, bool optional) {
        std::vector<Binding> out;
        for (const auto& b : input) {
            std::size_t before = out.size();
            std::vector<std::uint32_t> used;
            match_patterns(c.patterns, 0, b, used, [&](const Binding& m) {
                if (c.where && truth(eval(*c.where, m)) != std::optional<bool>(true)) return;
                out.push_back(m);
                if (out.size() > opts_.max_bindings)
                    throw CypherRuntimeError("query produced more than " +
                                             std::to_string(opts_.max_bindings) + " intermediate rows");
            });
            if (optional && out.size() == before) {
                Binding nb = b;
                for (const auto& p : c.patterns) {
                    for (const auto& n : p.nodes)
                        if (!n.var.empty() && !nb.contains(n.var)) nb[n.var] = Value();
                    for (const auto& r : p.rels)
                        if (!r.var.empty() && !nb.contains(r.var)) nb[r.var] = Value();
                }
                out.push_back(std::move(nb));
            }
        }
        return out;
    }

    void match_patterns(const std::vector<PathPattern>& ps, std::size_t pi, const Binding& b,
                        std::vector<std::uint32_t>& used, const Emit& emit) {
        if (pi == ps.size()) {
            emit(b);
            return;
        }
        const PathPattern& p = ps[pi];
        const NodePattern& first = p.nodes[0];
        auto try_node = [&](NodeId id) {
            Binding nb = b;
            if (!bind_node(first, id, nb)) return;
            match_rels(ps, pi, 0, id, nb, used, emit);
        };
        if (!first.var.empty()) {
            if (auto it = b.find(first.var); it != b.end()) {
                if (it->second.is_node()) try_node(it->second.as_node());
                return;
            }
        }
        if (first.label) {
            for (NodeId id : g_.nodes_with_label(*first.label)) try_node(id);
        } else {
            for (const auto& n : g_.nodes()) try_node(n.id);
        }
    }

    void match_rels(const std::vector<PathPattern>& ps, std::size_t pi, std::size_t ri, NodeId cur,
                    const Binding& b, std::vector<std::uint32_t>& used, const Emit& emit) {
        const PathPattern& p = ps[pi];
        if (ri == p.rels.size()) {
            match_patterns(ps, pi + 1, b, used, emit);
            return;
        }
        const RelPattern& rel = p.rels[ri];
        const NodePattern& next = p.nodes[ri + 1];

        if (!rel.var_length) {
            for_each_step(rel, cur, b, [&](const graph::Edge& e, NodeId other) {
                if (std::find(used.begin(), used.end(), e.id.value) != used.end()) return;
                Binding nb = b;
                if (!rel.var.empty()) {
                    if (auto it = nb.find(rel.var); it != nb.end()) {
                        if (!(it->second.is_edge() && it->second.as_edge() == e.id)) return;
                    } else {
                        nb[rel.var] = Value(e.id);
                    }
                }
                if (!bind_node(next, other, nb)) return;
                used.push_back(e.id.value);
                match_rels(ps, pi, ri + 1, other, nb, used, emit);
                used.pop_back();
            });
            return;
        }

        const std::int64_t max_hops = rel.max_hops.value_or(kMaxVarLengthHops);
        ValueList trail;
        std::function<void(NodeId, std::int64_t)> walk = [&](NodeId at, std::int64_t depth) {
            if (depth >= rel.min_hops) {
                Binding nb = b;
                bool ok = true;
                if (!rel.var.empty()) {
                    if (auto it = nb.find(rel.var); it != nb.end())
                        ok = it->second == Value(trail);
                    else
                        nb[rel.var] = Value(trail);
                }
                if (ok && bind_node(next, at, nb)) match_rels(ps, pi, ri + 1, at, nb, used, emit);
            }
            if (depth == max_hops) return;
            for_each_step(rel, at, b, [&](const graph::Edge& e, NodeId other) {
                if (std::find(used.begin(), used.end(), e.id.value) != used.end()) return;
                used.push_back(e.id.value);
                trail.push_back(Value(e.id));
                walk(other, depth + 1);
                trail.pop_back();
                used.pop_back();
            });
        };
        walk(cur, 0);
    }

    template <typename F>
    void for_each_step(const RelPattern& rel, NodeId cur, const Binding& b, F&& f) {
        auto accept = [&](const graph::Edge& e) {
            if (!rel.types.empty() && std::find(rel.types.begin(), rel.types.end(), e.label) == rel.types.end())
                return false;
            return props_match(rel.props, e.properties, &b);
        };
        if (rel.dir == Direction::Out || rel.dir == Direction::Both) {
            for (EdgeId id : g_.out_edges(cur)) {
                const auto& e = g_.edge(id);
                if (accept(e)) f(e, e.target);
            }
        }
        if (rel.dir == Direction::In || rel.dir == Direction::Both) {
            for (EdgeId id : g_.in_edges(cur)) {
                const auto& e = g_.edge(id);
                if (rel.dir == Direction::Both && e.source == e.target) continue;
                if (accept(e)) f(e, e.source);
            }
        }
    }

    bool props_match(const PropertyPredicates& preds, const graph::PropertyMap& props, const Binding* b) {
        static const Binding empty;
        for (const auto& [key, expr] : preds) {
            Value want = eval(expr, b ? *b : empty);
            auto it = props.find(key);
            if (it == props.end()) return false;
            if (equals(it->second, want, key == "name") != std::optional<bool>(true)) return false;
        }
        return true;
    }

    bool bind_node(const NodePattern& np, NodeId id, Binding& b) {
        const auto& node = g_.node(id);
        if (np.label && node.label != *np.label) return false;
        if (!np.var.empty()) {
            if (auto it = b.find(np.var); it != b.end()) {
                if (!(it->second.is_node() && it->second.as_node() == id)) return false;
            }
        }
        if (!props_match(np.props, node.properties, &b)) return false;
        if (!np.var.empty()) b[np.var] = Value(id);
        return true;
    }

    // ---- writes -------------------------------------------------------------

    graph::PropertyMap eval_props(const PropertyPredicates& preds, const Binding& b) {
        graph::PropertyMap out;
        for (const auto& [key, expr] : preds) {
            Value v = eval(expr, b);
            if (v.is_node() || v.is_edge())
                throw CypherRuntimeError("property " + key + " cannot hold a graph element");
            out[key] = std::move(v);
        }
        return out;
    }

    std::vector<Binding> merge(const std::vector<Binding>& input, const Clause& c) {
        std::vector<Binding> out;
        for (const auto& b0 : input) {
            Binding b = b0;
            const std::size_t nodes_before = g_.node_count();
            const std::size_t edges_before = g_.edge_count();
            try {
                for (const auto& p : c.patterns) {
                    std::vector<NodeId> ids;
                    for (const auto& np : p.nodes) ids.push_back(merge_node(np, b));
                    for (std::size_t i = 0; i < p.rels.size(); ++i) {
                        const RelPattern& rel = p.rels[i];
                        if (rel.types.size() != 1)
                            throw CypherRuntimeError("relationships in MERGE/CREATE need exactly one type");
                        NodeId s = ids[i], t = ids[i + 1];
                        if (rel.dir == Direction::In) std::swap(s, t);
                        EdgeId e = mut_->merge_edge(s, t, rel.types[0], eval_props(rel.props, b));
                        if (!rel.var.empty()) b[rel.var] = Value(e);
                    }
                }
            } catch (const graph::GraphError& e) {
                throw CypherRuntimeError(e.what());
            }
            const bool created = g_.node_count() != nodes_before || g_.edge_count() != edges_before;
            set(std::vector<Binding>{b}, c.sets,
                created ? std::optional(SetItem::When::OnCreate) : std::optional(SetItem::When::OnMatch));
            out.push_back(std::move(b));
        }
        return out;
    }

    NodeId merge_node(const NodePattern& np, Binding& b) {
        if (!np.var.empty()) {
            if (auto it = b.find(np.var); it != b.end()) {
                if (!it->second.is_node())
                    throw CypherRuntimeError("variable " + np.var + " is not bound to a node");
                NodeId id = it->second.as_node();
                for (auto& [k, v] : eval_props(np.props, b)) mut_->set_node_property(id, k, v);
                return id;
            }
        }
        if (!np.label) throw CypherRuntimeError("MERGE/CREATE needs a label for new nodes");
        NodeId id = mut_->merge_node(*np.label, eval_props(np.props, b));
        if (!np.var.empty()) b[np.var] = Value(id);
        return id;
    }

    void set(const std::vector<Binding>& rows, const std::vector<SetItem>& items,
             std::optional<SetItem::When> phase) {
        for (const auto& b : rows) {
            for (const auto& s : items) {
                if (s.when != SetItem::When::Always && (!phase || *phase != s.when)) continue;
                if (s.when == SetItem::When::Always && phase) continue;
                auto it = b.find(s.var);
                if (it == b.end()) throw CypherRuntimeError("variable " + s.var + " is not defined");
                Value v = eval(s.value, b);
                if (v.is_node() || v.is_edge())
                    throw CypherRuntimeError("property " + s.key + " cannot hold a graph element");
                try {
                    if (it->second.is_node())
                        mut_->set_node_property(it->second.as_node(), s.key, v);
                    else if (it->second.is_edge())
                        mut_->set_edge_property(it->second.as_edge(), s.key, v);
                    else if (!it->second.is_null())
                        throw CypherRuntimeError("cannot SET a property on " + s.var);
                } catch (const graph::GraphError& e) {
                    throw CypherRuntimeError(e.what());
                }
            }
        }
    }

    // ---- projection ---------------------------------------------------------

    struct ProjRow {
        std::vector<Value> values;
        Binding env;
        std::shared_ptr<Group> group;
    };

    ResultTable project(const std::vector<Binding>& rows, const Clause& c) {
        ResultTable table;
        for (const auto& item : c.items) table.columns.push_back(item.alias ? *item.alias : render(item.expr));

        bool aggregating = false;
        for (const auto& item : c.items) aggregating = aggregating || contains_aggregate(item.expr);

        std::vector<ProjRow> proj;
        auto with_aliases = [&](Binding env, const std::vector<Value>& vals) {
            for (std::size_t i = 0; i < c.items.size(); ++i)
                if (c.items[i].alias) env[*c.items[i].alias] = vals[i];
            return env;
        };
        if (!aggregating) {
            for (const auto& b : rows) {
                std::vector<Value> vals;
                for (const auto& item : c.items) vals.push_back(eval(item.expr, b));
                proj.push_back({vals, with_aliases(b, vals), nullptr});
            }
        } else {
            auto key_less = [](const std::vector<Value>& a, const std::vector<Value>& b) {
                for (std::size_t i = 0; i < a.size(); ++i) {
                    if (int cmp = compare_values(a[i], b[i]); cmp != 0) return cmp < 0;
                    if (a[i].data.index() != b[i].data.index()) return a[i].data.index() < b[i].data.index();
                }
                return false;
            };
            std::map<std::vector<Value>, std::size_t, decltype(key_less)> index(key_less);
            std::vector<std::shared_ptr<Group>> groups;
            for (const auto& b : rows) {
                std::vector<Value> key;
                for (const auto& item : c.items)
                    if (!contains_aggregate(item.expr)) key.push_back(eval(item.expr, b));
                auto [it, inserted] = index.emplace(std::move(key), groups.size());
                if (inserted) groups.push_back(std::make_shared<Group>());
                groups[it->second]->rows.push_back(&b);
            }
            for (const auto& grp : groups) {
                const Binding& rep = *grp->rows.front();
                std::vector<Value> vals;
                for (const auto& item : c.items) vals.push_back(eval(item.expr, rep, grp.get()));
                proj.push_back({vals, with_aliases(rep, vals), grp});
            }
        }

        if (c.distinct) {
            std::vector<ProjRow> unique;
            for (auto& r : proj) {
                bool dup = std::any_of(unique.begin(), unique.end(),
                                       [&](const ProjRow& u) { return u.values == r.values; });
                if (!dup) unique.push_back(std::move(r));
            }
            proj = std::move(unique);
        }

        if (!c.order_by.empty()) {
            std::vector<std::vector<Value>> keys;
            keys.reserve(proj.size());
            for (const auto& r : proj) {
                std::vector<Value> k;
                for (const auto& s : c.order_by) {
                    auto col = std::find_if(c.items.begin(), c.items.end(),
                                            [&](const ReturnItem& it) { return it.expr == s.expr; });
                    if (col != c.items.end())
                        k.push_back(r.values[static_cast<std::size_t>(col - c.items.begin())]);
                    else
                        k.push_back(eval(s.expr, r.env, r.group.get()));
                }
                keys.push_back(std::move(k));
            }
            std::vector<std::size_t> idx(proj.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                for (std::size_t i = 0; i < c.order_by.size(); ++i) {
                    int cmp = compare_values(keys[a][i], keys[b][i]);
                    if (cmp != 0) return c.order_by[i].descending ? cmp > 0 : cmp < 0;
                }
                return false;
            });
            std::vector<ProjRow> sorted;
            for (auto i : idx) sorted.push_back(std::move(proj[i]));
            proj = std::move(sorted);
        }

        std::size_t begin = c.skip ? static_cast<std::size_t>(std::max<std::int64_t>(0, *c.skip)) : 0;
        std::size_t end = proj.size();
        if (c.limit) end = std::min(end, begin + static_cast<std::size_t>(std::max<std::int64_t>(0, *c.limit)));
        for (std::size_t i = begin; i < end; ++i) table.rows.push_back(std::move(proj[i].values));
        return table;
    }

    // ---- expressions ----------------------------------------------------------

    Value eval(const Expr& e, const Binding& b, const Group* group = nullptr) {
        using K = Expr::Kind;
        switch (e.kind) {
            case K::Literal: return e.literal;
            case K::Variable: {
                auto it = b.find(e.name);
                if (it == b.end()) throw CypherRuntimeError("variable " + e.name + " is not defined");
                return it->second;
            }
            case K::Property: {
                Value base = eval(e.args[0], b, group);
                if (base.is_null()) return {};
                const graph::PropertyMap* props = nullptr;
                if (base.is_node())
                    props = &g_.node(base.as_node()).properties;
                else if (base.is_edge())
                    props = &g_.edge(base.as_edge()).properties;
                else
                    throw CypherRuntimeError("cannot read property " + e.name + " of " + to_display(base));
                auto it = props->find(e.name);
                return it == props->end() ? Value() : it->second;
            }
            case K::List: {
                ValueList out;
                for (const auto& a : e.args) out.push_back(eval(a, b, group));
                return out;
            }
            case K::CountStar:
                if (!group) throw CypherRuntimeError("count(*) is only allowed in RETURN");
                return Value(static_cast<std::int64_t>(group->rows.size()));
            case K::Call: return call(e, b, group);
            case K::Not: {
                auto t = truth(eval(e.args[0], b, group));
                return t ? Value(!*t) : Value();
            }
            case K::And: {
                auto l = truth(eval(e.args[0], b, group));
                if (l == std::optional<bool>(false)) return false;
                auto r = truth(eval(e.args[1], b, group));
                if (r == std::optional<bool>(false)) return false;
                if (l && r) return true;
                return {};
            }
            case K::Or: {
                auto l = truth(eval(e.args[0], b, group));
                if (l == std::optional<bool>(true)) return true;
                auto r = truth(eval(e.args[1], b, group));
                if (r == std::optional<bool>(true)) return true;
                if (l && r) return false;
                return {};
            }
            case K::Xor: {
                auto l = truth(eval(e.args[0], b, group));
                auto r = truth(eval(e.args[1], b, group));
                if (!l || !r) return {};
                return *l != *r;
            }
            case K::Compare: {
                Value l = eval(e.args[0], b, group);
                Value r = eval(e.args[1], b, group);
                const bool ci = is_name_property(e.args[0]) || is_name_property(e.args[1]);
                if (e.name == "=") return from_tristate(equals(l, r, ci));
                if (e.name == "<>") {
                    auto eq = equals(l, r, ci);
                    return eq ? Value(!*eq) : Value();
                }
                if (l.is_null() || r.is_null()) return {};
                auto o = order(l, r);
                if (!o) return {};
                if (e.name == "<") return *o < 0;
                if (e.name == "<=") return *o <= 0;
                if (e.name == ">") return *o > 0;
                return *o >= 0;
            }
            case K::IsNull: return eval(e.args[0], b, group).is_null();
            case K::IsNotNull: return !eval(e.args[0], b, group).is_null();
            case K::Contains:
            case K::StartsWith:
            case K::EndsWith: {
                Value l = eval(e.args[0], b, group);
                Value r = eval(e.args[1], b, group);
                if (!l.is_string() || !r.is_string()) return {};
                const std::string& s = l.as_string();
                const std::string& t = r.as_string();
                if (e.kind == K::Contains) return s.find(t) != std::string::npos;
                if (e.kind == K::StartsWith) return s.rfind(t, 0) == 0;
                return s.size() >= t.size() && s.compare(s.size() - t.size(), t.size(), t) == 0;
            }
            case K::In: {
                Value l = eval(e.args[0], b, group);
                Value r = eval(e.args[1], b, group);
                if (r.is_null()) return {};
                if (!r.is_list()) throw CypherRuntimeError("IN expects a list on the right-hand side");
                const bool ci = is_name_property(e.args[0]);
                bool unknown = false;
                for (const auto& item : r.as_list()) {
                    auto eq = equals(l, item, ci);
                    if (eq == std::optional<bool>(true)) return true;
                    if (!eq) unknown = true;
                }
                if (unknown) return {};
                return false;
            }
            case K::Add: {
                Value l = eval(e.args[0], b, group);
                Value r = eval(e.args[1], b, group);
                if (l.is_null() || r.is_null()) return {};
                if (l.is_int() && r.is_int()) return l.as_int() + r.as_int();
                if (l.is_number() && r.is_number()) return l.as_number() + r.as_number();
                if (l.is_list()) {
                    ValueList out = l.as_list();
                    if (r.is_list())
                        out.insert(out.end(), r.as_list().begin(), r.as_list().end());
                    else
                        out.push_back(r);
                    return out;
                }
                if ((l.is_string() || l.is_number()) && (r.is_string() || r.is_number()))
                    return to_display(l) + to_display(r);
                throw CypherRuntimeError("cannot add " + to_display(l) + " and " + to_display(r));
            }
            case K::Sub: {
                Value l = eval(e.args[0], b, group);
                Value r = eval(e.args[1], b, group);
                if (l.is_null() || r.is_null()) return {};
                if (l.is_int() && r.is_int()) return l.as_int() - r.as_int();
                if (l.is_number() && r.is_number()) return l.as_number() - r.as_number();
                throw CypherRuntimeError("cannot subtract non-numeric values");
            }
            case K::Neg: {
                Value v = eval(e.args[0], b, group);
                if (v.is_null()) return {};
                if (v.is_int()) return -v.as_int();
                if (v.is_double()) return -std::get<double>(v.data);
                throw CypherRuntimeError("cannot negate " + to_display(v));
            }
        }
        return {};
    }

    Value call(const Expr& e, const Binding& b, const Group* group) {
        const std::string fn = text::to_lower(e.name);
        if (is_aggregate_function(fn)) {
            if (!group) throw CypherRuntimeError(e.name + "() is only allowed in RETURN");
            ValueList vals;
            for (const Binding* row : group->rows) {
                Value v = eval(e.args.at(0), *row);
                if (v.is_null()) continue;
                if (e.distinct && std::find(vals.begin(), vals.end(), v) != vals.end()) continue;
                vals.push_back(std::move(v));
            }
            if (fn == "count") return Value(static_cast<std::int64_t>(vals.size()));
            if (fn == "collect") return Value(std::move(vals));
            if (fn == "min" || fn == "max") {
                if (vals.empty()) return {};
                auto cmp = [](const Value& x, const Value& y) { return compare_values(x, y) < 0; };
                return fn == "min" ? *std::min_element(vals.begin(), vals.end(), cmp)
                                   : *std::max_element(vals.begin(), vals.end(), cmp);
            }
            bool all_int = true;
            double sum = 0.0;
            std::int64_t isum = 0;
            for (const auto& v : vals) {
                if (!v.is_number()) throw CypherRuntimeError(e.name + "() needs numeric values");
                all_int = all_int && v.is_int();
                sum += v.as_number();
                if (v.is_int()) isum += v.as_int();
            }
            if (fn == "sum") return all_int ? Value(isum) : Value(sum);
            if (vals.empty()) return {};
            return sum / static_cast<double>(vals.size());
        }

        std::vector<Value> args;
        for (const auto& a : e.args) args.push_back(eval(a, b, group));
        auto arg = [&](std::size_t i) -> const Value& {
            if (i >= args.size()) throw CypherRuntimeError(e.name + "() is missing an argument");
            return args[i];
        };
        if (fn == "coalesce") {
            for (const auto& v : args)
                if (!v.is_null()) return v;
            return {};
        }
        const Value& x = arg(0);
        if (x.is_null()) return {};
        if (fn == "tolower" || fn == "toupper" || fn == "trim") {
            if (!x.is_string()) throw CypherRuntimeError(e.name + "() expects a string");
            if (fn == "trim") return text::trim(x.as_string());
            std::string s = x.as_string();
            for (auto& ch : s)
                ch = static_cast<char>(fn == "tolower" ? std::tolower(static_cast<unsigned char>(ch))
                                                       : std::toupper(static_cast<unsigned char>(ch)));
            return s;
        }
        if (fn == "tostring") {
            if (!x.is_scalar()) throw CypherRuntimeError("toString() expects a scalar");
            return to_display(x);
        }
        if (fn == "size") {
            if (x.is_string()) return Value(static_cast<std::int64_t>(x.as_string().size()));
            if (x.is_list()) return Value(static_cast<std::int64_t>(x.as_list().size()));
            throw CypherRuntimeError("size() expects a string or list");
        }
        if (fn == "type") {
            if (!x.is_edge()) throw CypherRuntimeError("type() expects a relationship");
            return g_.edge(x.as_edge()).label;
        }
        if (fn == "labels") {
            if (!x.is_node()) throw CypherRuntimeError("labels() expects a node");
            return ValueList{Value(g_.node(x.as_node()).label)};
        }
        if (fn == "tointeger" || fn == "tofloat") {
            double d;
            if (x.is_number()) {
                d = x.as_number();
            } else if (x.is_string()) {
                char* endp = nullptr;
                d = std::strtod(x.as_string().c_str(), &endp);
                if (endp == x.as_string().c_str()) return {};
            } else {
                return {};
            }
            if (fn == "tofloat") return d;
            return static_cast<std::int64_t>(std::trunc(d));
        }
        throw CypherRuntimeError("unknown function " + e.name);
    }

    PropertyGraph* mut_;
    const PropertyGraph& g_;
    ExecOptions opts_;
};

}  // namespace

ResultTable execute(const CypherAst& ast, graph::PropertyGraph& graph, const ExecOptions& opts) {
    return Executor(&graph, graph, opts).run(ast);
}

ResultTable execute(const CypherAst& ast, const graph::PropertyGraph& graph, const ExecOptions& opts) {
    return Executor(nullptr, graph, opts).run(ast);
}

bool empty_result(const ResultTable& table) {
    for (const auto& row : table.rows) {
        for (const auto& cell : row) {
            if (!is_null_like(cell)) return false;
        }
    }
    return true;
}

std::string render_cell(const Value& v, const graph::PropertyGraph& graph) {
    if (v.is_node()) {
        const auto& n = graph.node(v.as_node());
        return n.name();
    }
    if (v.is_edge()) return graph.edge(v.as_edge()).label;
    if (v.is_list()) {
        std::string out;
        for (const auto& item : v.as_list()) {
            if (!out.empty()) out += ", ";
            out += render_cell(item, graph);
        }
        return out;
    }
    return to_display(v);
}

namespace {

void flatten(const Value& v, const graph::PropertyGraph& graph, std::vector<std::string>& out) {
    if (v.is_null()) return;
    if (v.is_list()) {
        for (const auto& item : v.as_list()) flatten(item, graph, out);
        return;
    }
    std::string s = render_cell(v, graph);
    if (!s.empty()) out.push_back(std::move(s));
}

}  // namespace

std::string render_flat(const ResultTable& table, const graph::PropertyGraph& graph) {
    std::vector<std::string> parts;
    for (const auto& row : table.rows)
        for (const auto& cell : row) flatten(cell, graph, parts);
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
    return out;
}

std::string render_table(const ResultTable& table, const graph::PropertyGraph& graph, std::size_t max_rows) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? " | " : "") + table.columns[i];
    out += "\n";
    std::size_t shown = std::min(max_rows, table.rows.size());
    for (std::size_t r = 0; r < shown; ++r) {
        for (std::size_t i = 0; i < table.rows[r].size(); ++i)
            out += (i ? " | " : "") + render_cell(table.rows[r][i], graph);
        out += "\n";
    }
    if (shown < table.rows.size()) out += "... (" + std::to_string(table.rows.size() - shown) + " more rows)\n";
    return out;
}

nlohmann::json to_json(const ResultTable& table, const graph::PropertyGraph& graph) {
    std::function<nlohmann::json(const Value&)> cell = [&](const Value& v) -> nlohmann::json {
        if (v.is_node()) {
            const auto& n = graph.node(v.as_node());
            return {{"$node", n.id.str()}, {"label", n.label}, {"name", n.name()}};
        }
        if (v.is_edge()) {
            const auto& e = graph.edge(v.as_edge());
            return {{"$edge", e.id.str()}, {"label", e.label}};
        }
        if (v.is_list()) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& item : v.as_list()) arr.push_back(cell(item));
            return arr;
        }
        return ctirag::to_json(v);
    };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& v : row) r.push_back(cell(v));
        rows.push_back(std::move(r));
    }
    return {{"columns", table.columns}, {"rows", rows}};
}

const char* to_string(QueryFailure f) {
    switch (f) {
        case QueryFailure::None: return "none";
        case QueryFailure::Syntax: return "syntax";
        case QueryFailure::ReadOnly: return "readonly";
        case QueryFailure::Schema: return "schema";
        case QueryFailure::Runtime: return "runtime";
        case QueryFailure::Empty: return "empty";
    }
    return "?";
}

QueryOutcome run_read_query(std::string_view text, const graph::PropertyGraph& graph, bool empty_is_failure) {
    QueryOutcome out;
    out.text = std::string(text);
    CypherAst ast;
    try {
        ast = parse(text);
    } catch (const SyntaxError& e) {
        out.report.syntactic_ok = false;
        out.report.violations.push_back({"syntax", e.what(), e.found()});
        out.failure = QueryFailure::Syntax;
        out.error = std::string("Syntax error: ") + e.what();
        return out;
    }
    out.report = validate(ast, graph.ontology(), Mode::Read);
    if (!out.report.ok()) {
        out.failure = !out.report.syntactic_ok ? QueryFailure::Syntax
                      : !out.report.readonly_ok ? QueryFailure::ReadOnly
                                                : QueryFailure::Schema;
        out.error = "Validation failed:\n" + out.report.summary();
        return out;
    }
    try {
        out.table = execute(ast, graph);
    } catch (const CypherRuntimeError& e) {
        out.failure = QueryFailure::Runtime;
        out.error = std::string("Runtime error: ") + e.what();
        return out;
    } catch (const graph::GraphError& e) {
        out.failure = QueryFailure::Runtime;
        out.error = std::string("Runtime error: ") + e.what();
        return out;
    }
    if (empty_is_failure && empty_result(out.table)) {
        out.failure = QueryFailure::Empty;
        out.error = "The query executed but returned no results.";
    }
    return out;
}

}  // namespace ctirag::cypher
