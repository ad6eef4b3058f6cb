#include <gtest/gtest.h>

#include <random>

#include "ctirag/cypher/ast.hpp"
#include "ctirag/cypher/executor.hpp"
#include "ctirag/cypher/parser.hpp"
#include "ctirag/cypher/validator.hpp"
#include "cypher_oracle.hpp"

using namespace ctirag;
using namespace ctirag::cypher;
using graph::PropertyGraph;

namespace {

const graph::Ontology& onto() { return graph::Ontology::cti(); }

ResultTable run(const std::string& q, const PropertyGraph& g) { return execute(parse(q), g); }

PropertyGraph apply(const std::string& script) {
    PropertyGraph g;
    for (const auto& st : parse_script(script)) execute(st, g);
    return g;
}

PropertyGraph actor_malware_sector() {
    PropertyGraph g = apply(
        "MERGE (a:ThreatActor {name: 'A'}) MERGE (m:Malware {name: 'M'}) MERGE (s:Sector {name: 'S'})"
        " MERGE (a)-[:uses]->(m) MERGE (m)-[:targets]->(s);");
    g.freeze();
    return g;
}

}  // namespace

// ---- parser -------------------------------------------------------------------

TEST(Parse, MinimalQuery) {
    CypherAst ast = parse("MATCH (m:Malware) RETURN m.name AS name");
    EXPECT_EQ(ast.kind, StatementKind::Read);
    ASSERT_EQ(ast.clauses.size(), 2u);
    EXPECT_EQ(ast.clauses[0].kind, ClauseKind::Match);
    EXPECT_EQ(ast.clauses[1].kind, ClauseKind::Return);
    EXPECT_EQ(ast.clauses[1].items[0].alias, "name");
}

TEST(Parse, DeleteIsNotInTheGrammar) {
    try {
        parse("MATCH (a)-[:uses]->(b) DELETE b");
        FAIL() << "expected SyntaxError";
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.position(), 23u);
        EXPECT_EQ(e.column(), 24u);
        EXPECT_EQ(e.found(), "'DELETE'");
        const auto& exp = e.expected();
        EXPECT_NE(std::find(exp.begin(), exp.end(), "RETURN"), exp.end());
    }
}

TEST(Parse, OtherForbiddenClauses) {
    for (const char* q : {"MATCH (n) DETACH DELETE n", "MATCH (n) REMOVE n.name", "CALL db.labels()",
                          "MATCH (n) WITH n RETURN n AS n", "DROP INDEX x", "MATCH (n)", "RETURN 1 AS x",
                          "MATCH (n) RETURN n AS n MATCH (m) RETURN m AS m", "MATCH (a)<-[:uses]->(b) RETURN a AS a"})
        EXPECT_THROW(parse(q), SyntaxError) << q;
}

TEST(Parse, TwoHopPathMatchesHandBuiltTree) {
    CypherAst ast = parse("MATCH (a:ThreatActor)-[:uses]->(m:Malware)-[:targets]->(s:Sector) RETURN s.name AS sector");
    CypherAst expected;
    expected.kind = StatementKind::Read;
    Clause match;
    match.kind = ClauseKind::Match;
    PathPattern p;
    p.nodes = {NodePattern{"a", "ThreatActor", {}}, NodePattern{"m", "Malware", {}}, NodePattern{"s", "Sector", {}}};
    RelPattern uses;
    uses.types = {"uses"};
    RelPattern targets;
    targets.types = {"targets"};
    p.rels = {uses, targets};
    match.patterns.push_back(p);
    Clause ret;
    ret.kind = ClauseKind::Return;
    ret.items.push_back(ReturnItem{Expr::prop("s", "name"), "sector"});
    expected.clauses = {match, ret};
    EXPECT_EQ(ast, expected);
}

TEST(Parse, PatternsAndExpressions) {
    CypherAst ast = parse(
        "match (a:ThreatActor {name: \"APT \\\"37\\\"\"})<-[r:attributed_to|has_alias*1..3]-(b), (c) "
        "where NOT a.name STARTS WITH 'x' and b.name IN ['a', 'b'] or c.summary IS NOT NULL "
        "return distinct a.name as n, count(DISTINCT b) AS k order by k desc, n skip 1 limit 5;");
    const auto& rel = ast.clauses[0].patterns[0].rels[0];
    EXPECT_EQ(rel.dir, Direction::In);
    EXPECT_TRUE(rel.var_length);
    EXPECT_EQ(rel.min_hops, 1);
    EXPECT_EQ(rel.max_hops, 3);
    EXPECT_EQ(rel.types, (std::vector<std::string>{"attributed_to", "has_alias"}));
    EXPECT_EQ(ast.clauses[0].patterns[0].nodes[0].props[0].second.literal.as_string(), "APT \"37\"");
    EXPECT_EQ(ast.clauses[0].where->kind, Expr::Kind::Or);
    const Clause& ret = ast.clauses[1];
    EXPECT_TRUE(ret.distinct);
    EXPECT_TRUE(ret.order_by[0].descending);
    EXPECT_EQ(ret.skip, 1);
    EXPECT_EQ(ret.limit, 5);
    EXPECT_TRUE(ret.items[1].expr.distinct);
}

TEST(Parse, VariableLengthForms) {
    auto rel = [](const std::string& r) { return parse("MATCH (a)" + r + "(b) RETURN a AS a").clauses[0].patterns[0].rels[0]; };
    EXPECT_EQ(rel("-[*]->").max_hops, std::nullopt);
    EXPECT_EQ(rel("-[*2]->").min_hops, 2);
    EXPECT_EQ(rel("-[*2]->").max_hops, 2);
    EXPECT_EQ(rel("-[*..3]->").min_hops, 1);
    EXPECT_EQ(rel("-[*..3]->").max_hops, 3);
    EXPECT_EQ(rel("-->").dir, Direction::Out);
    EXPECT_EQ(rel("<--").dir, Direction::In);
    EXPECT_EQ(rel("--").dir, Direction::Both);
}

TEST(Parse, NegativeLiteralsAndComments) {
    CypherAst ast = parse("// leading comment\nMATCH (n) /* block */ RETURN -3 AS x, 2 - -1.5 AS y, -(1) AS z");
    const auto& items = ast.clauses[1].items;
    EXPECT_EQ(items[0].expr, Expr::lit(Value(std::int64_t{-3})));
    EXPECT_EQ(items[1].expr.args[1], Expr::lit(Value(-1.5)));
    EXPECT_EQ(items[2].expr.kind, Expr::Kind::Neg);
}

TEST(ParseScript, SplitsOnSemicolonsOutsideStrings) {
    auto stmts = parse_script("MERGE (a:Malware {name: 'x;y'});\n;MERGE (b:Tool {name: 'z'});");
    ASSERT_EQ(stmts.size(), 2u);
    EXPECT_EQ(stmts[0].clauses[0].patterns[0].nodes[0].props[0].second.literal.as_string(), "x;y");
    EXPECT_TRUE(parse_script("  ").empty());
    EXPECT_THROW(parse_script("MERGE (a:Malware {name: 'x'}) MERGE"), SyntaxError);
}

// ---- render round trip ----------------------------------------------------------

namespace {

struct AstGen {
    std::mt19937_64 rng;
    explicit AstGen(std::uint64_t seed) : rng(seed) {}

    int uni(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }
    template <typename T>
    T pick(const std::vector<T>& xs) { return xs[static_cast<std::size_t>(uni(0, static_cast<int>(xs.size()) - 1))]; }

    std::string var() { return pick<std::string>({"a", "b", "m", "x1", "_t", "my var", "order"}); }
    std::string key() { return pick<std::string>({"name", "summary", "date", "end", "first seen"}); }

    Value literal() {
        switch (uni(0, 6)) {
            case 0: return Value(static_cast<std::int64_t>(uni(-1000, 1000)));
            case 1: return Value(std::uniform_real_distribution<double>(-1e6, 1e6)(rng));
            case 2: return Value(static_cast<double>(uni(-50, 50)));
            case 3: return Value(pick<std::string>({"", "LockBit", "it's", "back\\slash", "line\nbreak", "tab\t", "q\"uote"}));
            case 4: return Value(coin());
            case 5: return Value(1e-7 * uni(1, 9));
            default: return Value();
        }
    }

    Expr expr(int depth) {
        using K = Expr::Kind;
        if (depth <= 0 || coin(0.3)) {
            switch (uni(0, 2)) {
                case 0: return Expr::lit(literal());
                case 1: return Expr::var(var());
                default: return Expr::prop(var(), key());
            }
        }
        switch (uni(0, 14)) {
            case 0: {
                Expr e;
                e.kind = K::List;
                for (int i = uni(0, 3); i > 0; --i) e.args.push_back(expr(depth - 1));
                return e;
            }
            case 1: return Expr::call(pick<std::string>({"toLower", "count", "collect", "size", "coalesce"}), {expr(depth - 1)}, coin(0.2));
            case 2: {
                Expr e;
                e.kind = K::CountStar;
                e.name = pick<std::string>({"count", "COUNT"});
                return e;
            }
            case 3:
            case 4: {
                Expr e;
                e.kind = pick<K>({K::Not, K::Neg, K::IsNull, K::IsNotNull});
                e.args.push_back(expr(depth - 1));
                return e;
            }
            case 5:
            case 6: return Expr::binary(K::Compare, expr(depth - 1), expr(depth - 1),
                                        pick<std::string>({"=", "<>", "<", "<=", ">", ">="}));
            case 7: {
                Expr base = expr(depth - 1);
                Expr p;
                p.kind = K::Property;
                p.name = key();
                p.args.push_back(base);
                return p;
            }
            default:
                return Expr::binary(pick<K>({K::And, K::Or, K::Xor, K::Contains, K::StartsWith, K::EndsWith, K::In, K::Add, K::Sub}),
                                    expr(depth - 1), expr(depth - 1));
        }
    }

    PropertyPredicates props() {
        PropertyPredicates p;
        for (int i = uni(0, 2); i > 0; --i) p.emplace_back(key(), expr(1));
        return p;
    }

    PathPattern path() {
        PathPattern p;
        auto node = [&] {
            NodePattern n;
            if (coin(0.8)) n.var = var();
            if (coin(0.6)) n.label = pick<std::string>({"Malware", "ThreatActor", "Match", "C2_Infrastructure"});
            if (coin(0.3)) n.props = props();
            return n;
        };
        p.nodes.push_back(node());
        for (int i = uni(0, 2); i > 0; --i) {
            RelPattern r;
            if (coin(0.4)) r.var = var();
            for (int t = uni(0, 2); t > 0; --t) r.types.push_back(pick<std::string>({"uses", "targets", "has alias"}));
            r.dir = static_cast<Direction>(uni(0, 2));
            if (coin(0.3)) {
                r.var_length = true;
                r.min_hops = uni(0, 3);
                if (coin(0.7)) r.max_hops = r.min_hops + uni(0, 3);
            }
            if (coin(0.2)) r.props = props();
            p.rels.push_back(r);
            p.nodes.push_back(node());
        }
        return p;
    }

    CypherAst statement() {
        CypherAst ast;
        const bool write = coin(0.3);
        ast.kind = write ? StatementKind::Write : StatementKind::Read;
        for (int i = uni(1, 3); i > 0; --i) {
            Clause c;
            int kind = write ? uni(0, 4) : uni(0, 1);
            c.kind = std::vector<ClauseKind>{ClauseKind::Match, ClauseKind::OptionalMatch, ClauseKind::Merge,
                                             ClauseKind::Create, ClauseKind::Set}[static_cast<std::size_t>(kind)];
            if (c.kind == ClauseKind::Merge) {
                c.patterns.push_back(path());
                for (int s = uni(0, 3); s > 0; --s)
                    c.sets.push_back(SetItem{var(), key(), expr(2), coin() ? SetItem::When::OnCreate : SetItem::When::OnMatch});
            } else if (c.kind == ClauseKind::Set) {
                for (int s = uni(1, 2); s > 0; --s) c.sets.push_back(SetItem{var(), key(), expr(2), SetItem::When::Always});
            } else {
                for (int s = uni(1, 2); s > 0; --s) c.patterns.push_back(path());
                if (c.kind != ClauseKind::Create && coin()) c.where = expr(3);
            }
            ast.clauses.push_back(c);
        }
        if (write) {
            if (ast.clauses[0].kind != ClauseKind::Merge) ast.clauses[0].sets.clear();
            ast.clauses[0].kind = ClauseKind::Merge;
            ast.clauses[0].where.reset();
            ast.clauses[0].patterns.resize(1);
            if (ast.clauses[0].patterns[0].nodes.empty()) ast.clauses[0].patterns[0] = path();
        }
        if (!write || coin()) {
            Clause r;
            r.kind = ClauseKind::Return;
            r.distinct = coin(0.2);
            for (int i = uni(1, 3); i > 0; --i)
                r.items.push_back(ReturnItem{expr(2), coin(0.8) ? std::optional<std::string>(var()) : std::nullopt});
            for (int i = uni(0, 2); i > 0; --i) r.order_by.push_back(SortItem{expr(1), coin()});
            if (coin(0.3)) r.skip = uni(0, 10);
            if (coin(0.3)) r.limit = uni(0, 10);
            ast.clauses.push_back(r);
        }
        return ast;
    }
};

}  // namespace

TEST(Render, ParseRenderRoundTripOnRandomAsts) {
    AstGen gen(2024);
    for (int i = 0; i < 2000; ++i) {
        CypherAst ast = gen.statement();
        const std::string text = render(ast);
        CypherAst back;
        ASSERT_NO_THROW(back = parse(text)) << text;
        ASSERT_EQ(back, ast) << text << "\n" << render(back);
        EXPECT_EQ(render(back), text);
    }
}

TEST(Render, CanonicalText) {
    EXPECT_EQ(render(parse("match (m:Malware)-->(x) where m.name='a' return m.name as n limit 2")),
              "MATCH (m:Malware)-[]->(x) WHERE (m.name = 'a') RETURN m.name AS n LIMIT 2");
}

// ---- validation -----------------------------------------------------------------

TEST(Validate, ReadQueryWithKnownLabelPasses) {
    auto r = validate(parse("MATCH (m:Malware) RETURN m.name AS name"), onto(), Mode::Read);
    EXPECT_TRUE(r.ok()) << r.summary();
}

TEST(Validate, UnknownRelationshipIsSchemaViolation) {
    auto r = validate(parse("MATCH (a:ThreatActor)-[:involved_in]->(c:Campaign) RETURN a.name AS a"), onto(), Mode::Read);
    EXPECT_TRUE(r.syntactic_ok);
    EXPECT_TRUE(r.readonly_ok);
    EXPECT_FALSE(r.schema_ok);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].kind, "unknown_relationship");
}

TEST(Validate, MergeInReadModeIsReadonlyViolation) {
    auto r = validate(parse("MERGE (m:Malware {name: 'x'})"), onto(), Mode::Read);
    EXPECT_FALSE(r.readonly_ok);
    EXPECT_TRUE(r.schema_ok);
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(validate(parse("MERGE (m:Malware {name: 'x'})"), onto(), Mode::Write).ok());
}

TEST(Validate, UnknownLabelFlipsSchemaOk) {
    const std::string base = "MATCH (a:ThreatActor)-[:uses]->(m:Malware) RETURN m.name AS m";
    ASSERT_TRUE(validate(parse(base), onto(), Mode::Read).ok());
    auto r = validate(parse("MATCH (a:ThreatActor)-[:uses]->(m:Malware), (z:Spaceship) RETURN m.name AS m"), onto(), Mode::Read);
    EXPECT_FALSE(r.schema_ok);
    auto lower = validate(parse("MATCH (m:malware) RETURN m.name AS m"), onto(), Mode::Read);
    EXPECT_FALSE(lower.schema_ok);
    EXPECT_NE(lower.summary().find("did you mean Malware"), std::string::npos);
}

TEST(Validate, PropertiesAreCheckedAgainstLabelRules) {
    EXPECT_FALSE(validate(parse("MATCH (c:CVE) RETURN c.cvss AS s"), onto(), Mode::Read).schema_ok);
    EXPECT_TRUE(validate(parse("MATCH (c:CVE) RETURN c.product AS s"), onto(), Mode::Read).schema_ok);
    EXPECT_FALSE(validate(parse("MATCH (c:CVE {version: '1'}) RETURN c.name AS s"), onto(), Mode::Read).schema_ok);
    EXPECT_FALSE(validate(parse("MATCH ()-[r:uses]->() RETURN r.weight AS w"), onto(), Mode::Read).schema_ok);
    EXPECT_TRUE(validate(parse("MATCH ()-[r:uses]->() RETURN r.evidence AS w"), onto(), Mode::Read).schema_ok);
    EXPECT_FALSE(validate(parse("MATCH (x) RETURN x.nonsense AS w"), onto(), Mode::Read).schema_ok);
}

TEST(Validate, SyntacticRules) {
    auto no_alias = validate(parse("MATCH (m:Malware) RETURN m.name"), onto(), Mode::Read);
    EXPECT_FALSE(no_alias.syntactic_ok);
    EXPECT_EQ(no_alias.violations[0].kind, "missing_alias");
    EXPECT_FALSE(validate(parse("MATCH (m:Malware) RETURN q.name AS n"), onto(), Mode::Read).syntactic_ok);
    EXPECT_FALSE(validate(parse("MATCH (m:Malware)-[*1..5]->(x) RETURN m.name AS n"), onto(), Mode::Read).syntactic_ok);
    EXPECT_FALSE(validate(parse("MATCH (m:Malware)-[*]->(x) RETURN m.name AS n"), onto(), Mode::Read).syntactic_ok);
    EXPECT_TRUE(validate(parse("MATCH (m:Malware)-[*1..4]->(x) RETURN m.name AS n"), onto(), Mode::Read).ok());
    EXPECT_FALSE(validate(parse("MATCH (m:Malware) WHERE count(m) > 1 RETURN m.name AS n"), onto(), Mode::Read).syntactic_ok);
    EXPECT_FALSE(validate(parse("MATCH (m:Malware) RETURN frobnicate(m) AS n"), onto(), Mode::Read).syntactic_ok);
    EXPECT_TRUE(validate(parse("MATCH (m:Malware) RETURN m.name AS n ORDER BY n"), onto(), Mode::Read).ok());
}

TEST(Validate, TextEntryPointReportsSyntaxErrors) {
    auto r = validate_text("MATCH (m:Malware RETURN m", onto(), Mode::Read);
    EXPECT_FALSE(r.syntactic_ok);
    EXPECT_EQ(r.violations[0].kind, "syntax");
}

// ---- execution --------------------------------------------------------------------

TEST(Execute, EmptyGraphReturnsNoRows) {
    PropertyGraph g;
    g.freeze();
    for (const char* q : {"MATCH (m:Malware) RETURN m.name AS n", "MATCH (m) RETURN count(m) AS n",
                          "MATCH (a)-[r]->(b) RETURN collect(a.name) AS n", "OPTIONAL MATCH (m) RETURN m.name AS n"}) {
        ResultTable t = run(q, g);
        EXPECT_TRUE(empty_result(t)) << q;
    }
    EXPECT_EQ(run("MATCH (m) RETURN count(m) AS n", g).rows.size(), 0u);
}

TEST(Execute, TwoHopPath) {
    PropertyGraph g = actor_malware_sector();
    ResultTable t = run("MATCH (a:ThreatActor)-[:uses]->(m:Malware)-[:targets]->(s:Sector) RETURN s.name AS sector", g);
    EXPECT_EQ(t.columns, std::vector<std::string>{"sector"});
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][0], Value("S"));
    EXPECT_TRUE(run("MATCH (a:ThreatActor)-[:targets]->(m:Malware) RETURN a.name AS a", g).rows.empty());
    EXPECT_EQ(run("MATCH (m:Malware)<-[:uses]-(a) RETURN a.name AS a", g).rows.size(), 1u);
    EXPECT_EQ(run("MATCH (m:Malware)-[:uses]-(a) RETURN a.name AS a", g).rows.size(), 1u);
}

TEST(Execute, CountAggregates) {
    PropertyGraph g = apply("MERGE (:Malware {name: 'a'}); MERGE (:Malware {name: 'b'}); MERGE (:Malware {name: 'c'}); MERGE (:Tool {name: 'd'})");
    g.freeze();
    ResultTable t = run("MATCH (m:Malware) RETURN COUNT(m) AS n", g);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][0], Value(3));
    EXPECT_EQ(run("MATCH (m) RETURN count(*) AS n", g).rows[0][0], Value(4));
}

TEST(Execute, GroupingCollectOrderLimit) {
    PropertyGraph g = apply(
        "MERGE (a:ThreatActor {name: 'APT37'}) MERGE (b:ThreatActor {name: 'Lazarus'})"
        " MERGE (m1:Malware {name: 'ROKRAT'}) MERGE (m2:Malware {name: 'Dtrack'}) MERGE (m3:Malware {name: 'Manuscrypt'})"
        " MERGE (a)-[:uses]->(m1) MERGE (b)-[:uses]->(m2) MERGE (b)-[:uses]->(m3)");
    g.freeze();
    ResultTable t = run("MATCH (a:ThreatActor)-[:uses]->(m:Malware) RETURN a.name AS actor, count(m) AS n, collect(m.name) AS tools ORDER BY n DESC", g);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0][0], Value("Lazarus"));
    EXPECT_EQ(t.rows[0][1], Value(2));
    EXPECT_EQ(t.rows[0][2], Value(ValueList{Value("Dtrack"), Value("Manuscrypt")}));
    EXPECT_EQ(t.rows[1][1], Value(1));

    ResultTable ordered = run("MATCH (m:Malware) RETURN m.name AS n ORDER BY n SKIP 1 LIMIT 1", g);
    ASSERT_EQ(ordered.rows.size(), 1u);
    EXPECT_EQ(ordered.rows[0][0], Value("Manuscrypt"));
    EXPECT_EQ(run("MATCH (a:ThreatActor)-[:uses]->(m) RETURN DISTINCT a.name AS a", g).rows.size(), 2u);
    EXPECT_EQ(run("MATCH (a:ThreatActor)-[:uses]->(m) RETURN count(DISTINCT a) AS a", g).rows[0][0], Value(2));
}

TEST(Execute, NameEqualityIsCaseInsensitive) {
    PropertyGraph g = actor_malware_sector();
    EXPECT_EQ(run("MATCH (m:Malware {name: 'm'}) RETURN m.name AS n", g).rows.size(), 1u);
    EXPECT_EQ(run("MATCH (m:Malware) WHERE m.name = 'm' RETURN m.name AS n", g).rows.size(), 1u);
    EXPECT_EQ(run("MATCH (m:Malware) WHERE 'm' = m.name RETURN m.name AS n", g).rows.size(), 1u);
    EXPECT_EQ(run("MATCH (m:Malware) WHERE m.name IN ['x', 'm'] RETURN m.name AS n", g).rows.size(), 1u);
    EXPECT_EQ(run("MATCH (m:Malware) WHERE m.name CONTAINS 'm' RETURN m.name AS n", g).rows.size(), 0u);
    EXPECT_EQ(run("MATCH (m:Malware) WHERE toLower(m.name) CONTAINS 'm' RETURN m.name AS n", g).rows.size(), 1u);
}

TEST(Execute, NullPropagation) {
    PropertyGraph g = actor_malware_sector();
    EXPECT_TRUE(run("MATCH (m:Malware) WHERE m.summary = 'x' RETURN m.name AS n", g).rows.empty());
    EXPECT_TRUE(run("MATCH (m:Malware) WHERE NOT (m.summary = 'x') RETURN m.name AS n", g).rows.empty());
    EXPECT_EQ(run("MATCH (m:Malware) WHERE m.summary IS NULL RETURN m.name AS n", g).rows.size(), 1u);
    EXPECT_EQ(run("MATCH (m:Malware) WHERE m.summary = 'x' OR true RETURN m.name AS n", g).rows.size(), 1u);
    ResultTable t = run("MATCH (m:Malware) RETURN m.summary AS s", g);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_TRUE(empty_result(t));
}

TEST(Execute, OptionalMatch) {
    PropertyGraph g = actor_malware_sector();
    ResultTable t = run("MATCH (s:Sector) OPTIONAL MATCH (s)-[:targets]->(x) RETURN s.name AS s, x.name AS x", g);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][0], Value("S"));
    EXPECT_TRUE(t.rows[0][1].is_null());
}

TEST(Execute, VariableLengthPaths) {
    PropertyGraph g = actor_malware_sector();
    EXPECT_EQ(run("MATCH (a:ThreatActor)-[*1..2]->(x) RETURN x.name AS x", g).rows.size(), 2u);
    EXPECT_EQ(run("MATCH (a:ThreatActor)-[*2]->(x) RETURN x.name AS x", g).rows[0][0], Value("S"));
    EXPECT_EQ(run("MATCH (a:ThreatActor)-[*0..1]->(x) RETURN x.name AS x", g).rows.size(), 2u);
    ResultTable t = run("MATCH (a:ThreatActor)-[r*2]->(x) RETURN size(r) AS hops", g);
    EXPECT_EQ(t.rows[0][0], Value(2));
}

TEST(Execute, RelationshipUniquenessWithinPattern) {
    PropertyGraph g = apply("MERGE (a:Malware {name: 'a'}) MERGE (b:Malware {name: 'b'}) MERGE (a)-[:uses]->(b)");
    g.freeze();
    EXPECT_TRUE(run("MATCH (x)-[:uses]-(y)-[:uses]-(z) RETURN x.name AS x", g).rows.empty());
    EXPECT_EQ(run("MATCH (x)-[:uses]-(y) RETURN x.name AS x", g).rows.size(), 2u);
}

TEST(Execute, FunctionsAndTypes) {
    PropertyGraph g = actor_malware_sector();
    ResultTable t = run("MATCH (a)-[r]->(b) RETURN type(r) AS t, toUpper(a.name) AS u, labels(b) AS l ORDER BY t", g);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0][0], Value("targets"));
    EXPECT_EQ(t.rows[0][1], Value("M"));
    EXPECT_EQ(t.rows[1][2], Value(ValueList{Value("Malware")}));
    EXPECT_EQ(run("MATCH (m:Malware) RETURN coalesce(m.summary, 'none') AS s", g).rows[0][0], Value("none"));
    EXPECT_THROW(run("MATCH (m:Malware) WHERE m.name RETURN m.name AS s", g), CypherRuntimeError);
}

TEST(Execute, WriteStatementsUseMergeSemantics) {
    PropertyGraph g;
    const char* script =
        "MERGE (a:ThreatActor {name: 'APT37'}) ON CREATE SET a.summary = 'first' ON MATCH SET a.summary = 'again';"
        "MERGE (c:CVE {name: 'CVE-2022-41128'});"
        "MATCH (a:ThreatActor {name: 'apt37'}), (c:CVE {name: 'CVE-2022-41128'}) MERGE (a)-[r:exploits {date: '2022-10'}]->(c) SET r.page = 4;"
        "CREATE (a:ThreatActor {name: 'APT37'})-[:uses]->(m:Malware {name: 'ROKRAT'});";
    for (const auto& st : parse_script(script)) execute(st, g);
    EXPECT_EQ(g.node_count(), 3u);
    EXPECT_EQ(g.edge_count(), 2u);
    NodeId a = *g.find_node("ThreatActor", "APT37");
    EXPECT_EQ(g.node(a).property("summary")->as_string(), "first");
    const auto& e = g.edge(*g.find_edge(a, *g.find_node("CVE", "CVE-2022-41128"), "exploits"));
    EXPECT_EQ(e.property("page")->as_int(), 4);
    EXPECT_EQ(e.property("date")->as_string(), "2022-10");

    execute(parse("MERGE (a:ThreatActor {name: 'APT37'}) ON CREATE SET a.summary = 'first' ON MATCH SET a.summary = 'again'"), g);
    EXPECT_EQ(g.node(a).property("summary")->as_string(), "again");

    EXPECT_THROW(execute(parse("MERGE (a:ThreatActor {summary: 'x'})"), g), CypherRuntimeError);
    EXPECT_THROW(execute(parse("MERGE (a {name: 'x'})"), g), CypherRuntimeError);
    EXPECT_THROW(execute(parse("MATCH (m:Malware) RETURN m.name AS n"), g), CypherRuntimeError);
    g.freeze();
    EXPECT_THROW(execute(parse("MERGE (a:Malware {name: 'x'})"), g), CypherRuntimeError);
}

TEST(EmptyResult, Semantics) {
    ResultTable t{{"a"}, {}};
    EXPECT_TRUE(empty_result(t));
    t.rows.push_back({Value()});
    EXPECT_TRUE(empty_result(t));
    t.rows.push_back({Value(ValueList{Value()})});
    EXPECT_TRUE(empty_result(t));
    t.rows.push_back({Value("x")});
    EXPECT_FALSE(empty_result(t));
}

TEST(RunReadQuery, ClassifiesFailures) {
    PropertyGraph g = actor_malware_sector();
    EXPECT_EQ(run_read_query("MATCH (m:Malware RETURN m", g).failure, QueryFailure::Syntax);
    EXPECT_EQ(run_read_query("MERGE (m:Malware {name: 'x'})", g).failure, QueryFailure::ReadOnly);
    EXPECT_EQ(run_read_query("MATCH (m:Ransomware) RETURN m.name AS n", g).failure, QueryFailure::Schema);
    EXPECT_EQ(run_read_query("MATCH (m:Malware) WHERE m.name RETURN m.name AS n", g).failure, QueryFailure::Runtime);
    EXPECT_EQ(run_read_query("MATCH (m:Malware {name: 'nope'}) RETURN m.name AS n", g).failure, QueryFailure::Empty);
    EXPECT_EQ(run_read_query("MATCH (m:Malware {name: 'nope'}) RETURN m.name AS n", g, false).failure, QueryFailure::None);
    auto ok = run_read_query("MATCH (m:Malware) RETURN m AS node", g);
    ASSERT_TRUE(ok.succeeded());
    EXPECT_EQ(render_table(ok.table, g), "node\nM\n");
}

TEST(OracleEquivalence, RandomSmallGraphsAndQueries) {
    std::mt19937_64 rng(99);
    int nonempty = 0;
    for (int gi = 0; gi < 100; ++gi) {
        PropertyGraph g = oracle::random_graph(rng);
        for (int qi = 0; qi < 50; ++qi) {
            oracle::RandomQuery q = oracle::random_query(rng);
            const std::string text = q.text();
            ResultTable got = run(text, g);
            auto want = oracle::canonical_rows(oracle::oracle_rows(q, g));
            ASSERT_EQ(oracle::canonical_rows(got.rows), want) << text;
            if (!want.empty()) ++nonempty;
        }
    }
    EXPECT_GT(nonempty, 500);
}

TEST(Validate, SchemaHintsSuggestNearestName) {
    auto r = validate(parse("MATCH (a:ThreatActor)-[:target]->(s:Sectr) RETURN a.name AS a"), onto(), Mode::Read);
    EXPECT_NE(r.summary().find("did you mean targets?"), std::string::npos) << r.summary();
    EXPECT_NE(r.summary().find("did you mean Sector?"), std::string::npos) << r.summary();
    auto far = validate(parse("MATCH (a)-[:friends_with]->(b) RETURN a.name AS a"), onto(), Mode::Read);
    EXPECT_EQ(far.summary().find("did you mean"), std::string::npos) << far.summary();
}

TEST(RenderFlat, JoinsCellsInOutputOrder) {
    PropertyGraph g = actor_malware_sector();
    EXPECT_EQ(render_flat(run("MATCH (m:Malware) RETURN count(m) AS n", g), g), "1");
    EXPECT_EQ(render_flat(run("MATCH (a)-[:uses]->(m) RETURN a AS a, m.name AS m, m.summary AS s", g), g), "A, M");
    EXPECT_EQ(render_flat(run("MATCH (n) RETURN collect(n.name) AS names", g), g), "A, M, S");
    EXPECT_EQ(render_flat(run("MATCH (n:Tool) RETURN n.name AS n", g), g), "");
}
