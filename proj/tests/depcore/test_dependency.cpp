#include "support.hpp"

#include "oracles/dependency_oracle.hpp"

#include <ssd/depcore/dependency.hpp>
#include <ssd/minilang/printer.hpp>

using namespace ssd;

namespace {

struct Fixture {
    Ast ast;
    ElementTable table;
    BindingTable bindings;
    RefIndex index;

    explicit Fixture(const std::string& text) : ast(test::parse_numbered(text)) {
        table = ElementTable::from(ast);
        bindings = bind(ast).table;
        IndexSource src{"snapshot", &bindings, {}};
        index = build_ref_index(std::span(&src, 1));
    }

    auto id(std::string_view qname) const -> ElementId {
        auto found = table.lookup(qname);
        REQUIRE_MESSAGE(found.has_value(), std::string(qname));
        return *found;
    }

    auto names(const std::vector<ElementId>& ids) const -> std::vector<std::string> {
        std::vector<std::string> out;
        for (auto i : ids) out.push_back(table.find(i)->qualified_name);
        std::sort(out.begin(), out.end());
        return out;
    }
};

}  // namespace

TEST_CASE("qualified names") {
    Fixture f(test::sample("shapes.mj"));
    CHECK(f.table.lookup("Point").has_value());
    CHECK(f.table.lookup("Point.x").has_value());
    CHECK(f.table.lookup("Segment.Walk.p").has_value());
    CHECK(f.table.lookup("Segment.Walk/body[1]").has_value());
    CHECK(f.table.lookup("Segment.Walk/body[1]/body[1]/then[0]").has_value());
    CHECK(f.table.lookup("Segment.Walk/body[1]/body[1]/else[0]").has_value());
    CHECK(f.table.find(f.id("Segment.Walk.p"))->kind == ElementKind::param);
    CHECK(f.table.find(f.id("Segment.Walk.p"))->parent == f.id("Segment.Walk"));
}

TEST_CASE("enclosing_method examples") {
    Fixture f(test::sample("calls.mj"));
    CHECK(enclosing_method(f.id("Demo.Foo/body[0]"), f.table) == f.id("Demo.Foo"));
    CHECK(enclosing_method(f.id("Demo.Foo"), f.table) == f.id("Demo.Foo"));
    CHECK(enclosing_method(f.id("Demo.Baz/body[0]/then[0]"), f.table) == f.id("Demo.Baz"));
    CHECK_FALSE(enclosing_method(f.id("Demo.x"), f.table).has_value());
    CHECK_FALSE(enclosing_method(f.id("Demo"), f.table).has_value());
    CHECK_THROWS_AS(enclosing_method(9999, f.table), UnknownElement);
}

TEST_CASE("dependent examples") {
    Fixture f(test::sample("inevitable.mj"));
    auto some_var = f.id("Demo.someVar");
    auto other_var = f.id("Demo.m2/body[0]");
    CHECK(dependency_rule(some_var, other_var, f.index, f.table) == DependencyRule::reference);
    CHECK(dependency_rule(some_var, some_var, f.index, f.table) == DependencyRule::same_element);

    Fixture g(test::sample("calls.mj"));
    CHECK_FALSE(dependent(g.id("Demo.x"), g.id("Demo.y"), g.index, g.table));
    CHECK(dependency_rule(g.id("Demo.Foo"), g.id("Demo.Foo/body[1]"), g.index, g.table) ==
          DependencyRule::common_method);
    CHECK_THROWS_AS(dependent(g.id("Demo.x"), 4242, g.index, g.table), UnknownElement);
}

TEST_CASE("dependents_of examples") {
    SUBCASE("method Foo: itself, params, body statements, and call sites elsewhere") {
        Fixture f(test::sample("calls.mj"));
        auto got = f.names(dependents_of(f.id("Demo.Foo"), f.index, f.table));
        CHECK(got == std::vector<std::string>{"Demo.Bar/body[0]", "Demo.Baz/body[0]/then[0]", "Demo.Foo",
                                              "Demo.Foo.i", "Demo.Foo/body[0]", "Demo.Foo/body[1]"});
        oracle::BruteForceDependency bf(f.ast);
        std::vector<ElementId> expected;
        for (auto x : bf.ids()) {
            if (bf.dependent(f.id("Demo.Foo"), x)) expected.push_back(x);
        }
        CHECK(f.names(expected) == got);
    }
    SUBCASE("element without method ancestor and without references") {
        Fixture f("class Demo { int lonely; int other; }");
        CHECK(dependents_of(f.id("Demo.lonely"), f.index, f.table) == std::vector<ElementId>{f.id("Demo.lonely")});
    }
    SUBCASE("field someVar: the pairwise set, not a closure") {
        Fixture f(test::sample("inevitable.mj"));
        auto got = f.names(dependents_of(f.id("Demo.someVar"), f.index, f.table));
        CHECK(got == std::vector<std::string>{"Demo.m2/body[0]", "Demo.someVar"});
    }
}

TEST_CASE("non-transitivity regression triple") {
    Fixture f(test::sample("calls.mj"));
    auto x = f.id("Demo.x");
    auto assign = f.id("Demo.Foo/body[0]");
    auto twice = f.id("Demo.Foo/body[1]");
    CHECK(dependent(x, assign, f.index, f.table));
    CHECK(dependent(assign, twice, f.index, f.table));
    CHECK_FALSE(dependent(x, twice, f.index, f.table));
}

TEST_CASE("symmetry, reflexivity, and oracle equivalence on every fixture") {
    for (const auto& text : oracle::dependency_fixtures()) {
        Fixture f(text);
        oracle::BruteForceDependency bf(f.ast);
        REQUIRE(bf.size() == f.table.size());
        REQUIRE(bf.size() <= 50);
        std::size_t disagreements = 0;
        for (auto a : bf.ids()) {
            CHECK(dependent(a, a, f.index, f.table));
            for (auto b : bf.ids()) {
                bool got = dependent(a, b, f.index, f.table);
                if (got != bf.dependent(a, b)) ++disagreements;
                if (got != dependent(b, a, f.index, f.table)) ++disagreements;
            }
        }
        CHECK_MESSAGE(disagreements == 0, text);
    }
}

TEST_CASE("build_ref_index examples") {
    SUBCASE("single snapshot with one reference gives one edge") {
        Fixture f("class Demo { int v; void m() { int w = v; } }");
        CHECK(f.index.size() == 1);
        CHECK(f.index.sources({f.id("Demo.m/body[0]"), f.id("Demo.v")}) == std::vector<std::string>{"snapshot"});
    }
    SUBCASE("an unbuildable overlay still contributes its resolvable references") {
        Fixture snap(test::sample("inevitable.mj"));
        // Developer 2's pending edit, with an unrelated unknown type elsewhere.
        auto overlay = snap.ast;
        auto stmt = parse_statement("int otherVar = someVar + 1;");
        REQUIRE(stmt.ok());
        stmt.value->id = snap.id("Demo.m2/body[0]");
        overlay.classes[0].methods[1].body[0] = *stmt.value;
        overlay.classes[0].methods[0].body[0].type.name = "in";
        auto overlay_text = canonicalize(overlay);
        auto overlay_bind = bind(overlay);
        CHECK_FALSE(overlay_bind.ok());

        // Replace the snapshot's edge so the overlay is the only contributor.
        BindingTable empty;
        std::vector<IndexSource> sources{{"snapshot", &empty, {}}, {"dev2", &overlay_bind.table, {}}};
        auto index = build_ref_index(sources);
        RefEdge edge{snap.id("Demo.m2/body[0]"), snap.id("Demo.someVar")};
        CHECK(index.linked(edge.from, edge.to));
        CHECK(index.sources(edge) == std::vector<std::string>{"dev2"});
    }
    SUBCASE("two overlays referencing the same field give two source tags") {
        Fixture snap("class Demo { int v; void a() { int p = 0; } void b() { int q = 0; } }");
        auto one = snap.ast;
        one.classes[0].methods[0].body[0].value->kind = ExprKind::name;
        one.classes[0].methods[0].body[0].value->text = "v";
        canonicalize(one);
        auto two = snap.ast;
        two.classes[0].methods[1].body[0].value->kind = ExprKind::name;
        two.classes[0].methods[1].body[0].value->text = "v";
        canonicalize(two);
        auto b1 = bind(one).table;
        auto b2 = bind(two).table;
        std::vector<IndexSource> sources{{"snapshot", &snap.bindings, {}}, {"alice", &b1, {}}, {"bob", &b2, {}}};
        auto index = build_ref_index(sources);
        auto e1 = RefEdge{snap.id("Demo.a/body[0]"), snap.id("Demo.v")};
        auto e2 = RefEdge{snap.id("Demo.b/body[0]"), snap.id("Demo.v")};
        CHECK(index.size() == 2);
        CHECK(index.sources(e1) == std::vector<std::string>{"alice"});
        CHECK(index.sources(e2) == std::vector<std::string>{"bob"});
        // Compare against per-view bind outputs.
        CHECK(edges_of(b1) == std::vector<RefEdge>{e1});
        CHECK(edges_of(b2) == std::vector<RefEdge>{e2});
    }
    SUBCASE("extra edges from a last successful bind are kept") {
        BindingTable empty;
        std::vector<RefEdge> carried{{5, 2}};
        std::vector<IndexSource> sources{{"dev", &empty, carried}};
        auto index = build_ref_index(sources);
        CHECK(index.linked(2, 5));
    }
}
