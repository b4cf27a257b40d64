#include "support.hpp"

#include "oracles/diff3_oracle.hpp"

#include <ssd/depcore/elements.hpp>
#include <ssd/sim/baseline.hpp>

#include <random>

using namespace ssd;
using namespace ssd::sim;

namespace {

auto project(const std::string& text) -> Ast {
    auto ast = test::parse_numbered(text);
    canonicalize(ast);
    return ast;
}

auto op(OpKind kind, std::string target, std::string name = {}, std::string type = {}, std::string text = {})
    -> EditOp {
    EditOp o;
    o.kind = kind;
    o.target_name = std::move(target);
    o.name = std::move(name);
    o.type = std::move(type);
    o.text = std::move(text);
    return o;
}

auto names(const std::vector<MergeConflict>& cs) -> std::vector<std::string> {
    std::vector<std::string> out;
    for (const auto& c : cs) out.push_back(c.name + ":" + c.reason);
    return out;
}

constexpr const char* small = "class Demo {\n"
                              "    int a;\n"
                              "    int b;\n"
                              "    void m() {\n"
                              "        a = 1;\n"
                              "        b = 2;\n"
                              "    }\n"
                              "    int get() {\n"
                              "        return a;\n"
                              "    }\n"
                              "}\n";

}  // namespace

TEST_CASE("checkin outcomes") {
    BaselineRepo repo(project(small));
    repo.add_developer("x");
    repo.add_developer("y");
    CHECK(repo.checkin("x").outcome == CheckinOutcome::noop);

    repo.apply("x", op(OpKind::set_field_init, "Demo.a", {}, {}, "5"));
    CHECK(repo.central().text.find("int a = 5;") == std::string::npos);  // invisible until checkin
    auto ff = repo.checkin("x");
    CHECK(ff.outcome == CheckinOutcome::fast_forward);
    CHECK(ff.version == 2);

    repo.apply("y", op(OpKind::replace_statement, "Demo.m/body[1]", {}, {}, "b = 3;"));
    auto merged = repo.checkin("y");
    CHECK(merged.outcome == CheckinOutcome::merged);
    CHECK(repo.central().text.find("int a = 5;") != std::string::npos);
    CHECK(repo.central().text.find("b = 3;") != std::string::npos);
    CHECK(repo.merge_invocations() == 1);

    repo.apply("x", op(OpKind::set_field_type, "Demo.b", {}, "Nope"));
    CHECK(repo.checkin("x").outcome == CheckinOutcome::unbuildable);
    CHECK(repo.version() == 3);
    repo.revert("x");
    CHECK(repo.working("x").text == repo.central().text);
    CHECK_THROWS_AS(repo.apply("x", op(OpKind::rename_field, "Demo.zzz", "q")), OpError);
    CHECK_THROWS_AS(repo.checkin("nobody"), KernelError);
}

TEST_CASE("divergent edits conflict and reset the working copy") {
    BaselineRepo repo(project(small));
    repo.add_developer("x");
    repo.add_developer("y");
    repo.apply("x", op(OpKind::rename_method, "Demo.m", "m1"));
    repo.apply("y", op(OpKind::rename_method, "Demo.m", "m2"));
    CHECK(repo.checkin("x").outcome == CheckinOutcome::fast_forward);
    auto r = repo.checkin("y");
    CHECK(r.outcome == CheckinOutcome::conflict);
    CHECK(names(r.conflicts) == std::vector<std::string>{"Demo.m:divergent"});
    CHECK(repo.conflicts() == 1);
    CHECK(repo.working("y").text == repo.central().text);
    CHECK(repo.checkin("y").outcome == CheckinOutcome::noop);
}

TEST_CASE("identical edits on both sides merge cleanly") {
    BaselineRepo repo(project(small));
    repo.add_developer("x");
    repo.add_developer("y");
    repo.apply("x", op(OpKind::set_field_init, "Demo.a", {}, {}, "1"));
    repo.apply("y", op(OpKind::set_field_init, "Demo.a", {}, {}, "1"));
    repo.checkin("x");
    CHECK(repo.checkin("y").outcome == CheckinOutcome::merged);
}

TEST_CASE("delete against modify") {
    auto base = project(small);
    auto a = base, b = base;
    auto table = ElementTable::from(base);
    auto m = *table.lookup("Demo.m");
    std::erase_if(a.classes[0].methods, [&](const Method& x) { return x.id == m; });
    b.classes[0].methods[0].body[0].value->text = "7";
    b.classes[0].methods[0].body[0].value->kind = ExprKind::int_literal;
    auto r1 = three_way_merge(base, a, b);
    CHECK(names(r1.conflicts) == std::vector<std::string>{"Demo.m/body[0]:delete-modify"});
    auto r2 = three_way_merge(base, b, a);
    CHECK(names(r2.conflicts) == std::vector<std::string>{"Demo.m/body[0]:modify-delete"});
    // Deleting something the other side left alone is not a conflict.
    auto r3 = three_way_merge(base, a, base);
    CHECK(r3.conflicts.empty());
    CHECK(print_unit(*r3.merged).find("void m()") == std::string::npos);
}

TEST_CASE("a clean element merge that breaks the build is a conflict") {
    BaselineRepo repo(project(small));
    repo.add_developer("x");
    repo.add_developer("y");
    repo.apply("x", op(OpKind::rename_field, "Demo.b", "bb"));
    repo.apply("y", op(OpKind::insert_statement, "Demo.get", {}, {}, "b = 4;"));
    repo.checkin("x");
    auto r = repo.checkin("y");
    CHECK(r.outcome == CheckinOutcome::conflict);
    CHECK(names(r.conflicts) == std::vector<std::string>{"<build>:build"});
}

TEST_CASE("inserted statements keep their place") {
    auto base = project(small);
    BaselineRepo repo(base);
    repo.add_developer("x");
    repo.add_developer("y");
    EditOp first = op(OpKind::insert_statement, "Demo.m", {}, {}, "a = 9;");
    first.index = 1;
    repo.apply("x", first);
    repo.apply("y", op(OpKind::insert_statement, "Demo.m", {}, {}, "b = 9;"));
    repo.checkin("y");
    CHECK(repo.checkin("x").outcome == CheckinOutcome::merged);
    CHECK(repo.central().text.find("a = 1;\n        a = 9;\n        b = 2;\n        b = 9;") != std::string::npos);
}

TEST_CASE("three_way_merge agrees with the diff3 oracle on small fixtures") {
    std::vector<std::string> fixtures{small, test::sample("calls.mj"), test::sample("usecase.mj"),
                                      test::sample("inevitable.mj"), test::sample("shapes.mj")};
    const std::vector<std::string> pool{"a", "b", "q", "m", "get", "Foo"};
    const std::vector<std::string> types{"int", "bool"};
    const std::vector<std::string> stmts{"a = 1;", "b = a + 2;", "if (a < 1) { b = 2; }", "int t = 3;"};
    const std::vector<OpKind> kinds{OpKind::rename_field,      OpKind::set_field_type,   OpKind::set_field_init,
                                    OpKind::rename_method,     OpKind::add_param,        OpKind::remove_param,
                                    OpKind::insert_statement,  OpKind::replace_statement, OpKind::delete_statement,
                                    OpKind::add_field,         OpKind::delete_method,    OpKind::rename_param};
    std::mt19937_64 rng(42);
    auto pick = [&](const auto& v) -> const auto& { return v[rng() % v.size()]; };

    int compared = 0, conflicting = 0, clean = 0;
    for (const auto& text : fixtures) {
        auto base = project(text);
        auto table = ElementTable::from(base);
        REQUIRE(table.size() <= 50);
        for (int round = 0; round < 200; ++round) {
            IdAllocator ids(10000);
            auto side = [&](Ast tree) {
                int ops = 1 + static_cast<int>(rng() % 3);
                for (int i = 0; i < ops; ++i) {
                    auto elements = ElementTable::from(tree);
                    EditOp o;
                    o.kind = pick(kinds);
                    o.target = pick(elements.elements()).id;
                    o.name = pick(pool);
                    o.type = pick(types);
                    o.text = o.kind == OpKind::set_field_init ? "1" : pick(stmts);
                    try {
                        Ast next = tree;
                        auto bindings = bind(next).table;
                        apply_op(next, bindings, o, ids);
                        canonicalize(next);
                        tree = std::move(next);
                    } catch (const OpError&) {
                    }
                }
                return tree;
            };
            auto mine = side(base);
            auto theirs = side(base);
            auto got = three_way_merge(base, mine, theirs);
            auto want = oracle::diff3(base, mine, theirs);
            std::set<ElementId> got_ids;
            for (const auto& c : got.conflicts) got_ids.insert(c.element);
            CHECK(got_ids == want.conflicts);
            CHECK(got.merged.has_value() == want.conflicts.empty());
            if (got.merged && want.conflicts.empty()) {
                CHECK(oracle::own_map(*got.merged) == want.merged);
                ++clean;
            } else {
                ++conflicting;
            }
            ++compared;
        }
    }
    CHECK(compared == 1000);
    CHECK(clean > 200);
    CHECK(conflicting > 10);
}
