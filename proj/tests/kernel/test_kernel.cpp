#include "support.hpp"

#include "kernel/invariants.hpp"

#include <ssd/kernel/kernel.hpp>

using namespace ssd;

namespace {

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

auto make_kernel(const std::string& sample, KernelConfig cfg = {}) -> Kernel {
    auto k = Kernel::from_source({test::sample(sample), sample}, cfg);
    k.add_developer("alice");
    k.add_developer("bob");
    return k;
}

auto kinds(const Kernel& k, std::size_t from = 0) -> std::vector<std::string> {
    std::vector<std::string> out;
    for (std::size_t i = from; i < k.events().size(); ++i) out.emplace_back(to_string(k.events()[i].kind));
    return out;
}

auto all_invariants(const Kernel& k) -> std::vector<std::string> {
    auto out = test::lock_disjointness(k);
    for (auto& v : test::overlay_consistency(k)) out.push_back(v);
    for (auto& v : test::gate_invariant(k)) out.push_back(v);
    return out;
}

}  // namespace

TEST_CASE("use case: Bob's unbuildable edits stay private, Alice is denied, Bob's fix propagates") {
    auto k = make_kernel("usecase.mj");
    auto foo = *k.resolve("bob", "Demo.Foo");

    auto r1 = k.request_edit("bob", op(OpKind::add_param, "Demo.Foo", "newParam", "in"));
    CHECK(r1.granted);
    CHECK_FALSE(r1.report.buildable);
    CHECK(r1.report.errors.at(0).code == "unknown-type");
    auto r2 = k.request_edit("bob", op(OpKind::rename_method, "Demo.Foo", "Foo1"));
    CHECK(r2.granted);
    CHECK_FALSE(r2.committed_version.has_value());
    CHECK(k.version() == 1);

    CHECK(k.snapshot_of("bob").text().find("void Foo1(int i, in newParam)") != std::string::npos);
    CHECK(k.snapshot_of("alice").text().find("void Foo(int i)") != std::string::npos);

    auto before = k.events().size();
    auto denied = k.request_edit("alice", op(OpKind::rename_method, "Demo.Foo", "Foo2"));
    CHECK_FALSE(denied.granted);
    REQUIRE(denied.denial.has_value());
    CHECK(denied.denial->holder == "bob");
    CHECK(denied.denial->requested == foo);
    CHECK(denied.denial->held == foo);
    CHECK(denied.denial->rule == "same-element");
    CHECK(kinds(k, before) == std::vector<std::string>{"lock_denied"});
    CHECK(k.locks_of("alice").empty());
    CHECK(k.pending_of("alice").empty());

    auto rejected = k.try_commit("bob");
    CHECK_FALSE(rejected.committed);
    CHECK(rejected.report.errors.at(0).code == "unknown-type");
    CHECK(k.version() == 1);

    auto fix = k.request_edit("bob", op(OpKind::set_param_type, "Demo.Foo1.newParam", {}, "int"));
    CHECK(fix.granted);
    CHECK(fix.committed_version == std::optional<std::uint64_t>(2));
    CHECK(k.locks_of("bob").empty());
    CHECK(k.snapshot_of("alice").text() == k.snapshot_of("bob").text());
    CHECK(k.snapshot_of("alice").text().find("void Foo1(int i, int newParam)") != std::string::npos);

    auto retry = denied.op;  // still anchored to Foo's element id
    auto granted = k.request_edit("alice", retry);
    CHECK(granted.granted);
    CHECK(granted.committed_version == std::optional<std::uint64_t>(3));
    CHECK(k.snapshot().text.find("void Foo2(int i, int newParam)") != std::string::npos);
    CHECK(all_invariants(k).empty());
}

TEST_CASE("request_edit: sole developer edits an isolated field") {
    auto k = make_kernel("calls.mj");
    auto r = k.request_edit("alice", op(OpKind::add_field, "Demo", "z", "int", "3"));
    CHECK(r.granted);
    CHECK(r.report.buildable);
    CHECK(r.committed_version == std::optional<std::uint64_t>(2));
    CHECK(k.snapshot().text.find("int z = 3;") != std::string::npos);
    CHECK(kinds(k) == std::vector<std::string>{"lock_granted", "edit_applied", "build_status", "committed"});
}

TEST_CASE("try_commit examples") {
    KernelConfig manual;
    manual.auto_commit = false;
    auto k = make_kernel("usecase.mj", manual);

    SUBCASE("empty overlay") {
        CHECK_THROWS_WITH_AS(k.try_commit("bob"), doctest::Contains("nothing"), KernelError);
        try {
            k.try_commit("bob");
        } catch (const KernelError& e) {
            CHECK(e.code() == "empty-overlay");
        }
        CHECK(k.events().empty());
    }
    SUBCASE("empty after revert") {
        k.request_edit("bob", op(OpKind::rename_field, "Demo.counter", "count"));
        k.revert("bob");
        CHECK_THROWS_AS(k.try_commit("bob"), KernelError);
    }
    SUBCASE("buildable overlay commits and bumps the version by one") {
        k.request_edit("bob", op(OpKind::rename_field, "Demo.counter", "count"));
        auto c = k.try_commit("bob");
        CHECK(c.committed);
        CHECK(c.version == 2);
        CHECK(k.snapshot().text.find("count = count + i;") != std::string::npos);
        CHECK(k.snapshot_of("alice").text() == k.snapshot().text);
    }
}

TEST_CASE("rename cascade locks every reference site") {
    auto k = make_kernel("calls.mj");
    KernelConfig manual;
    manual.auto_commit = false;
    k = make_kernel("calls.mj", manual);
    auto r = k.request_edit("bob", op(OpKind::rename_method, "Demo.Foo", "Go"));
    REQUIRE(r.granted);
    std::vector<std::string> names;
    for (auto id : r.touched) names.push_back(k.name_of(id));
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"Demo.Bar/body[0]", "Demo.Baz/body[0]/then[0]", "Demo.Foo"});
    CHECK(k.snapshot_of("bob").text().find("Go(1);") != std::string::npos);
    CHECK(k.snapshot_of("bob").text().find("Go(x);") != std::string::npos);

    // Alice editing the call site in Bar is blocked via the common method.
    auto d = k.request_edit("alice", op(OpKind::replace_statement, "Demo.Bar/body[1]", {}, {}, "y = 3;"));
    CHECK_FALSE(d.granted);
    CHECK(d.denial->rule == "common-method");
    // An unrelated field stays editable.
    CHECK(k.request_edit("alice", op(OpKind::add_field, "Demo", "z", "int")).granted);
    CHECK(all_invariants(k).empty());
}

TEST_CASE("inevitable pair: rename of someVar and edit of otherVar cannot both hold locks") {
    KernelConfig manual;
    manual.auto_commit = false;
    auto k = make_kernel("inevitable.mj", manual);
    auto a = k.request_edit("alice", op(OpKind::rename_field, "Demo.someVar", "renamedVar"));
    REQUIRE(a.granted);
    auto b = k.request_edit("bob", op(OpKind::replace_statement, "Demo.m2/body[0]", {}, {}, "int otherVar = someVar + 1;"));
    CHECK_FALSE(b.granted);
    CHECK(b.denial->holder == "alice");
    CHECK(test::lock_disjointness_oracle(k).empty());
}

TEST_CASE("revert examples") {
    KernelConfig manual;
    manual.auto_commit = false;
    auto k = make_kernel("usecase.mj", manual);
    SUBCASE("Bob reverts after step 3, Alice may immediately acquire Foo") {
        k.request_edit("bob", op(OpKind::add_param, "Demo.Foo", "newParam", "in"));
        k.request_edit("bob", op(OpKind::rename_method, "Demo.Foo", "Foo1"));
        k.revert("bob");
        CHECK(k.events().back().kind == EventKind::reverted);
        CHECK(k.events().back().details["reason"] == "requested");
        CHECK(k.snapshot_of("bob").text() == k.snapshot().text);
        CHECK(k.request_edit("alice", op(OpKind::rename_method, "Demo.Foo", "Foo2")).granted);
        CHECK(all_invariants(k).empty());
    }
    SUBCASE("revert with empty state is a no-op") {
        k.revert("bob");
        CHECK(k.events().empty());
    }
    SUBCASE("revert then re-request the same edit") {
        auto e = op(OpKind::rename_method, "Demo.Foo", "Foo1");
        REQUIRE(k.request_edit("bob", e).granted);
        k.revert("bob");
        CHECK(k.request_edit("bob", e).granted);
    }
}

TEST_CASE("set_mode examples") {
    KernelConfig manual;
    manual.auto_commit = false;

    SUBCASE("off record, isolated edit, nobody else touches anything: clean adoption") {
        auto k = make_kernel("calls.mj", manual);
        k.set_mode("bob", Mode::off_record);
        auto r = k.request_edit("bob", op(OpKind::replace_statement, "Demo.Bar/body[1]", {}, {}, "y = 5;"));
        CHECK(r.granted);
        CHECK(k.locks_of("bob").empty());
        auto rec = k.set_mode("bob", Mode::on_record);
        REQUIRE(rec.has_value());
        CHECK(rec->clean);
        CHECK(rec->ops == 1);
        CHECK_FALSE(k.locks_of("bob").empty());
        CHECK(k.try_commit("bob").committed);
        CHECK(k.snapshot().text.find("y = 5;") != std::string::npos);
    }
    SUBCASE("a concurrent commit changes an element the off-record developer edited: conflict") {
        auto k = make_kernel("inevitable.mj", manual);
        k.set_mode("bob", Mode::off_record);
        k.request_edit("bob", op(OpKind::replace_statement, "Demo.m2/body[0]", {}, {}, "int otherVar = someVar + 1;"));
        k.request_edit("alice", op(OpKind::rename_field, "Demo.someVar", "renamedVar"));
        REQUIRE(k.try_commit("alice").committed);
        auto rec = k.set_mode("bob", Mode::on_record);
        REQUIRE(rec.has_value());
        CHECK_FALSE(rec->clean);
        REQUIRE(rec->changed.size() == 1);
        CHECK(k.name_of(rec->changed[0]) == "Demo.m2/body[0]");
        CHECK(k.pending_of("bob").empty());
        CHECK(k.stats().reconcile_conflicts == 1);
        auto n = k.events().size();
        CHECK(k.events()[n - 2].kind == EventKind::mode_changed);
        CHECK(k.events()[n - 1].kind == EventKind::reconcile_result);
        CHECK(k.events()[n - 1].details["changed_names"][0] == "Demo.m2/body[0]");
    }
    SUBCASE("off record blocked by a lock held by an on-record developer") {
        auto k = make_kernel("inevitable.mj", manual);
        k.set_mode("bob", Mode::off_record);
        k.request_edit("bob", op(OpKind::replace_statement, "Demo.m2/body[0]", {}, {}, "int otherVar = someVar + 1;"));
        REQUIRE(k.request_edit("alice", op(OpKind::rename_field, "Demo.someVar", "renamedVar")).granted);
        auto rec = k.set_mode("bob", Mode::on_record);
        CHECK_FALSE(rec->clean);
        REQUIRE_FALSE(rec->blocking.empty());
        CHECK(rec->blocking[0].holder == "alice");
        CHECK(test::lock_disjointness(k).empty());
    }
    SUBCASE("off then on with no edits: clean, zero ops") {
        auto k = make_kernel("usecase.mj", manual);
        k.set_mode("alice", Mode::off_record);
        auto rec = k.set_mode("alice", Mode::on_record);
        REQUIRE(rec.has_value());
        CHECK(rec->clean);
        CHECK(rec->ops == 0);
        CHECK(kinds(k) == std::vector<std::string>{"mode_changed", "mode_changed", "reconcile_result"});
    }
    SUBCASE("going off record with a pending overlay is refused") {
        auto k = make_kernel("usecase.mj", manual);
        k.request_edit("bob", op(OpKind::rename_method, "Demo.Foo", "Foo1"));
        try {
            k.set_mode("bob", Mode::off_record);
            FAIL("expected nonempty-overlay");
        } catch (const KernelError& e) {
            CHECK(e.code() == "nonempty-overlay");
        }
    }
    SUBCASE("commit while off record is refused") {
        auto k = make_kernel("usecase.mj", manual);
        k.set_mode("bob", Mode::off_record);
        k.request_edit("bob", op(OpKind::rename_method, "Demo.Foo", "Foo1"));
        try {
            k.try_commit("bob");
            FAIL("expected off-record-violation");
        } catch (const KernelError& e) {
            CHECK(e.code() == "off-record-violation");
        }
    }
    SUBCASE("an off-record view does not move with commits") {
        auto k = make_kernel("usecase.mj", manual);
        k.set_mode("bob", Mode::off_record);
        auto frozen = k.snapshot_of("bob").text();
        k.request_edit("alice", op(OpKind::rename_method, "Demo.Total", "Sum"));
        k.try_commit("alice");
        CHECK(k.snapshot_of("bob").text() == frozen);
    }
}

TEST_CASE("snapshot_of examples") {
    auto k = make_kernel("usecase.mj");
    k.add_developer("carol");
    CHECK(k.snapshot_of("carol").text() == k.snapshot().text);
    CHECK(k.snapshot_of("carol").base_version == 1);
    try {
        k.snapshot_of("mallory");
        FAIL("expected unknown-developer");
    } catch (const KernelError& e) {
        CHECK(e.code() == "unknown-developer");
    }
}

TEST_CASE("request_edit errors") {
    auto k = make_kernel("usecase.mj");
    auto code_of = [&](const std::string& who, EditOp o) -> std::string {
        try {
            k.request_edit(who, std::move(o));
        } catch (const KernelError& e) {
            return e.code();
        }
        return "none";
    };
    CHECK(code_of("bob", op(OpKind::insert_statement, "Demo.Foo", {}, {}, "int x = ;")) == "malformed-op");
    CHECK(code_of("bob", op(OpKind::rename_method, "Demo.Nope", "X")) == "unknown-element");
    CHECK(code_of("bob", op(OpKind::rename_method, "Demo.counter", "X")) == "malformed-op");
    CHECK(code_of("bob", op(OpKind::rename_method, "Demo.Foo", "class")) == "malformed-op");
    CHECK(code_of("zed", op(OpKind::rename_method, "Demo.Foo", "X")) == "unknown-developer");
    CHECK(k.events().empty());

    // A target that vanished after a concurrent commit.
    KernelConfig manual;
    manual.auto_commit = false;
    auto k2 = make_kernel("usecase.mj", manual);
    auto stale = op(OpKind::rename_method, "Demo.Total", "Sum");
    stale.target = *k2.resolve("alice", "Demo.Total");
    stale.target_name.clear();
    k2.request_edit("bob", op(OpKind::delete_method, "Demo.Total"));
    REQUIRE(k2.try_commit("bob").committed);
    try {
        k2.request_edit("alice", stale);
        FAIL("expected unknown-element");
    } catch (const KernelError& e) {
        CHECK(e.code() == "unknown-element");
    }
}

TEST_CASE("structural denial: adding a member to a class another developer deletes") {
    KernelConfig manual;
    manual.auto_commit = false;
    auto k = Kernel::from_source({"class A { int a; } class B { int b; }", "inline"}, manual);
    k.add_developer("alice");
    k.add_developer("bob");
    REQUIRE(k.request_edit("alice", op(OpKind::delete_class, "B")).granted);
    auto r = k.request_edit("bob", op(OpKind::add_field, "B", "c", "int"));
    CHECK_FALSE(r.granted);
    CHECK(r.denial->rule == "structural");
    CHECK(k.request_edit("bob", op(OpKind::add_field, "A", "c", "int")).granted);
    CHECK(k.try_commit("alice").committed);
    CHECK(k.stats().rebase_failures == 0);
}

TEST_CASE("lease expiry force-reverts an idle holder") {
    KernelConfig cfg;
    cfg.auto_commit = false;
    cfg.lock_lease_ms = 1000;
    auto k = make_kernel("usecase.mj", cfg);
    REQUIRE(k.request_edit("bob", op(OpKind::rename_method, "Demo.Foo", "Foo1"), 100).granted);
    CHECK_FALSE(k.request_edit("alice", op(OpKind::rename_method, "Demo.Foo", "Foo2"), 900).granted);
    auto r = k.request_edit("alice", op(OpKind::rename_method, "Demo.Foo", "Foo2"), 1100);
    CHECK(r.granted);
    bool expired = false;
    for (const auto& e : k.events()) {
        if (e.kind == EventKind::reverted && e.details["reason"] == "lease-expired") expired = e.developer == "bob";
    }
    CHECK(expired);
}

TEST_CASE("config parsing") {
    auto cfg = parse_config("# comment\nauto_commit = false\nlock_lease_ms = 250\n");
    CHECK_FALSE(cfg.auto_commit);
    CHECK(cfg.lock_lease_ms == 250);
    CHECK(parse_config("").auto_commit);
    CHECK_THROWS_AS(parse_config("bogus = 1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("lock_lease_ms = -5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("auto_commit"), std::invalid_argument);
}

TEST_CASE("event records round-trip through JSON") {
    auto k = make_kernel("usecase.mj");
    k.request_edit("bob", op(OpKind::add_param, "Demo.Foo", "n", "int"));
    for (const auto& e : k.events()) {
        auto j = to_json(e);
        CHECK(j["t"] == std::string(to_string(e.kind)));
        auto back = event_from_json(nlohmann::json::parse(j.dump()));
        CHECK(back.seq == e.seq);
        CHECK(back.kind == e.kind);
        CHECK(back.details == e.details);
    }
}

TEST_CASE("unbuildable project is refused") {
    try {
        Kernel::from_source({"class A { Missing m; }", "inline"});
        FAIL("expected unbuildable-project");
    } catch (const KernelError& e) {
        CHECK(e.code() == "unbuildable-project");
    }
}
