#include <ssd/sim/generator.hpp>

#include <random>
#include <sstream>

namespace ssd::sim {

namespace {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    auto below(std::uint64_t n) -> std::uint64_t { return engine_() % n; }
    auto chance(int percent) -> bool { return below(100) < static_cast<std::uint64_t>(percent); }

private:
    std::mt19937_64 engine_;
};

auto class_name(int c) -> std::string { return std::string(1, static_cast<char>('A' + c)); }

}  // namespace

auto generated_project(const GeneratorOptions& o) -> std::string {
    std::ostringstream out;
    for (int c = 0; c < o.classes; ++c) {
        out << "class " << class_name(c) << " {\n";
        for (int f = 0; f < o.fields; ++f) out << "    int f" << f << ";\n";
        for (int m = 0; m < o.methods; ++m) {
            out << "    void m" << m << "() {\n";
            out << "        f" << m % o.fields << " = f" << (m + 1) % o.fields << " + 1;\n";
            out << "        f" << (m + 1) % o.fields << " = f" << (m + 2) % o.fields << " + 2;\n";
            out << "    }\n";
        }
        out << "}\n";
    }
    return out.str();
}

auto generate_scenario(std::uint64_t seed, const GeneratorOptions& o) -> Scenario {
    Rng rng(seed);
    Scenario s;
    s.name = "random-" + std::to_string(seed);
    s.project_path = "generated.mj";
    s.project_source = generated_project(o);
    s.mode = SimMode::both;
    s.auto_commit = false;
    s.on_unresolved = OnUnresolved::skip;
    for (int d = 0; d < o.developers; ++d) s.developers.push_back("dev" + std::to_string(d + 1));

    RetryPolicy retry{true, 3, 5};
    std::size_t line = 0;
    for (const auto& dev : s.developers) {
        std::int64_t vt = 0;
        int since_checkin = 0;
        int next_checkin = 3 + static_cast<int>(rng.below(5));
        int fresh = 0;
        auto push = [&](Action a) {
            a.developer = dev;
            a.vt = vt;
            a.line = ++line;
            s.actions.push_back(std::move(a));
        };
        auto edit = [&](OpKind kind, std::string target) {
            Action a;
            a.op.kind = kind;
            a.op.target_name = std::move(target);
            a.retry = retry;
            return a;
        };
        auto field = [&] { return "f" + std::to_string(rng.below(static_cast<std::uint64_t>(o.fields))); };
        auto assignment = [&] { return field() + " = " + field() + " + " + std::to_string(rng.below(10)) + ";"; };

        for (int n = 0; n < o.ops_per_developer; ++n) {
            vt += 1 + static_cast<std::int64_t>(rng.below(10));
            auto cls = class_name(static_cast<int>(rng.below(static_cast<std::uint64_t>(o.classes))));
            auto method = cls + ".m" + std::to_string(rng.below(static_cast<std::uint64_t>(o.methods)));
            auto roll = rng.below(100);
            if (roll < 40) {
                auto a = edit(OpKind::replace_statement, method + "/body[" + std::to_string(rng.below(2)) + "]");
                a.op.text = assignment();
                push(std::move(a));
            } else if (roll < 55) {
                auto a = edit(OpKind::set_field_init, cls + "." + field());
                a.op.text = std::to_string(rng.below(10));
                push(std::move(a));
            } else if (roll < 70) {
                auto a = edit(OpKind::insert_statement, method);
                a.op.text = assignment();
                push(std::move(a));
            } else if (roll < 85) {
                // Typo first, fix right after: an unbuildable stretch in the overlay.
                auto name = "p_" + dev + "_" + std::to_string(fresh++);
                auto a = edit(OpKind::add_param, method);
                a.op.name = name;
                a.op.type = "in";
                push(std::move(a));
                vt += 1;
                auto fix = edit(OpKind::set_param_type, method + "." + name);
                fix.op.type = "int";
                push(std::move(fix));
            } else {
                auto a = edit(OpKind::add_field, cls);
                a.op.name = "g_" + dev + "_" + std::to_string(fresh++);
                a.op.type = "int";
                push(std::move(a));
            }
            if (++since_checkin >= next_checkin) {
                vt += 1;
                Action c;
                c.kind = ActionKind::checkin;
                push(std::move(c));
                since_checkin = 0;
                next_checkin = 3 + static_cast<int>(rng.below(5));
            }
        }
        vt += 1;
        Action c;
        c.kind = ActionKind::checkin;
        push(std::move(c));
    }
    return s;
}

}  // namespace ssd::sim
