#include "support.hpp"

#include "bisim/errors.hpp"
#include "bisim/io.hpp"
#include "bisim/lts.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>

using namespace bisim;
using support::E;
using support::L;
using support::W;

namespace {

// Every state sequence of length <= depth + 1, expanded over every label
// choice per step; grouped by trace.
std::map<Word, std::set<Execution>> brute_executions(const Lts& lts, std::size_t depth)
{
    std::map<Word, std::set<Execution>> out;
    std::vector<Execution> frontier;
    for (State s = 0; s < lts.size(); ++s)
        frontier.push_back(Execution{{}, {s}});
    for (std::size_t len = 0; len <= depth; ++len) {
        std::vector<Execution> next;
        for (const auto& p : frontier) {
            out[p.trace].insert(p);
            if (len == depth)
                continue;
            for (State t = 0; t < lts.size(); ++t) {
                for (const auto& label : lts.labels()) {
                    if (lts.has_transition(p.last(), label, t)) {
                        auto q = p;
                        q.trace.push_back(label);
                        q.states.push_back(t);
                        next.push_back(q);
                    }
                }
            }
        }
        frontier = std::move(next);
    }
    return out;
}

std::set<Execution> as_set(const std::vector<Execution>& v)
{
    return {v.begin(), v.end()};
}

} // namespace

TEST_CASE("smallest aut file")
{
    const auto parsed = parse_aut("des (0,1,2)\n(0,\"a\",1)\n");
    CHECK(parsed.lts.size() == 2);
    CHECK(parsed.lts.transitions().size() == 1);
    CHECK_FALSE(parsed.lts.has_tau());
}

TEST_CASE("branching corpus file has a silent step")
{
    const auto m = support::model("sys_branch/union.aut");
    CHECK(m.lts.size() == 6);
    CHECK(m.lts.transitions().size() == 3);
    CHECK(m.lts.has_tau());
    CHECK_FALSE(m.lts.alphabet().contains(Label::tau()));
}

TEST_CASE("aut errors and warnings")
{
    CHECK_THROWS_AS((void)parse_aut("des (0,1,1)\n(0,\"a\",3)\n"), parse_error);
    CHECK_THROWS_AS((void)parse_aut("garbage\n"), parse_error);
    const auto dup = parse_aut("des (0,2,2)\n(0,\"a\",1)\n(0,\"a\",1)\n");
    CHECK(dup.lts.transitions().size() == 1);
    CHECK(dup.warnings.size() == 1);
}

TEST_CASE("aut round trip on the corpus")
{
    for (const auto* file : {"chain/chain.aut", "sys_branch/union.aut", "sys_branch/x.aut", "sys_branch/y.aut",
                             "sys_fair_rem/x.aut", "sys_fair_rem/y.aut", "sys_union/sys.aut", "sys_comp/sys.aut"}) {
        CAPTURE(file);
        const auto original = parse_aut(read_text_file(support::corpus(file))).lts;
        const auto again = parse_aut(serialize_aut(original)).lts;
        CHECK(again.size() == original.size());
        CHECK(again.transitions() == original.transitions());
    }
}

TEST_CASE("executions of the chain at depth 2")
{
    const auto lts = support::chain();
    const auto stages = executions_up_to(lts, 2);
    CHECK(as_set(stages.at(W("tau.a"))) == std::set<Execution>{E(lts, {"x0", "x1", "x2"}, "tau.a")});
    CHECK(as_set(stages.at(W("a"))) == std::set<Execution>{E(lts, {"x1", "x2"}, "a")});
    CHECK(as_set(stages.at(W(""))) ==
          std::set<Execution>{E(lts, {"x0"}, ""), E(lts, {"x1"}, ""), E(lts, {"x2"}, "")});
    CHECK(stages.at(W("a.a")).empty());

    const auto oracle = brute_executions(lts, 2);
    for (const auto& [trace, execs] : stages) {
        const auto it = oracle.find(trace);
        CHECK(as_set(execs) == (it == oracle.end() ? std::set<Execution>{} : it->second));
    }
}

TEST_CASE("depth 0 has only the empty stage")
{
    const auto lts = support::model("sys_union/sys.aut").lts;
    const auto stages = executions_up_to(lts, 0);
    REQUIRE(stages.size() == 1);
    CHECK(stages.at(W("")).size() == lts.size());
}

TEST_CASE("branching union at depth 1")
{
    const auto lts = support::model("sys_branch/union.aut").lts;
    const auto stages = executions_up_to(lts, 1);
    CHECK(as_set(stages.at(W("a"))) ==
          std::set<Execution>{E(lts, {"x1", "x2"}, "a"), E(lts, {"y1", "y2"}, "a")});
    CHECK(as_set(stages.at(W("tau"))) == std::set<Execution>{E(lts, {"y1", "y3"}, "tau")});
}

TEST_CASE("restriction")
{
    const auto lts = support::chain();
    const auto p = E(lts, {"x0", "x1", "x2"}, "tau.a");
    CHECK(restrict(p, W("tau")) == E(lts, {"x0", "x1"}, "tau"));
    CHECK(restrict(p, p.trace) == p);
    CHECK(restrict(restrict(p, W("tau")), W("")) == restrict(p, W("")));
    CHECK_THROWS_AS((void)restrict(p, W("a")), precondition_error);
}

TEST_CASE("weak reachability")
{
    const auto chain = support::chain();
    const auto x = [&](const char* n) { return *chain.find(n); };
    const auto reach = weak_reach(chain, 2);
    CHECK(reach.contains(WeakStep{x("x0"), W(""), x("x1")}));
    CHECK(reach.contains(WeakStep{x("x0"), W("a"), x("x2")}));
    for (State s = 0; s < chain.size(); ++s)
        CHECK(reach.contains(WeakStep{s, W(""), s}));

    const auto branch = support::model("sys_branch/union.aut").lts;
    const auto y = [&](const char* n) { return *branch.find(n); };
    const auto r2 = weak_reach(branch, 2);
    CHECK(r2.contains(WeakStep{y("y1"), W(""), y("y3")}));
    CHECK(r2.contains(WeakStep{y("y1"), W("a"), y("y2")}));
    CHECK_FALSE(r2.contains(WeakStep{y("y1"), W("a"), y("y3")}));
}

TEST_CASE("lasso fairness on the corpus")
{
    const auto rem = support::model("sys_fair_rem/x.aut").fair();
    const State x = *rem.lts.find("x");
    const State xp = *rem.lts.find("x'");
    const Lasso self{Execution{{}, {x}}, {{L("a"), x}}};
    const Lasso escape{Execution{W("a"), {x, xp}}, {{L("a"), xp}}};
    CHECK_FALSE(is_fair(rem, self));
    CHECK(is_fair(rem, escape));

    const auto uni = support::model("sys_union/sys.aut").fair();
    const State x1 = *uni.lts.find("x1");
    const State y1 = *uni.lts.find("y1");
    const State x2 = *uni.lts.find("x2");
    CHECK(is_fair(uni, Lasso{Execution{{}, {x1}}, {{L("a"), y1}, {L("a"), x1}}}));
    CHECK_FALSE(is_fair(uni, Lasso{Execution{{}, {x2}}, {{L("a"), x2}}}));

    const auto tagged = fair_lassos(rem, 2, 2);
    const auto find = [&](const Lasso& l) {
        return std::find_if(tagged.begin(), tagged.end(), [&](const auto& t) { return t.lasso == canonical(l); });
    };
    REQUIRE(find(self) != tagged.end());
    CHECK_FALSE(find(self)->fair);
    REQUIRE(find(escape) != tagged.end());
    CHECK(find(escape)->fair);

    const auto acyclic = make_fair(parse_aut("des (0,1,2)\n(0,\"a\",1)\n").lts, Streett{});
    CHECK(fair_lassos(acyclic, 4, 4).empty());
    CHECK_THROWS((void)fair_lassos(acyclic, 4, 0));
}

TEST_CASE("always-after fairness with a start guard")
{
    const auto comp = support::model("sys_comp/sys.aut").fair();
    const auto s = [&](const char* n) { return *comp.lts.find(n); };
    CHECK(is_fair(comp, Lasso{Execution{W("a"), {s("x1"), s("x2")}}, {{L("b"), s("x2")}}}));
    CHECK_FALSE(is_fair(comp, Lasso{Execution{W("a"), {s("y1"), s("y3")}}, {{L("b"), s("y3")}}}));
    // Runs that do not start in the guard are unconstrained.
    CHECK(is_fair(comp, Lasso{Execution{{}, {s("z")}}, {{L("b"), s("z")}}}));
    CHECK(is_fair(comp, Lasso{Execution{{}, {s("y3")}}, {{L("b"), s("y3")}}}));
}

TEST_CASE("simulation functions")
{
    const auto x = support::model("sys_fair_rem/x.aut").lts;
    const auto y = support::model("sys_fair_rem/y.aut").lts;
    CHECK(is_simulation(support::map_file("sys_fair_rem/f.map", x, y), x, y).holds);

    const auto chain = support::chain();
    CHECK(is_simulation(identity_map(chain.size()), chain, chain).holds);
    const auto collapse = is_simulation(StateMap(chain.size(), 0), chain, chain);
    CHECK_FALSE(collapse.holds);
    REQUIRE(collapse.violation);
    CHECK(*collapse.violation == Transition{*chain.find("x1"), L("a"), *chain.find("x2")});

    CHECK_THROWS_AS((void)is_simulation(StateMap{0}, chain, chain), precondition_error);
}
