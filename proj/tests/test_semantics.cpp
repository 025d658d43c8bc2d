#include "support.hpp"

#include "bisim/errors.hpp"
#include "bisim/semantics.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace bisim;
using support::E;
using support::L;
using support::W;

namespace {

std::set<SemElement> stage_set(const SemPresheaf& sem, const Point& point)
{
    const auto& list = sem.stage(point);
    return {list.begin(), list.end()};
}

std::set<SemElement> as_elements(std::initializer_list<Execution> list)
{
    return {list.begin(), list.end()};
}

// Minimal executions by filtering every execution up to the depth.
std::set<Execution> minimal_oracle(const Lts& lts, const Word& observed, std::size_t depth)
{
    std::set<Execution> out;
    for (const auto& [trace, list] : executions_up_to(lts, depth))
        for (const auto& p : list)
            if (hide(p.trace) == observed && (p.trace.empty() || !p.trace.back().is_tau()))
                out.insert(p);
    return out;
}

// Shortest prefix with the given visible trace, by trying every length.
Execution mpast_oracle(const Execution& p, const Word& observed)
{
    for (std::size_t n = 0; n <= p.length(); ++n) {
        const auto q = restrict_to_length(p, n);
        if (hide(q.trace) == observed)
            return q;
    }
    throw precondition_error("no prefix");
}

bool same_data(const NatTrans& a, const NatTrans& b)
{
    const auto& base = a.source().base();
    if (a.source().sizes() != b.source().sizes())
        return false;
    for (Elem e = 0; e < base.size(); ++e)
        for (std::size_t x = 0; x < a.source().size(e); ++x)
            if (a.at(e, x) != b.at(e, x))
                return false;
    return true;
}

Lts two_step()
{
    return Lts{{"s", "t"}, {Transition{0, L("a"), 1}}, {L("a")}};
}

} // namespace

TEST_CASE("hiding words and points")
{
    CHECK(hide(W("tau.a.tau.b.tau")) == W("a.b"));
    CHECK(hide(W("tau.tau")).empty());
    CHECK(hide(Point::finite(W("tau.a"))) == Point::finite(W("a")));
    CHECK(hide(Point::stretched(3)) == Point::bar());
    CHECK(hide(Point::bar()) == Point::bar());
}

TEST_CASE("hiding map between point sets is monotone")
{
    const std::set<Label> letters{L("a")};
    const auto from = stretched_points(letters, 2);
    const auto to = barred_points(letters, 2);
    const auto h = hiding_map(from, to);
    CHECK(is_monotone(h));
    CHECK(to->point(h.map[from->at(Point::finite(W("tau.a")))]) == Point::finite(W("a")));
    CHECK(to->point(h.map[from->at(Point::stretched(2))]) == Point::bar());
}

TEST_CASE("minimal executions")
{
    const auto chain = support::chain();
    const auto at_a = minimal_executions(chain, W("a"), 3);
    CHECK(std::set<Execution>(at_a.begin(), at_a.end()) ==
          std::set<Execution>{E(chain, {"x0", "x1", "x2"}, "tau.a"), E(chain, {"x1", "x2"}, "a")});
    const auto at_eps = minimal_executions(chain, W(""), 3);
    CHECK(at_eps.size() == 3);
    CHECK(minimal_executions(chain, W("a"), 1).size() == 1);

    const auto branch = support::model("sys_branch/union.aut").lts;
    const auto b = minimal_executions(branch, W("a"), 3);
    CHECK(std::set<Execution>(b.begin(), b.end()) ==
          std::set<Execution>{E(branch, {"x1", "x2"}, "a"), E(branch, {"y1", "y2"}, "a")});

    for (const auto& lts : {chain, branch}) {
        for (const auto& w : {W(""), W("a"), W("a.a")}) {
            const auto got = minimal_executions(lts, w, 3);
            CHECK(std::set<Execution>(got.begin(), got.end()) == minimal_oracle(lts, w, 3));
        }
    }
}

TEST_CASE("mpast")
{
    const auto chain = support::chain();
    const auto p = E(chain, {"x0", "x1", "x2"}, "tau.a");
    CHECK(mpast(p, W("")) == E(chain, {"x0"}, ""));
    CHECK(mpast(p, W("a")) == p);
    CHECK(mpast(p, W("a")) == mpast_oracle(p, W("a")));
    CHECK_THROWS_AS((void)mpast(p, W("b")), precondition_error);
}

TEST_CASE("branching semantics of the chain")
{
    const auto chain = support::chain();
    const auto sem = branching_sem(chain, 3);
    CHECK(validate(*sem.presheaf).valid);
    CHECK(stage_set(sem, Point::bar()) ==
          as_elements({E(chain, {"x0"}, ""), E(chain, {"x1"}, ""), E(chain, {"x2"}, ""),
                       E(chain, {"x0", "x1"}, "tau")}));

    const Elem bar = sem.points->at(Point::bar());
    const Elem eps = sem.points->at(Point::finite(W("")));
    const auto silent = sem.find(bar, E(chain, {"x0", "x1"}, "tau"));
    REQUIRE(silent);
    CHECK(sem.elements[eps][sem.presheaf->res(bar, eps, *silent)] == SemElement{E(chain, {"x0"}, "")});

    const Elem a = sem.points->at(Point::finite(W("a")));
    const auto long_run = sem.find(a, E(chain, {"x0", "x1", "x2"}, "tau.a"));
    REQUIRE(long_run);
    CHECK(sem.elements[eps][sem.presheaf->res(a, eps, *long_run)] == SemElement{E(chain, {"x0"}, "")});

    const auto failed = branching_failed_sem(chain, 3);
    CHECK_FALSE(failed.points->find(Point::bar()));
    CHECK(validate(*failed.presheaf).valid);
}

TEST_CASE("branching semantics of the union system")
{
    const auto branch = support::model("sys_branch/union.aut").lts;
    const auto sem = branching_sem(branch, 2);
    CHECK(validate(*sem.presheaf).valid);
    CHECK(stage_set(sem, Point::bar()).contains(SemElement{E(branch, {"y1", "y3"}, "tau")}));
}

TEST_CASE("barred base presheaf")
{
    const auto chain = support::chain();
    const auto base = base_presheaf(chain, 3, true);
    CHECK(validate(*base.presheaf).valid);
    CHECK(stage_set(base, Point::stretched(1)) == stage_set(base, Point::stretched(2)));
    CHECK(stage_set(base, Point::stretched(1)).contains(SemElement{E(chain, {"x0", "x1"}, "tau")}));

    const Elem one = base.points->at(Point::stretched(1));
    const Elem eps = base.points->at(Point::finite(W("")));
    const auto silent = base.find(one, E(chain, {"x0", "x1"}, "tau"));
    REQUIRE(silent);
    CHECK(base.elements[eps][base.presheaf->res(one, eps, *silent)] == SemElement{E(chain, {"x0"}, "")});

    const auto plain = base_presheaf(chain, 2, false);
    CHECK(validate(*plain.presheaf).valid);
    CHECK(stage_set(plain, Point::finite(W("tau.a"))) == as_elements({E(chain, {"x0", "x1", "x2"}, "tau.a")}));
}

TEST_CASE("image of an execution under a branching simulation")
{
    const auto chain = support::chain();
    const StateMap f{1, 1, 2};
    REQUIRE(is_branching_simulation(f, chain, chain).holds);
    CHECK(map_pf(f, chain, E(chain, {"x0", "x1", "x2"}, "tau.a")) == E(chain, {"x1", "x2"}, "a"));
    CHECK(map_pf(f, chain, E(chain, {"x0", "x1"}, "tau")) == E(chain, {"x1"}, ""));

    const auto p = E(chain, {"x0", "x1", "x2"}, "tau.a");
    CHECK(map_pf(identity_map(chain.size()), chain, p) == p);

    const auto target = two_step();
    const StateMap g{0, 0, 1};
    REQUIRE(is_branching_simulation(g, chain, target).holds);
    CHECK(map_pf(compose(g, f), target, p) == map_pf(g, target, map_pf(f, chain, p)));
}

TEST_CASE("branching semantics maps are natural")
{
    const auto x = support::model("sys_branch/x.aut").lts;
    const auto y = support::model("sys_branch/y.aut").lts;
    const auto f = support::map_file("sys_branch/f.map", x, y);
    for (const bool barred : {false, true}) {
        const auto m = branching_sem_map(f, x, y, 3, barred);
        CHECK(is_natural(m.map));
    }
    CHECK_THROWS_AS((void)branching_sem_map(StateMap{0, 0, 0}, x, y, 2, true), precondition_error);
}

TEST_CASE("strong semantics respects identities and composition")
{
    const auto loops = support::model("sys_union/sys.aut").lts;
    const auto id = strong_sem_map(identity_map(loops.size()), loops, loops, 3);
    CHECK(is_natural(id.map));
    CHECK(same_data(id.map, identity_transformation(id.source.presheaf)));

    const auto x = support::model("sys_fair_rem/x.aut").lts;
    const auto y = support::model("sys_fair_rem/y.aut").lts;
    const auto f = support::map_file("sys_fair_rem/f.map", x, y);
    const StateMap back{0};
    const auto fm = strong_sem_map(f, x, y, 3);
    const auto gm = strong_sem_map(back, y, x, 3);
    const auto both = strong_sem_map(compose(back, f), x, x, 3);
    CHECK(is_natural(fm.map));
    CHECK(is_natural(gm.map));
    for (Elem e = 0; e < fm.source.elements.size(); ++e)
        for (std::size_t i = 0; i < fm.source.elements[e].size(); ++i)
            CHECK(both.map.at(e, i) == gm.map.at(e, fm.map.at(e, i)));
}

TEST_CASE("fair semantics keeps only fair lassos")
{
    const auto rem = support::model("sys_fair_rem/x.aut").fair();
    const State x = *rem.lts.find("x");
    const State xp = *rem.lts.find("x'");
    const FairBounds bounds{3, 2, 2};
    CHECK(bounds.prefix_length() == 6);
    const auto sem = fair_sem(rem, bounds);
    CHECK(validate(*sem.presheaf).valid);

    const auto omega = Point::omega(PeriodicWord{{}, W("a")});
    const auto stage = stage_set(sem, omega);
    const Lasso self{Execution{{}, {x}}, {{L("a"), x}}};
    const Lasso escape{Execution{W("a"), {x, xp}}, {{L("a"), xp}}};
    CHECK_FALSE(stage.contains(SemElement{canonical(self)}));
    CHECK(stage.contains(SemElement{canonical(escape)}));
    for (const auto& el : stage)
        CHECK(is_fair(rem, std::get<Lasso>(el)));

    const Elem top = sem.points->at(omega);
    const Elem a = sem.points->at(Point::finite(W("a")));
    const auto where = sem.find(top, canonical(escape));
    REQUIRE(where);
    CHECK(sem.elements[a][sem.presheaf->res(top, a, *where)] == SemElement{E(rem.lts, {"x", "x'"}, "a")});
}

TEST_CASE("fair semantics map rejects an unfair image")
{
    const auto x = support::model("sys_fair_rem/x.aut").fair();
    const auto y = support::model("sys_fair_rem/y.aut").fair();
    const auto f = support::map_file("sys_fair_rem/f.map", x.lts, y.lts);
    const auto m = fair_sem_map(f, x, y, FairBounds{3, 2, 2});
    CHECK(is_natural(m.map));
    CHECK(is_stagewise_surjective(m.map));
    CHECK_THROWS_AS((void)fair_sem_map(StateMap{0}, y, x, FairBounds{3, 2, 2}), precondition_error);
}

TEST_CASE("observation presheaf over time")
{
    const auto obs = observation_presheaf({L("a")}, 2, true, true);
    CHECK(validate(*obs).valid);
    CHECK(obs->sizes() == std::vector<std::size_t>{1, 3, 5});
    CHECK(obs->element_name(2, 4) == "tau_bar");
    CHECK(obs->element_name(1, obs->res(2, 1, 4)) == "tau_bar");
    CHECK(obs->element_name(0, obs->res(2, 0, 4)) == "eps");
}
