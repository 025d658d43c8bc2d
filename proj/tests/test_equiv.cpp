#include "support.hpp"

#include "bisim/equiv.hpp"
#include "bisim/errors.hpp"

#include <doctest.h>

using namespace bisim;
using support::L;

namespace {

PartitionRelation closed_relation(const Lts& lts, const std::vector<std::string>& files)
{
    PartitionRelation out{lts.size()};
    for (const auto& file : files)
        out = relation_union(
            out, PartitionRelation{lts.size(), parse_relation_pairs(read_text_file(support::corpus(file)), lts)}
                     .equivalence_closure());
    return out.equivalence_closure();
}

std::vector<std::vector<char>> silent_reach(const Lts& lts)
{
    const auto n = lts.size();
    std::vector<std::vector<char>> r(n, std::vector<char>(n, 0));
    for (State s = 0; s < n; ++s)
        r[s][s] = 1;
    for (const auto& t : lts.transitions())
        if (t.label.is_tau())
            r[t.source][t.target] = 1;
    for (State k = 0; k < n; ++k)
        for (State i = 0; i < n; ++i)
            for (State j = 0; j < n; ++j)
                if (r[i][k] && r[k][j])
                    r[i][j] = 1;
    return r;
}

// Pairs are dropped until every remaining pair transfers in both directions.
PartitionRelation bisim_oracle(const Lts& lts, bool branching)
{
    const auto n = lts.size();
    const auto silent = silent_reach(lts);
    std::vector<std::vector<char>> rel(n, std::vector<char>(n, 1));
    const auto answers = [&](State x, State y, const Transition& t) {
        if (branching && t.label.is_tau() && rel[t.target][y])
            return true;
        for (State mid = 0; mid < n; ++mid) {
            if (!(branching ? silent[y][mid] : mid == y) || !rel[x][mid])
                continue;
            for (const auto& u : lts.transitions())
                if (u.source == mid && u.label == t.label && rel[t.target][u.target])
                    return true;
        }
        return false;
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (State x = 0; x < n; ++x) {
            for (State y = 0; y < n; ++y) {
                if (!rel[x][y])
                    continue;
                bool ok = true;
                for (const auto& t : lts.transitions())
                    if (t.source == x && !answers(x, y, t))
                        ok = false;
                if (!ok) {
                    rel[x][y] = rel[y][x] = 0;
                    changed = true;
                }
            }
        }
    }
    PartitionRelation out{n};
    for (State x = 0; x < n; ++x)
        for (State y = 0; y < n; ++y)
            if (rel[x][y])
                out.add(x, y);
    return out;
}

FairLts fair_model(const std::string& file)
{
    return support::model(file).fair();
}

} // namespace

TEST_CASE("relation kinds and closures")
{
    PartitionRelation r{4, {{0, 1}, {1, 0}}};
    CHECK(r.kind() == PartitionRelation::Kind::symmetric);
    CHECK(r.contains(1, 0));
    CHECK_FALSE(r.is_reflexive());
    const auto e = r.equivalence_closure();
    CHECK(e.kind() == PartitionRelation::Kind::equivalence);
    CHECK(e.blocks() == std::vector<std::vector<State>>{{0, 1}, {2}, {3}});
    CHECK(e.block_map() == StateMap{0, 0, 1, 2});

    PartitionRelation one_way{3};
    one_way.add(0, 1);
    CHECK(one_way.kind() == PartitionRelation::Kind::raw);
    PartitionRelation next{3};
    next.add(1, 2);
    const auto c = relation_compose(one_way, next);
    CHECK(c.pairs() == std::vector<std::pair<State, State>>{{0, 2}});
    CHECK(relation_compose(next, one_way).count() == 0);
    CHECK(relation_union(one_way, next).count() == 2);
    CHECK(PartitionRelation::kernel(StateMap{0, 1, 0}) == PartitionRelation{3, {{0, 2}, {2, 0}}}.reflexive_closure());
}

TEST_CASE("simulation and strong bisimulation functions")
{
    const auto x = support::model("sys_fair_rem/x.aut").lts;
    const auto y = support::model("sys_fair_rem/y.aut").lts;
    const auto f = support::map_file("sys_fair_rem/f.map", x, y);
    CHECK(check_simulation(f, x, y).holds);
    const auto strong = check_strong_bisim_fn(f, x, y);
    CHECK(strong.holds);
    CHECK(strong.certified_bounds.empty());

    const auto chain = support::chain();
    const auto collapse = check_simulation(StateMap(chain.size(), 0), chain, chain);
    CHECK_FALSE(collapse.holds);
    REQUIRE(collapse.witness);
    CHECK(std::holds_alternative<UnpreservedStep>(*collapse.witness));

    const Lts bigger{{"y", "lonely"}, {Transition{0, L("a"), 0}}, {L("a")}};
    const auto uncovered = check_strong_bisim_fn(f, x, bigger);
    CHECK_FALSE(uncovered.holds);
    REQUIRE(uncovered.witness);
    CHECK(std::get<UncoveredState>(*uncovered.witness).state == 1);

    const Lts extra{{"y"}, {Transition{0, L("a"), 0}, Transition{0, L("b"), 0}}, {L("a"), L("b")}};
    const auto unreflected = check_strong_bisim_fn(f, x, extra);
    CHECK_FALSE(unreflected.holds);
    REQUIRE(unreflected.witness);
    CHECK(std::get<UnreflectedStep>(*unreflected.witness).label == L("b"));

    CHECK_THROWS_AS((void)check_strong_bisim_fn(StateMap(chain.size(), 0), chain, chain), precondition_error);
}

TEST_CASE("fair functions on the removal example")
{
    const auto x = fair_model("sys_fair_rem/x.aut");
    const auto y = fair_model("sys_fair_rem/y.aut");
    const auto f = support::map_file("sys_fair_rem/f.map", x.lts, y.lts);
    const CheckBounds bounds;

    CHECK(check_fair_sim(f, x, y, bounds).holds);
    CHECK(check_hildebrandt_open(f, x, y, bounds).holds);

    for (const auto mode : {FairMode::exact, FairMode::bounded}) {
        CAPTURE(static_cast<int>(mode));
        const auto v = check_fair_bisim_fn(f, x, y, mode, bounds);
        CHECK_FALSE(v.holds);
        CHECK(v.certified_bounds.empty() == (mode == FairMode::exact));
        REQUIRE(v.witness);
        const auto& pair = std::get<LassoPair>(*v.witness);
        CHECK_FALSE(is_fair(x, pair.left));
        CHECK(is_fair(y, pair.right));
        CHECK(canonical(apply_map(f, pair.left)) == canonical(pair.right));
        CHECK(v.witness_text == "x (-a-> x)^w | y (-a-> y)^w");

        CHECK_FALSE(check_fair_reflection(f, x, y, mode, bounds).holds);
    }
}

TEST_CASE("branching functions on the union example")
{
    const auto x = support::model("sys_branch/x.aut").lts;
    const auto y = support::model("sys_branch/y.aut").lts;
    const auto f = support::map_file("sys_branch/f.map", x, y);
    CHECK(check_branching_sim(f, x, y).holds);
    const auto v = check_branching_bisim_fn(f, x, y);
    CHECK_FALSE(v.holds);
    REQUIRE(v.witness);
    const auto& step = std::get<UnreflectedStep>(*v.witness);
    CHECK(step.label.is_tau());
    CHECK(y.name(step.from) == "y1");
    CHECK(y.name(step.to) == "y3");
}

TEST_CASE("stutter triple")
{
    const Lts source{{"x1", "x2", "x3"}, {Transition{0, Label::tau(), 1}, Transition{1, Label::tau(), 2}}, {}};
    const Lts target{{"u", "v"}, {Transition{0, Label::tau(), 1}, Transition{1, Label::tau(), 0}}, {}};
    const auto v = check_branching_sim(StateMap{0, 1, 0}, source, target);
    CHECK_FALSE(v.holds);
    REQUIRE(v.witness);
    const auto& triple = std::get<StutterTriple>(*v.witness);
    CHECK(triple.first == 0);
    CHECK(triple.middle == 1);
    CHECK(triple.last == 2);
    CHECK(check_branching_sim(StateMap{0, 0, 0}, source, target).holds);
}

TEST_CASE("branching bisimilarity of the chain")
{
    const auto chain = support::chain();
    const auto r = branching_bisimilarity(chain);
    CHECK(r.contains(*chain.find("x0"), *chain.find("x1")));
    CHECK_FALSE(r.contains(*chain.find("x1"), *chain.find("x2")));
    CHECK(r.blocks().size() == 2);
    CHECK(r == bisim_oracle(chain, true));
    CHECK(r == brute_force_largest(chain, BruteKind::branching));
    CHECK(strong_bisimilarity(chain) == PartitionRelation::identity(chain.size()));

    const auto q = branching_quotient(chain);
    CHECK(q.quotient.size() == 2);
    CHECK(q.quotient.transitions().size() == 1);
    CHECK(q.quotient.name(q.map[0]) == "[x0,x1]");
    CHECK(check_branching_bisim_fn(q.map, chain, q.quotient).holds);
}

TEST_CASE("bisimilarity agrees with the pair-removal oracle and brute force")
{
    support::RandomSystems gen{7};
    for (int round = 0; round < 60; ++round) {
        const bool silent = round % 2 == 0;
        const auto lts = gen.lts(5, silent ? std::vector<std::string>{"a", "tau"} : std::vector<std::string>{"a", "b"},
                                 0.25);
        CAPTURE(serialize_aut(lts));
        const auto strong = strong_bisimilarity(lts);
        CHECK(strong == bisim_oracle(lts, false));
        CHECK(strong == brute_force_largest(lts, BruteKind::strong));
        const auto branching = branching_bisimilarity(lts);
        CHECK(branching == bisim_oracle(lts, true));
        CHECK(branching == brute_force_largest(lts, BruteKind::branching));
    }
}

TEST_CASE("quotients round trip")
{
    support::RandomSystems gen{11};
    for (int round = 0; round < 40; ++round) {
        const auto lts = gen.lts(6, {"a", "b", "tau"}, 0.2);
        CAPTURE(serialize_aut(lts));
        const auto bq = branching_quotient(lts);
        CHECK(check_branching_bisim_fn(bq.map, lts, bq.quotient).holds);
        CHECK(branching_bisimilarity(bq.quotient) == PartitionRelation::identity(bq.quotient.size()));

        const auto sq = strong_quotient(lts);
        CHECK(check_strong_bisim_fn(sq.map, lts, sq.quotient).holds);
        CHECK(strong_bisimilarity(sq.quotient) == PartitionRelation::identity(sq.quotient.size()));
    }
}

TEST_CASE("extending a reduction by the target quotient")
{
    const auto chain = support::chain();
    const auto g = extend_reduction(identity_map(chain.size()), chain);
    CHECK(g == branching_quotient(chain).map);
}

TEST_CASE("fair bisimulations of the union system")
{
    const auto system = fair_model("sys_union/sys.aut");
    const ForallFairOptions options;
    const auto r1 = closed_relation(system.lts, {"sys_union/R1.rel"});
    const auto r2 = closed_relation(system.lts, {"sys_union/R2.rel"});
    CHECK(check_forall_fair_bisim(r1, system, options).holds);
    CHECK(check_forall_fair_bisim(r2, system, options).holds);

    const auto both = closed_relation(system.lts, {"sys_union/R1.rel", "sys_union/R2.rel"});
    const auto v = check_forall_fair_bisim(both, system, options);
    CHECK_FALSE(v.holds);
    CHECK(v.certified_bounds.empty());
    REQUIRE(v.witness);
    const auto& pair = std::get<LassoPair>(*v.witness);
    CHECK(is_lasso_of(system.lts, pair.left));
    CHECK(is_lasso_of(system.lts, pair.right));
    CHECK(is_fair(system, pair.left));
    CHECK_FALSE(is_fair(system, pair.right));
    for (std::size_t i = 0; i < 12; ++i)
        CHECK(both.contains(pair.left.at(i), pair.right.at(i)));

    ForallFairOptions bounded;
    bounded.mode = FairMode::bounded;
    CHECK_FALSE(check_forall_fair_bisim(both, system, bounded).holds);
    CHECK(check_forall_fair_bisim(r2, system, bounded).holds);

    const auto q = forall_fair_quotient(r2, system);
    CHECK(q.quotient.lts.size() == 2);
    CHECK(kind_name(q.quotient.fairness) == kind_name(FairnessSpec{ImageFairness{}}));
    const auto back = check_fair_bisim_fn(q.map, system, q.quotient, FairMode::exact, CheckBounds{});
    CHECK(back.holds);
    CHECK(back.certified_bounds.empty());
    CHECK(PartitionRelation::kernel(q.map) == r2);
}

TEST_CASE("fair bisimulations of the composition system")
{
    const auto system = fair_model("sys_comp/sys.aut");
    const ForallFairOptions options;
    const auto t = closed_relation(system.lts, {"sys_comp/T.rel"});
    const auto tp = closed_relation(system.lts, {"sys_comp/Tprime.rel"});
    CHECK(check_forall_fair_bisim(t, system, options).holds);
    CHECK(check_forall_fair_bisim(tp, system, options).holds);

    const auto composed = relation_compose(tp, t);
    const auto v = check_forall_fair_bisim(composed, system, options);
    CHECK_FALSE(v.holds);
    REQUIRE(v.witness);
    const auto& missing = std::get<MissingPair>(*v.witness);
    CHECK(system.lts.name(missing.left) == "x1");
    CHECK(system.lts.name(missing.right) == "y1");
    CHECK(missing.property == "transitivity");
}

TEST_CASE("symmetric-only mode skips the equivalence requirement")
{
    const auto system = fair_model("sys_union/sys.aut");
    const auto lts = system.lts;
    const PartitionRelation raw{lts.size(), parse_relation_pairs(read_text_file(support::corpus("sys_union/R2.rel")), lts)};
    const auto strict = check_forall_fair_bisim(raw, system, ForallFairOptions{});
    CHECK_FALSE(strict.holds);
    CHECK(std::holds_alternative<MissingPair>(*strict.witness));
    ForallFairOptions relaxed;
    relaxed.symmetric_only = true;
    CHECK(check_forall_fair_bisim(raw, system, relaxed).holds);
}

TEST_CASE("presheaf and concrete checks agree on the corpus pairs")
{
    const CheckBounds bounds;
    const auto rx = fair_model("sys_fair_rem/x.aut");
    const auto ry = fair_model("sys_fair_rem/y.aut");
    const auto rf = support::map_file("sys_fair_rem/f.map", rx.lts, ry.lts);
    const auto strong = check_bisim_map(rf, FairLts{rx.lts, Streett{}}, FairLts{ry.lts, Streett{}},
                                        SemanticMode::strong, bounds);
    CHECK(strong.agree);
    CHECK(strong.presheaf.holds);
    const auto fair = check_bisim_map(rf, rx, ry, SemanticMode::fair, bounds);
    CHECK(fair.agree);
    CHECK_FALSE(fair.presheaf.holds);
    CHECK_FALSE(fair.presheaf.certified_bounds.empty());
    CHECK_THROWS_AS((void)check_bisim_map(rf, rx, ry, SemanticMode::strong, bounds), precondition_error);

    const auto bx = support::model("sys_branch/x.aut");
    const auto by = support::model("sys_branch/y.aut");
    const FairLts fx{bx.lts, Streett{}};
    const FairLts fy{by.lts, Streett{}};
    const auto bf = support::map_file("sys_branch/f.map", bx.lts, by.lts);
    const auto barred = check_bisim_map(bf, fx, fy, SemanticMode::branching, bounds);
    CHECK(barred.agree);
    CHECK_FALSE(barred.presheaf.holds);
    CHECK(barred.presheaf.witness_text.find("tau_bar") != std::string::npos);
    const auto plain = check_bisim_map(bf, fx, fy, SemanticMode::branching_failed, bounds);
    CHECK(plain.presheaf.holds);
    CHECK_FALSE(plain.agree);

    CHECK_THROWS_AS((void)check_bisim_map(bf, fx, fy, SemanticMode::strong, bounds), precondition_error);
}
