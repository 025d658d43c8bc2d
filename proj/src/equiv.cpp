#include "bisim/equiv.hpp"

#include "bisim/errors.hpp"
#include "bisim/fair_search.hpp"
#include "bisim/semantics.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace bisim {

PartitionRelation::PartitionRelation(std::size_t size) : size_{size}, cells_(size * size, 0) {}

PartitionRelation::PartitionRelation(std::size_t size, const std::vector<std::pair<State, State>>& pairs)
    : PartitionRelation(size)
{
    for (const auto& [a, b] : pairs)
        add(a, b);
}

PartitionRelation PartitionRelation::identity(std::size_t size)
{
    PartitionRelation r{size};
    for (State s = 0; s < size; ++s)
        r.add(s, s);
    return r;
}

PartitionRelation PartitionRelation::universal(std::size_t size)
{
    PartitionRelation r{size};
    std::fill(r.cells_.begin(), r.cells_.end(), 1);
    return r;
}

PartitionRelation PartitionRelation::kernel(const StateMap& f)
{
    PartitionRelation r{f.size()};
    for (State a = 0; a < f.size(); ++a)
        for (State b = 0; b < f.size(); ++b)
            if (f[a] == f[b])
                r.add(a, b);
    return r;
}

void PartitionRelation::add(State a, State b)
{
    if (a >= size_ || b >= size_)
        throw precondition_error("relation pair outside the state set");
    cells_[a * size_ + b] = 1;
}

void PartitionRelation::remove(State a, State b)
{
    cells_.at(a * size_ + b) = 0;
}

std::vector<std::pair<State, State>> PartitionRelation::pairs() const
{
    std::vector<std::pair<State, State>> out;
    for (State a = 0; a < size_; ++a)
        for (State b = 0; b < size_; ++b)
            if (contains(a, b))
                out.emplace_back(a, b);
    return out;
}

std::size_t PartitionRelation::count() const
{
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

bool PartitionRelation::is_reflexive() const
{
    for (State a = 0; a < size_; ++a)
        if (!contains(a, a))
            return false;
    return true;
}

bool PartitionRelation::is_symmetric() const
{
    for (State a = 0; a < size_; ++a)
        for (State b = 0; b < size_; ++b)
            if (contains(a, b) != contains(b, a))
                return false;
    return true;
}

bool PartitionRelation::is_transitive() const
{
    for (State a = 0; a < size_; ++a)
        for (State b = 0; b < size_; ++b)
            if (contains(a, b))
                for (State c = 0; c < size_; ++c)
                    if (contains(b, c) && !contains(a, c))
                        return false;
    return true;
}

PartitionRelation::Kind PartitionRelation::kind() const
{
    if (is_equivalence())
        return Kind::equivalence;
    if (is_symmetric())
        return Kind::symmetric;
    return Kind::raw;
}

PartitionRelation PartitionRelation::reflexive_closure() const
{
    auto r = *this;
    for (State a = 0; a < size_; ++a)
        r.add(a, a);
    return r;
}

PartitionRelation PartitionRelation::symmetric_closure() const
{
    auto r = *this;
    for (const auto& [a, b] : pairs())
        r.add(b, a);
    return r;
}

PartitionRelation PartitionRelation::equivalence_closure() const
{
    auto r = reflexive_closure().symmetric_closure();
    for (State k = 0; k < size_; ++k)
        for (State a = 0; a < size_; ++a)
            if (r.contains(a, k))
                for (State b = 0; b < size_; ++b)
                    if (r.contains(k, b))
                        r.add(a, b);
    return r;
}

std::vector<std::vector<State>> PartitionRelation::blocks() const
{
    if (!is_equivalence())
        throw precondition_error("blocks of a relation that is not an equivalence");
    std::vector<std::vector<State>> out;
    std::vector<char> placed(size_, 0);
    for (State a = 0; a < size_; ++a) {
        if (placed[a])
            continue;
        auto& block = out.emplace_back();
        for (State b = a; b < size_; ++b) {
            if (contains(a, b)) {
                block.push_back(b);
                placed[b] = 1;
            }
        }
    }
    return out;
}

StateMap PartitionRelation::block_map() const
{
    StateMap f(size_, 0);
    const auto list = blocks();
    for (State i = 0; i < list.size(); ++i)
        for (State s : list[i])
            f[s] = i;
    return f;
}

std::vector<std::vector<char>> PartitionRelation::matrix() const
{
    std::vector<std::vector<char>> m(size_, std::vector<char>(size_, 0));
    for (State a = 0; a < size_; ++a)
        for (State b = 0; b < size_; ++b)
            m[a][b] = contains(a, b) ? 1 : 0;
    return m;
}

PartitionRelation relation_union(const PartitionRelation& a, const PartitionRelation& b)
{
    if (a.size() != b.size())
        throw precondition_error("union of relations on different state sets");
    auto r = a;
    for (const auto& [x, y] : b.pairs())
        r.add(x, y);
    return r;
}

PartitionRelation relation_compose(const PartitionRelation& first, const PartitionRelation& second)
{
    if (first.size() != second.size())
        throw precondition_error("composition of relations on different state sets");
    PartitionRelation r{first.size()};
    for (const auto& [x, y] : first.pairs())
        for (State z = 0; z < second.size(); ++z)
            if (second.contains(y, z))
                r.add(x, z);
    return r;
}

std::string to_string(const PartitionRelation& relation, const Lts& lts)
{
    std::string out;
    for (const auto& [a, b] : relation.pairs())
        out += lts.name(a) + " ~ " + lts.name(b) + "\n";
    return out;
}

std::string to_string(PartitionRelation::Kind kind)
{
    switch (kind) {
    case PartitionRelation::Kind::raw: return "raw";
    case PartitionRelation::Kind::symmetric: return "symmetric";
    case PartitionRelation::Kind::equivalence: return "equivalence";
    }
    return "raw";
}

std::string witness_kind(const Witness& witness)
{
    static const char* const names[] = {"unpreserved_step", "unreflected_step", "uncovered_state",
                                        "stutter_triple",   "transfer_failure", "lasso_pair",
                                        "unlifted_lasso",   "missing_pair",     "square"};
    return names[witness.index()];
}

std::string describe(const Witness& witness, const Lts& source, const Lts& target)
{
    struct Render {
        const Lts& source;
        const Lts& target;

        std::string operator()(const UnpreservedStep& w) const
        {
            return source.name(w.step.source) + " -" + w.step.label.name() + "-> " + source.name(w.step.target) +
                   " is not preserved";
        }
        std::string operator()(const UnreflectedStep& w) const
        {
            return target.name(w.from) + " -" + w.label.name() + "-> " + target.name(w.to) +
                   " is not reflected at " + source.name(w.source);
        }
        std::string operator()(const UncoveredState& w) const
        {
            return target.name(w.state) + " is not in the image";
        }
        std::string operator()(const StutterTriple& w) const
        {
            return source.name(w.first) + " =>eps " + source.name(w.middle) + " =>eps " + source.name(w.last) +
                   " with the middle state mapped elsewhere";
        }
        std::string operator()(const TransferFailure& w) const
        {
            return source.name(w.left) + " ~ " + source.name(w.right) + ": " + source.name(w.step.source) + " -" +
                   w.step.label.name() + "-> " + source.name(w.step.target) + " has no match";
        }
        std::string operator()(const LassoPair& w) const
        {
            return to_string(w.left, source) + " | " + to_string(w.right, target);
        }
        std::string operator()(const UnliftedLasso& w) const
        {
            return to_string(w.image, target) + " has no fair lift from " + source.name(w.start);
        }
        std::string operator()(const MissingPair& w) const
        {
            return "(" + source.name(w.left) + ", " + source.name(w.right) + ") is missing for " + w.property;
        }
        std::string operator()(const SquareWitness& w) const
        {
            return w.family + " square at " + w.stage + ": " + w.description;
        }
    };
    return std::visit(Render{source, target}, witness);
}

namespace {

Verdict holds(std::string check)
{
    Verdict v;
    v.check = std::move(check);
    return v;
}

Verdict failed(std::string check, Witness witness, const Lts& source, const Lts& target)
{
    Verdict v;
    v.check = std::move(check);
    v.holds = false;
    v.witness_text = describe(witness, source, target);
    v.witness = std::move(witness);
    return v;
}

Verdict renamed(Verdict v, std::string check, std::string note)
{
    v.notes.insert(v.notes.begin(), std::move(note));
    v.check = std::move(check);
    return v;
}

void require_simulation(const StateMap& f, const Lts& source, const Lts& target)
{
    const auto check = is_simulation(f, source, target);
    if (!check.holds)
        throw precondition_error("map is not a simulation: " + describe(UnpreservedStep{*check.violation}, source,
                                                                       target));
}

bool has_fairness(const FairnessSpec& spec)
{
    if (const auto* s = std::get_if<Streett>(&spec))
        return !s->pairs.empty();
    return true;
}

std::optional<Verdict> surjectivity(const std::string& check, const StateMap& f, const Lts& source,
                                    const Lts& target)
{
    std::vector<char> hit(target.size(), 0);
    for (State s : f)
        hit[s] = 1;
    for (State y = 0; y < target.size(); ++y)
        if (!hit[y])
            return failed(check, UncoveredState{y}, source, target);
    return std::nullopt;
}

std::optional<Verdict> strong_reflection(const std::string& check, const StateMap& f, const Lts& source,
                                         const Lts& target)
{
    for (State x = 0; x < source.size(); ++x) {
        for (const auto& [label, y] : target.out(f[x])) {
            const auto& steps = source.out(x);
            const bool matched = std::any_of(steps.begin(), steps.end(), [&](const auto& step) {
                return step.first == label && f[step.second] == y;
            });
            if (!matched)
                return failed(check, UnreflectedStep{x, f[x], label, y}, source, target);
        }
    }
    return std::nullopt;
}

std::map<std::string, std::size_t> lasso_bounds(const CheckBounds& bounds)
{
    return {{"stem_bound", bounds.stem_bound}, {"cycle_bound", bounds.cycle_bound}};
}

// Bounded fair simulation over source lassos.
std::optional<Verdict> bounded_fair_sim(const std::string& check, const StateMap& f, const FairLts& source,
                                        const FairLts& target, const CheckBounds& bounds)
{
    for (const auto& tagged : fair_lassos(source, bounds.stem_bound, bounds.cycle_bound)) {
        if (!tagged.fair)
            continue;
        auto image = canonical(apply_map(f, tagged.lasso));
        if (!is_fair(target, image))
            return failed(check, LassoPair{tagged.lasso, std::move(image)}, source.lts, target.lts);
    }
    return std::nullopt;
}

} // namespace

Verdict check_simulation(const StateMap& f, const Lts& source, const Lts& target)
{
    const auto check = is_simulation(f, source, target);
    if (!check.holds)
        return failed("simulation", UnpreservedStep{*check.violation}, source, target);
    return holds("simulation");
}

Verdict check_strong_bisim_fn(const StateMap& f, const Lts& source, const Lts& target)
{
    const std::string name = "strong-bisim-fn";
    require_simulation(f, source, target);
    if (auto v = surjectivity(name, f, source, target))
        return *v;
    if (auto v = strong_reflection(name, f, source, target))
        return *v;
    return holds(name);
}

Verdict check_fair_sim(const StateMap& f, const FairLts& source, const FairLts& target, const CheckBounds& bounds)
{
    const std::string name = "fair-sim";
    const auto step = is_simulation(f, source.lts, target.lts);
    if (!step.holds)
        return failed(name, UnpreservedStep{*step.violation}, source.lts, target.lts);
    auto v = bounded_fair_sim(name, f, source, target, bounds).value_or(holds(name));
    v.certified_bounds = lasso_bounds(bounds);
    return v;
}

namespace {

bool same_fair_system(const FairLts& a, const FairLts& b);

bool same_fairness(const FairnessSpec& a, const FairnessSpec& b)
{
    if (a.index() != b.index())
        return false;
    if (const auto* sa = std::get_if<Streett>(&a)) {
        const auto& sb = std::get<Streett>(b);
        return std::equal(sa->pairs.begin(), sa->pairs.end(), sb.pairs.begin(), sb.pairs.end(),
                          [](const StreettPair& x, const StreettPair& y) {
                              return x.trigger == y.trigger && x.response == y.response;
                          });
    }
    if (const auto* aa = std::get_if<AlwaysAfter>(&a)) {
        const auto& ab = std::get<AlwaysAfter>(b);
        return aa->offset == ab.offset && aa->allowed == ab.allowed && aa->start == ab.start;
    }
    const auto& ia = std::get<ImageFairness>(a);
    const auto& ib = std::get<ImageFairness>(b);
    return ia.map == ib.map && same_fair_system(*ia.source, *ib.source);
}

bool same_fair_system(const FairLts& a, const FairLts& b)
{
    return a.lts.size() == b.lts.size() && a.lts.transitions() == b.lts.transitions() &&
           same_fairness(a.fairness, b.fairness);
}

// Target fairness defined as the image of the source under f itself.
bool fairness_is_image_of(const FairLts& target, const FairLts& source, const StateMap& f)
{
    const auto* img = std::get_if<ImageFairness>(&target.fairness);
    return img && img->map == f && same_fair_system(*img->source, source);
}

// Exact fair simulation: a fair source run with an unfair image. Falls back
// to the bounded check when the target fairness is some other image.
Verdict exact_fair_sim(const StateMap& f, const FairLts& source, const FairLts& target, const CheckBounds& bounds)
{
    const std::string name = "fair-sim";
    const auto step = is_simulation(f, source.lts, target.lts);
    if (!step.holds)
        return failed(name, UnpreservedStep{*step.violation}, source.lts, target.lts);
    if (fairness_is_image_of(target, source, f)) {
        auto v = holds(name);
        v.notes.emplace_back("target fairness is the image of the source under the map");
        return v;
    }
    try {
        const auto graph = search::with_image_track(search::system_graph(source.lts), 0, f);
        const auto found = search::find_lasso(graph, {{0, &source, search::Polarity::fair},
                                                      {1, &target, search::Polarity::unfair}});
        if (found)
            return failed(name, LassoPair{(*found)[0], (*found)[1]}, source.lts, target.lts);
        return holds(name);
    } catch (const unsupported_error&) {
        auto v = check_fair_sim(f, source, target, bounds);
        v.notes.emplace_back("target fairness is an image; checked over lassos within the bounds");
        return v;
    }
}

} // namespace

Verdict check_fair_reflection(const StateMap& f, const FairLts& source, const FairLts& target, FairMode mode,
                              const CheckBounds& bounds)
{
    const std::string name = "fair-reflection";
    require_simulation(f, source.lts, target.lts);
    std::vector<std::string> notes;
    if (mode == FairMode::exact) {
        try {
            const auto graph = search::with_image_track(search::system_graph(source.lts), 0, f);
            const auto found = search::find_lasso(graph, {{0, &source, search::Polarity::unfair},
                                                          {1, &target, search::Polarity::fair}});
            if (found)
                return failed(name, LassoPair{(*found)[0], (*found)[1]}, source.lts, target.lts);
            return holds(name);
        } catch (const unsupported_error&) {
            notes.emplace_back("source fairness is an image; exact mode fell back to bounded lassos");
        }
    }
    Verdict v = holds(name);
    for (const auto& lasso : lassos_up_to(source.lts, bounds.stem_bound, bounds.cycle_bound)) {
        if (is_fair(source, lasso))
            continue;
        auto image = canonical(apply_map(f, lasso));
        if (is_fair(target, image)) {
            v = failed(name, LassoPair{lasso, std::move(image)}, source.lts, target.lts);
            break;
        }
    }
    v.certified_bounds = lasso_bounds(bounds);
    v.notes = std::move(notes);
    return v;
}

Verdict check_fair_bisim_fn(const StateMap& f, const FairLts& source, const FairLts& target, FairMode mode,
                            const CheckBounds& bounds)
{
    const std::string name = "fair-bisim-fn";
    require_total(f, source.lts, target.lts);
    auto sim = mode == FairMode::exact ? exact_fair_sim(f, source, target, bounds)
                                       : check_fair_sim(f, source, target, bounds);
    if (!sim.holds)
        return renamed(std::move(sim), name, "fails as a fair simulation");
    if (auto v = surjectivity(name, f, source.lts, target.lts))
        return renamed(std::move(*v), name, "not surjective");
    if (auto v = strong_reflection(name, f, source.lts, target.lts))
        return renamed(std::move(*v), name, "a step is not reflected");
    auto reflection = check_fair_reflection(f, source, target, mode, bounds);
    if (!reflection.holds)
        return renamed(std::move(reflection), name, "an unfair run has a fair image");
    Verdict v = holds(name);
    v.certified_bounds = sim.certified_bounds;
    v.certified_bounds.insert(reflection.certified_bounds.begin(), reflection.certified_bounds.end());
    v.notes = sim.notes;
    v.notes.insert(v.notes.end(), reflection.notes.begin(), reflection.notes.end());
    return v;
}

Verdict check_hildebrandt_open(const StateMap& f, const FairLts& source, const FairLts& target,
                               const CheckBounds& bounds)
{
    const std::string name = "hildebrandt-open";
    require_simulation(f, source.lts, target.lts);
    if (auto v = strong_reflection(name, f, source.lts, target.lts))
        return *v;
    Verdict v = holds(name);
    v.certified_bounds = lasso_bounds(bounds);
    const auto runs = fair_lassos(target, bounds.stem_bound, bounds.cycle_bound);
    for (State x = 0; x < source.lts.size(); ++x) {
        for (const auto& tagged : runs) {
            if (!tagged.fair || tagged.lasso.stem.start() != f[x])
                continue;
            const auto graph = search::lift(search::lasso_graph(tagged.lasso), 0, source.lts, f, x);
            if (!search::find_lasso(graph, {{1, &source, search::Polarity::fair}})) {
                auto out = failed(name, UnliftedLasso{x, tagged.lasso}, source.lts, target.lts);
                out.certified_bounds = v.certified_bounds;
                return out;
            }
        }
    }
    return v;
}

namespace {

std::optional<Verdict> relation_shape(const std::string& name, const PartitionRelation& r, const Lts& lts,
                                      bool symmetric_only)
{
    if (!symmetric_only) {
        for (State a = 0; a < r.size(); ++a)
            if (!r.contains(a, a))
                return failed(name, MissingPair{a, a, "reflexivity"}, lts, lts);
        for (const auto& [a, b] : r.pairs())
            for (State c = 0; c < r.size(); ++c)
                if (r.contains(b, c) && !r.contains(a, c))
                    return failed(name, MissingPair{a, c, "transitivity"}, lts, lts);
    }
    for (const auto& [a, b] : r.pairs())
        if (!r.contains(b, a))
            return failed(name, MissingPair{b, a, "symmetry"}, lts, lts);
    return std::nullopt;
}

std::optional<Verdict> strong_transfer(const std::string& name, const PartitionRelation& r, const Lts& lts)
{
    for (const auto& [x, y] : r.pairs()) {
        for (const auto& [label, x2] : lts.out(x)) {
            const auto& steps = lts.out(y);
            const bool matched = std::any_of(steps.begin(), steps.end(), [&](const auto& step) {
                return step.first == label && r.contains(x2, step.second);
            });
            if (!matched)
                return failed(name, TransferFailure{x, y, Transition{x, label, x2}}, lts, lts);
        }
    }
    return std::nullopt;
}

struct PairSystem {
    Lts lts;
    StateMap left;
    StateMap right;
};

PairSystem pair_system(const Lts& lts, const PartitionRelation& r)
{
    PairSystem out;
    std::vector<std::vector<State>> id(lts.size(), std::vector<State>(lts.size(), 0));
    std::vector<std::string> names;
    for (const auto& [x, y] : r.pairs()) {
        id[x][y] = static_cast<State>(names.size());
        names.push_back(lts.name(x) + "|" + lts.name(y));
        out.left.push_back(x);
        out.right.push_back(y);
    }
    std::vector<Transition> steps;
    for (const auto& [x, y] : r.pairs())
        for (const auto& [label, x2] : lts.out(x))
            for (State y2 : lts.successors(y, label))
                if (r.contains(x2, y2))
                    steps.push_back(Transition{id[x][y], label, id[x2][y2]});
    out.lts = Lts{std::move(names), std::move(steps)};
    return out;
}

} // namespace

Verdict check_forall_fair_bisim(const PartitionRelation& relation, const FairLts& system,
                                const ForallFairOptions& options)
{
    const std::string name = "forall-fair-bisim";
    const auto& lts = system.lts;
    if (relation.size() != lts.size())
        throw precondition_error("relation and system have different state sets");
    std::vector<std::string> notes;
    if (options.symmetric_only)
        notes.emplace_back("symmetric-only mode: the relation need not be an equivalence (nonstandard)");
    auto with_notes = [&](Verdict v) {
        v.notes.insert(v.notes.begin(), notes.begin(), notes.end());
        return v;
    };
    if (auto v = relation_shape(name, relation, lts, options.symmetric_only))
        return with_notes(std::move(*v));
    if (auto v = strong_transfer(name, relation, lts))
        return with_notes(std::move(*v));

    if (options.mode == FairMode::exact) {
        try {
            const auto graph = search::synchronous_product(lts, relation.matrix());
            const auto found = search::find_lasso(graph, {{0, &system, search::Polarity::fair},
                                                          {1, &system, search::Polarity::unfair}});
            if (found)
                return with_notes(failed(name, LassoPair{(*found)[0], (*found)[1]}, lts, lts));
            return with_notes(holds(name));
        } catch (const unsupported_error&) {
            notes.emplace_back("fairness is an image; exact mode fell back to bounded lassos");
        }
    }
    const auto pairs = pair_system(lts, relation);
    Verdict v = holds(name);
    for (const auto& lasso : lassos_up_to(pairs.lts, options.bounds.stem_bound, options.bounds.cycle_bound)) {
        auto left = canonical(apply_map(pairs.left, lasso));
        auto right = canonical(apply_map(pairs.right, lasso));
        if (is_fair(system, left) && !is_fair(system, right)) {
            v = failed(name, LassoPair{std::move(left), std::move(right)}, lts, lts);
            break;
        }
    }
    v.certified_bounds = lasso_bounds(options.bounds);
    return with_notes(std::move(v));
}

Quotient quotient_by(const Lts& lts, const PartitionRelation& relation, bool drop_inert)
{
    const auto blocks = relation.blocks();
    const auto f = relation.block_map();
    std::vector<std::string> names;
    for (const auto& block : blocks) {
        if (block.size() == 1) {
            names.push_back(lts.name(block.front()));
            continue;
        }
        std::string name = "[";
        for (std::size_t i = 0; i < block.size(); ++i)
            name += (i ? "," : "") + lts.name(block[i]);
        names.push_back(name + "]");
    }
    std::vector<Transition> steps;
    for (const auto& t : lts.transitions()) {
        if (drop_inert && t.label.is_tau() && f[t.source] == f[t.target])
            continue;
        steps.push_back(Transition{f[t.source], t.label, f[t.target]});
    }
    return Quotient{Lts{std::move(names), std::move(steps), lts.alphabet()}, f};
}

FairQuotient forall_fair_quotient(const PartitionRelation& relation, const FairLts& system)
{
    const auto verdict = check_forall_fair_bisim(relation, system, ForallFairOptions{});
    if (!verdict.holds)
        throw precondition_error("relation is not a forall-fair bisimulation: " + verdict.witness_text);
    auto q = quotient_by(system.lts, relation, false);
    auto source = std::make_shared<const FairLts>(system);
    auto fair = make_fair(std::move(q.quotient), ImageFairness{source, q.map});
    return FairQuotient{std::move(fair), std::move(q.map)};
}

Verdict check_branching_sim(const StateMap& f, const Lts& source, const Lts& target)
{
    const std::string name = "branching-sim";
    const auto check = is_branching_simulation(f, source, target);
    if (check.step)
        return failed(name, UnpreservedStep{*check.step}, source, target);
    if (check.stutter)
        return failed(name, StutterTriple{(*check.stutter)[0], (*check.stutter)[1], (*check.stutter)[2]}, source,
                      target);
    return holds(name);
}

Verdict check_branching_bisim_fn(const StateMap& f, const Lts& source, const Lts& target)
{
    const std::string name = "branching-bisim-fn";
    auto sim = check_branching_sim(f, source, target);
    if (!sim.holds)
        return renamed(std::move(sim), name, "fails as a branching simulation");
    if (auto v = surjectivity(name, f, source, target))
        return *v;
    const auto silent = silent_closure(source);
    for (State x = 0; x < source.size(); ++x) {
        for (const auto& [label, y] : target.out(f[x])) {
            bool matched = false;
            for (State x1 = 0; x1 < source.size() && !matched; ++x1) {
                if (!silent[x][x1] || f[x1] != f[x])
                    continue;
                for (const auto& [l2, x2] : source.out(x1))
                    matched = matched || (l2 == label && f[x2] == y);
            }
            if (!matched)
                return failed(name, UnreflectedStep{x, f[x], label, y}, source, target);
        }
    }
    return holds(name);
}

namespace {

PartitionRelation greatest_fixpoint(const Lts& lts, const std::function<bool(const PartitionRelation&, State,
                                                                                 State)>& transfers)
{
    auto r = PartitionRelation::universal(lts.size());
    bool changed = true;
    while (changed) {
        changed = false;
        for (State x = 0; x < lts.size(); ++x) {
            for (State y = 0; y < lts.size(); ++y) {
                if (r.contains(x, y) && !transfers(r, x, y)) {
                    r.remove(x, y);
                    r.remove(y, x);
                    changed = true;
                }
            }
        }
    }
    return r;
}

} // namespace

PartitionRelation strong_bisimilarity(const Lts& lts)
{
    return greatest_fixpoint(lts, [&](const PartitionRelation& r, State x, State y) {
        for (const auto& [label, x2] : lts.out(x)) {
            const auto& steps = lts.out(y);
            if (std::none_of(steps.begin(), steps.end(),
                             [&](const auto& s) { return s.first == label && r.contains(x2, s.second); }))
                return false;
        }
        return true;
    });
}

PartitionRelation branching_bisimilarity(const Lts& lts)
{
    const auto silent = silent_closure(lts);
    return greatest_fixpoint(lts, [&](const PartitionRelation& r, State x1, State y1) {
        for (const auto& [label, x2] : lts.out(x1)) {
            if (label.is_tau() && r.contains(x2, y1))
                continue;
            bool matched = false;
            for (State y = 0; y < lts.size() && !matched; ++y) {
                if (!silent[y1][y] || !r.contains(x1, y))
                    continue;
                for (const auto& [l2, y2] : lts.out(y))
                    matched = matched || (l2 == label && r.contains(x2, y2));
            }
            if (!matched)
                return false;
        }
        return true;
    });
}

Quotient branching_quotient(const Lts& lts)
{
    return quotient_by(lts, branching_bisimilarity(lts), true);
}

Quotient strong_quotient(const Lts& lts)
{
    return quotient_by(lts, strong_bisimilarity(lts), false);
}

StateMap extend_reduction(const StateMap& g, const Lts& target)
{
    return compose(branching_quotient(target).map, g);
}

PartitionRelation brute_force_largest(const Lts& lts, BruteKind kind)
{
    const std::size_t n = lts.size();
    if (n > 10)
        throw precondition_error("brute-force search is limited to 10 states");
    // Silent reachability by breadth-first search, separate from silent_closure.
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (State s = 0; s < n; ++s) {
        std::deque<State> queue{s};
        reach[s][s] = 1;
        while (!queue.empty()) {
            const State v = queue.front();
            queue.pop_front();
            for (const auto& [label, w] : lts.out(v)) {
                if (label.is_tau() && !reach[s][w]) {
                    reach[s][w] = 1;
                    queue.push_back(w);
                }
            }
        }
    }
    auto is_bisimulation = [&](const std::vector<State>& block) {
        auto rel = [&](State a, State b) { return block[a] == block[b]; };
        for (State x1 = 0; x1 < n; ++x1) {
            for (State y1 = 0; y1 < n; ++y1) {
                if (!rel(x1, y1))
                    continue;
                for (const auto& [label, x2] : lts.out(x1)) {
                    bool ok = false;
                    if (kind == BruteKind::strong) {
                        for (const auto& [l2, y2] : lts.out(y1))
                            ok = ok || (l2 == label && rel(x2, y2));
                    } else {
                        ok = label.is_tau() && rel(x2, y1);
                        for (State y = 0; y < n && !ok; ++y)
                            if (reach[y1][y] && rel(x1, y))
                                for (const auto& [l2, y2] : lts.out(y))
                                    ok = ok || (l2 == label && rel(x2, y2));
                    }
                    if (!ok)
                        return false;
                }
            }
        }
        return true;
    };
    std::vector<State> block(n, 0);
    std::vector<State> best = [&] {
        std::vector<State> v(n);
        for (State i = 0; i < n; ++i)
            v[i] = i;
        return v;
    }();
    std::size_t best_pairs = n;
    // Restricted growth strings enumerate every set partition once.
    std::function<void(std::size_t, State)> visit = [&](std::size_t i, State used) {
        if (i == n) {
            std::size_t pairs = 0;
            for (State a = 0; a < n; ++a)
                for (State b = 0; b < n; ++b)
                    pairs += block[a] == block[b] ? 1 : 0;
            if (pairs > best_pairs && is_bisimulation(block)) {
                best = block;
                best_pairs = pairs;
            }
            return;
        }
        for (State b = 0; b <= used && b < n; ++b) {
            block[i] = b;
            visit(i + 1, std::max<State>(used, b + 1));
        }
    };
    if (n > 0)
        visit(0, 0);
    PartitionRelation r{n};
    for (State a = 0; a < n; ++a)
        for (State b = 0; b < n; ++b)
            if (best[a] == best[b])
                r.add(a, b);
    return r;
}

std::string to_string(SemanticMode mode)
{
    switch (mode) {
    case SemanticMode::strong: return "strong";
    case SemanticMode::fair: return "fair";
    case SemanticMode::branching_failed: return "branching_failed";
    case SemanticMode::branching: return "branching";
    }
    return "strong";
}

BisimMapReport check_bisim_map(const StateMap& f, const FairLts& source, const FairLts& target, SemanticMode mode,
                               const CheckBounds& bounds)
{
    const bool silent = source.lts.has_tau() || target.lts.has_tau();
    const bool fairness = has_fairness(source.fairness) || has_fairness(target.fairness);
    if (mode == SemanticMode::strong && silent)
        throw precondition_error("strong mode needs systems without silent steps");
    if (mode == SemanticMode::fair && silent)
        throw precondition_error("fair mode needs systems without silent steps");
    if ((mode == SemanticMode::strong || mode == SemanticMode::branching ||
         mode == SemanticMode::branching_failed) &&
        fairness)
        throw precondition_error(to_string(mode) + " mode does not take fairness constraints");

    BisimMapReport report;
    std::optional<SemMap> sem;
    switch (mode) {
    case SemanticMode::strong:
        sem = strong_sem_map(f, source.lts, target.lts, bounds.depth);
        report.concrete = check_strong_bisim_fn(f, source.lts, target.lts);
        break;
    case SemanticMode::fair:
        sem = fair_sem_map(f, source, target, FairBounds{bounds.depth, bounds.stem_bound, bounds.cycle_bound});
        report.concrete = check_fair_bisim_fn(f, source, target, FairMode::exact, bounds);
        break;
    case SemanticMode::branching_failed:
    case SemanticMode::branching:
        sem = branching_sem_map(f, source.lts, target.lts, bounds.depth, mode == SemanticMode::branching);
        report.concrete = check_branching_bisim_fn(f, source.lts, target.lts);
        break;
    }
    const auto result = is_bisim_map_bounded(sem->map, bounds.mono);
    report.presheaf.check = "bisim-map-" + to_string(mode);
    report.presheaf.holds = result.holds;
    report.presheaf.certified_bounds = {{"depth", bounds.depth},
                                        {"mono_stage_bound", bounds.mono.stage_bound},
                                        {"mono_support_bound", bounds.mono.support_bound}};
    if (mode == SemanticMode::fair) {
        report.presheaf.certified_bounds["stem_bound"] = bounds.stem_bound;
        report.presheaf.certified_bounds["cycle_bound"] = bounds.cycle_bound;
    }
    report.presheaf.notes.push_back(std::to_string(result.squares_checked) + " squares checked");
    if (!result.bounded_family_run)
        report.presheaf.notes.emplace_back("forest base: empty and extension squares cover every mono");
    if (result.counterexample) {
        const auto& sq = *result.counterexample;
        const auto stage = sq.stage ? sem->map.target().base().name(*sq.stage) : std::string{"-"};
        SquareWitness w{sq.family, sq.description, stage};
        report.presheaf.witness_text = describe(w, source.lts, target.lts);
        report.presheaf.witness = std::move(w);
    }
    report.agree = report.presheaf.holds == report.concrete.holds;
    return report;
}

} // namespace bisim
