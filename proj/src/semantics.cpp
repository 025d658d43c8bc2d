#include "bisim/semantics.hpp"

#include "bisim/errors.hpp"

#include <functional>

namespace bisim {

std::string to_string(const Point& point)
{
    switch (point.kind) {
    case Point::Kind::word: return to_string(point.word);
    case Point::Kind::stretch: return "(" + std::to_string(point.stretch) + ",tau_bar)";
    case Point::Kind::silent_bar: return "tau_bar";
    case Point::Kind::infinite: return to_string(point.infinite);
    }
    return {};
}

Word hide(const Word& word)
{
    Word out;
    for (const auto& l : word)
        if (!l.is_tau())
            out.push_back(l);
    return out;
}

Point hide(const Point& point)
{
    switch (point.kind) {
    case Point::Kind::word: return Point::finite(hide(point.word));
    case Point::Kind::stretch:
    case Point::Kind::silent_bar: return Point::bar();
    case Point::Kind::infinite: break;
    }
    throw precondition_error("infinite words have no hidden form");
}

PointSet::PointSet(std::vector<Point> points, const std::vector<std::pair<Elem, Elem>>& order, std::size_t depth)
    : points_{std::move(points)}, depth_{depth}
{
    std::vector<std::string> names;
    for (Elem e = 0; e < points_.size(); ++e) {
        if (!index_.emplace(points_[e], e).second)
            throw precondition_error("duplicate point " + to_string(points_[e]));
        names.push_back(to_string(points_[e]));
    }
    poset_ = std::make_shared<FinPoset>(std::move(names), order);
}

std::optional<Elem> PointSet::find(const Point& point) const
{
    auto it = index_.find(point);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

Elem PointSet::at(const Point& point) const
{
    if (auto e = find(point))
        return *e;
    throw precondition_error("point " + to_string(point) + " is outside the observation poset");
}

namespace {

// Words up to `depth` with one order pair per word and its parent.
void add_words(const std::set<Label>& letters, std::size_t depth, std::vector<Point>& points,
               std::vector<std::pair<Elem, Elem>>& order, std::map<Word, Elem>& where)
{
    for (auto& w : words_up_to(letters, depth)) {
        const Elem e = points.size();
        if (!w.empty())
            order.emplace_back(where.at(prefix_of(w, w.size() - 1)), e);
        where.emplace(w, e);
        points.push_back(Point::finite(std::move(w)));
    }
}

std::set<Label> with_tau(std::set<Label> letters)
{
    letters.insert(Label::tau());
    return letters;
}

std::set<Label> visible(const Lts& lts)
{
    return lts.alphabet();
}

std::set<Label> joined(const std::set<Label>& a, const std::set<Label>& b)
{
    std::set<Label> out = a;
    out.insert(b.begin(), b.end());
    return out;
}

} // namespace

PointSetPtr word_points(const std::set<Label>& letters, std::size_t depth)
{
    std::vector<Point> points;
    std::vector<std::pair<Elem, Elem>> order;
    std::map<Word, Elem> where;
    add_words(letters, depth, points, order, where);
    return std::make_shared<PointSet>(std::move(points), order, depth);
}

PointSetPtr stretched_points(const std::set<Label>& letters, std::size_t depth)
{
    std::vector<Point> points;
    std::vector<std::pair<Elem, Elem>> order;
    std::map<Word, Elem> where;
    add_words(with_tau(letters), depth, points, order, where);
    Elem below = where.at(Word{});
    for (std::size_t n = 1; n <= depth; ++n) {
        order.emplace_back(below, points.size());
        below = points.size();
        points.push_back(Point::stretched(n));
    }
    return std::make_shared<PointSet>(std::move(points), order, depth);
}

PointSetPtr barred_points(const std::set<Label>& letters, std::size_t depth)
{
    std::vector<Point> points;
    std::vector<std::pair<Elem, Elem>> order;
    std::map<Word, Elem> where;
    add_words(letters, depth, points, order, where);
    order.emplace_back(where.at(Word{}), points.size());
    points.push_back(Point::bar());
    return std::make_shared<PointSet>(std::move(points), order, depth);
}

PointSetPtr infinite_points(const std::set<Label>& letters, std::size_t depth,
                            const std::set<PeriodicWord>& infinite, std::size_t prefix_length)
{
    if (prefix_length < depth)
        throw precondition_error("prefixes of infinite words must reach the finite depth");
    std::vector<Point> points;
    std::vector<std::pair<Elem, Elem>> order;
    std::map<Word, Elem> where;
    add_words(letters, depth, points, order, where);
    std::set<PeriodicWord> seen;
    for (const auto& raw : infinite) {
        const auto w = canonical(raw);
        if (!seen.insert(w).second)
            continue;
        Word prefix;
        Elem below = where.at(Word{});
        for (std::size_t i = 0; i < prefix_length; ++i) {
            prefix.push_back(letter_at(w, i));
            auto it = where.find(prefix);
            if (it == where.end()) {
                it = where.emplace(prefix, points.size()).first;
                order.emplace_back(below, points.size());
                points.push_back(Point::finite(prefix));
            }
            below = it->second;
        }
        order.emplace_back(below, points.size());
        points.push_back(Point::omega(w));
    }
    return std::make_shared<PointSet>(std::move(points), order, prefix_length);
}

MonotoneMap hiding_map(const PointSetPtr& from, const PointSetPtr& to)
{
    MonotoneMap h{from->poset(), to->poset(), {}};
    for (const auto& p : from->points())
        h.map.push_back(to->at(hide(p)));
    return h;
}

std::string to_string(const SemElement& element, const Lts& lts)
{
    auto states = [&](const std::vector<State>& list) {
        std::string out;
        for (std::size_t i = 0; i < list.size(); ++i)
            out += (i ? "," : "") + lts.name(list[i]);
        return out;
    };
    if (const auto* p = std::get_if<Execution>(&element))
        return "<" + states(p->states) + ">";
    const auto& lasso = std::get<Lasso>(element);
    std::vector<State> cycle;
    for (const auto& [label, s] : lasso.cycle)
        cycle.push_back(s);
    return "<" + states(lasso.stem.states) + ">(" + states(cycle) + ")^w";
}

const std::vector<SemElement>& SemPresheaf::stage(const Point& point) const
{
    return elements.at(points->at(point));
}

std::optional<std::size_t> SemPresheaf::find(Elem e, const SemElement& element) const
{
    const auto& list = elements.at(e);
    auto it = std::find(list.begin(), list.end(), element);
    if (it == list.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - list.begin());
}

namespace {

using Restriction = std::function<SemElement(const Point& upper, const Point& lower, const SemElement& element)>;

std::string trace_suffix(const SemElement& element)
{
    if (const auto* p = std::get_if<Execution>(&element))
        return "@" + to_string(p->trace);
    return "@" + to_string(trace_of(std::get<Lasso>(element)));
}

SemPresheaf assemble(const PointSetPtr& points, std::vector<std::vector<SemElement>> elements, const Lts& lts,
                     const Restriction& restriction)
{
    const auto& base = *points->poset();
    std::vector<std::size_t> sizes;
    std::vector<std::map<SemElement, std::size_t>> index(base.size());
    for (Elem e = 0; e < base.size(); ++e) {
        auto& stage = elements[e];
        std::sort(stage.begin(), stage.end());
        stage.erase(std::unique(stage.begin(), stage.end()), stage.end());
        sizes.push_back(stage.size());
        for (std::size_t x = 0; x < stage.size(); ++x)
            index[e].emplace(stage[x], x);
    }
    auto presheaf = std::make_shared<FinPresheaf>(points->poset(), sizes);
    for (Elem hi = 0; hi < base.size(); ++hi) {
        std::vector<std::string> names;
        std::map<std::string, std::size_t> count;
        for (const auto& el : elements[hi])
            ++count[names.emplace_back(to_string(el, lts))];
        for (std::size_t x = 0; x < names.size(); ++x)
            if (count[names[x]] > 1)
                names[x] += trace_suffix(elements[hi][x]);
        presheaf->set_element_names(hi, std::move(names));
        for (Elem lo : base.down(hi)) {
            if (lo == hi)
                continue;
            for (std::size_t x = 0; x < sizes[hi]; ++x) {
                const auto image = restriction(points->point(hi), points->point(lo), elements[hi][x]);
                auto it = index[lo].find(image);
                if (it == index[lo].end())
                    throw internal_error("restriction of " + to_string(elements[hi][x], lts) + " to " +
                                         to_string(points->point(lo)) + " is not in the stage");
                presheaf->set_res(hi, lo, x, it->second);
            }
        }
    }
    return SemPresheaf{points, presheaf, std::move(elements)};
}

std::vector<SemElement> as_elements(const std::vector<Execution>& list)
{
    return {list.begin(), list.end()};
}

SemElement restrict_finite(const Point&, const Point& lower, const SemElement& element)
{
    const auto length = lower.word.size();
    if (const auto* p = std::get_if<Execution>(&element))
        return restrict_to_length(*p, length);
    return std::get<Lasso>(element).prefix(length);
}

using Mapper = std::function<SemElement(Elem, const SemElement&)>;

NatTrans lift_map(const SemPresheaf& source, const SemPresheaf& target, const Mapper& image,
                  const std::function<void(Elem, const SemElement&, const SemElement&)>& missing)
{
    NatTrans t{source.presheaf, target.presheaf};
    for (Elem e = 0; e < source.elements.size(); ++e) {
        std::map<SemElement, std::size_t> index;
        for (std::size_t y = 0; y < target.elements[e].size(); ++y)
            index.emplace(target.elements[e][y], y);
        for (std::size_t x = 0; x < source.elements[e].size(); ++x) {
            const auto& element = source.elements[e][x];
            const auto mapped = image(e, element);
            auto it = index.find(mapped);
            if (it == index.end()) {
                missing(e, element, mapped);
                throw internal_error("mapped element is missing from the target stage");
            }
            t.set(e, x, it->second);
        }
    }
    return t;
}

std::vector<Execution> silent_executions(const Lts& lts, std::size_t depth)
{
    std::vector<Execution> out;
    Word trace;
    for (std::size_t k = 0; k <= depth; ++k) {
        auto stage = executions_with_trace(lts, trace);
        out.insert(out.end(), stage.begin(), stage.end());
        trace.push_back(Label::tau());
    }
    return out;
}

} // namespace

SemPresheaf strong_sem(const Lts& lts, std::size_t depth)
{
    return strong_sem(lts, word_points(visible(lts), depth));
}

SemPresheaf strong_sem(const Lts& lts, const PointSetPtr& points)
{
    if (lts.has_tau())
        throw precondition_error("strong semantics needs a system without silent steps");
    std::vector<std::vector<SemElement>> elements;
    for (const auto& p : points->points()) {
        if (p.kind != Point::Kind::word)
            throw precondition_error("strong semantics lives over finite words");
        elements.push_back(as_elements(executions_with_trace(lts, p.word)));
    }
    return assemble(points, std::move(elements), lts, restrict_finite);
}

SemMap strong_sem_map(const StateMap& f, const Lts& source, const Lts& target, std::size_t depth)
{
    const auto check = is_simulation(f, source, target);
    if (!check.holds)
        throw precondition_error("map is not a simulation: " + source.name(check.violation->source) + " -" +
                                 check.violation->label.name() + "-> " + source.name(check.violation->target) +
                                 " is not preserved");
    const auto points = word_points(joined(visible(source), visible(target)), depth);
    auto src = strong_sem(source, points);
    auto tgt = strong_sem(target, points);
    auto map = lift_map(
        src, tgt, [&](Elem, const SemElement& el) { return SemElement{apply_map(f, std::get<Execution>(el))}; },
        [](Elem, const SemElement&, const SemElement&) {});
    return SemMap{std::move(src), std::move(tgt), std::move(map)};
}

namespace {

std::vector<Lasso> fair_only(const FairLts& system, const FairBounds& bounds)
{
    std::vector<Lasso> out;
    for (auto& tagged : fair_lassos(system, bounds.stem_bound, bounds.cycle_bound))
        if (tagged.fair)
            out.push_back(std::move(tagged.lasso));
    return out;
}

SemPresheaf fair_sem_over(const FairLts& system, const PointSetPtr& points, const std::vector<Lasso>& fair)
{
    std::map<PeriodicWord, std::vector<SemElement>> by_trace;
    for (const auto& lasso : fair)
        by_trace[canonical(trace_of(lasso))].push_back(lasso);
    std::vector<std::vector<SemElement>> elements;
    for (const auto& p : points->points()) {
        if (p.kind == Point::Kind::word) {
            elements.push_back(as_elements(executions_with_trace(system.lts, p.word)));
        } else if (p.kind == Point::Kind::infinite) {
            auto it = by_trace.find(p.infinite);
            elements.push_back(it == by_trace.end() ? std::vector<SemElement>{} : it->second);
        } else {
            throw precondition_error("fair semantics lives over finite and infinite words");
        }
    }
    return assemble(points, std::move(elements), system.lts, restrict_finite);
}

std::set<PeriodicWord> traces_of(const std::vector<Lasso>& lassos)
{
    std::set<PeriodicWord> out;
    for (const auto& l : lassos)
        out.insert(canonical(trace_of(l)));
    return out;
}

} // namespace

SemPresheaf fair_sem(const FairLts& system, const FairBounds& bounds)
{
    const auto fair = fair_only(system, bounds);
    const auto points =
        infinite_points(visible(system.lts), bounds.depth, traces_of(fair), bounds.prefix_length());
    return fair_sem_over(system, points, fair);
}

SemMap fair_sem_map(const StateMap& f, const FairLts& source, const FairLts& target, const FairBounds& bounds)
{
    const auto check = is_simulation(f, source.lts, target.lts);
    if (!check.holds)
        throw precondition_error("map is not a simulation: " + source.lts.name(check.violation->source) + " -" +
                                 check.violation->label.name() + "-> " +
                                 source.lts.name(check.violation->target) + " is not preserved");
    const auto fair_source = fair_only(source, bounds);
    const auto fair_target = fair_only(target, bounds);
    auto traces = traces_of(fair_source);
    const auto more = traces_of(fair_target);
    traces.insert(more.begin(), more.end());
    const auto points = infinite_points(joined(visible(source.lts), visible(target.lts)), bounds.depth, traces,
                                        bounds.prefix_length());
    auto src = fair_sem_over(source, points, fair_source);
    auto tgt = fair_sem_over(target, points, fair_target);
    auto image = [&](Elem, const SemElement& el) -> SemElement {
        if (const auto* p = std::get_if<Execution>(&el))
            return apply_map(f, *p);
        return canonical(apply_map(f, std::get<Lasso>(el)));
    };
    auto missing = [&](Elem, const SemElement& el, const SemElement& mapped) {
        if (const auto* l = std::get_if<Lasso>(&mapped); l && !is_fair(target, *l))
            throw precondition_error("map is not a fair simulation: the fair lasso " +
                                     to_string(std::get<Lasso>(el), source.lts) + " maps to the unfair lasso " +
                                     to_string(*l, target.lts));
    };
    auto map = lift_map(src, tgt, image, missing);
    return SemMap{std::move(src), std::move(tgt), std::move(map)};
}

SemPresheaf base_presheaf(const Lts& lts, std::size_t depth, bool barred)
{
    return base_presheaf(lts, barred ? stretched_points(visible(lts), depth)
                                     : word_points(with_tau(visible(lts)), depth));
}

SemPresheaf base_presheaf(const Lts& lts, const PointSetPtr& points)
{
    const auto silent = silent_executions(lts, points->depth());
    std::vector<std::vector<SemElement>> elements;
    for (const auto& p : points->points()) {
        if (p.kind == Point::Kind::word)
            elements.push_back(as_elements(executions_with_trace(lts, p.word)));
        else if (p.kind == Point::Kind::stretch)
            elements.push_back(as_elements(silent));
        else
            throw precondition_error("base presheaf lives over words and stretched silent points");
    }
    auto restriction = [](const Point& upper, const Point& lower, const SemElement& el) -> SemElement {
        const auto& p = std::get<Execution>(el);
        if (upper.kind == Point::Kind::word)
            return restrict_to_length(p, lower.word.size());
        if (lower.kind == Point::Kind::word)
            return empty_execution(p.start());
        return p;
    };
    return assemble(points, std::move(elements), lts, restriction);
}

bool is_minimal(const Execution& p)
{
    return p.trace.empty() || !p.trace.back().is_tau();
}

std::vector<Execution> minimal_executions(const Lts& lts, const Word& observed, std::size_t depth)
{
    std::vector<Execution> out;
    if (observed.size() > depth)
        return out;
    std::function<void(Execution&, std::size_t)> grow = [&](Execution& p, std::size_t matched) {
        if (matched == observed.size()) {
            if (is_minimal(p))
                out.push_back(p);
            return;
        }
        if (p.length() == depth)
            return;
        for (const auto& [label, next] : lts.out(p.last())) {
            if (!label.is_tau() && label != observed[matched])
                continue;
            p.trace.push_back(label);
            p.states.push_back(next);
            grow(p, matched + (label.is_tau() ? 0 : 1));
            p.trace.pop_back();
            p.states.pop_back();
        }
    };
    for (State s = 0; s < lts.size(); ++s) {
        auto p = empty_execution(s);
        grow(p, 0);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Execution mpast(const Execution& p, const Word& observed)
{
    if (!is_prefix(observed, hide(p.trace)))
        throw precondition_error("observation " + to_string(observed) + " is not a prefix of the visible trace");
    std::size_t length = 0;
    std::size_t seen = 0;
    while (seen < observed.size()) {
        if (!p.trace[length].is_tau())
            ++seen;
        ++length;
    }
    return restrict_to_length(p, length);
}

SemPresheaf branching_sem(const Lts& lts, std::size_t depth)
{
    return branching_sem(lts, barred_points(visible(lts), depth));
}

SemPresheaf branching_sem(const Lts& lts, const PointSetPtr& points)
{
    std::vector<std::vector<SemElement>> elements;
    for (const auto& p : points->points()) {
        if (p.kind == Point::Kind::word)
            elements.push_back(as_elements(minimal_executions(lts, p.word, points->depth())));
        else if (p.kind == Point::Kind::silent_bar)
            elements.push_back(as_elements(silent_executions(lts, points->depth())));
        else
            throw precondition_error("branching semantics lives over visible words and tau_bar");
    }
    auto restriction = [](const Point& upper, const Point& lower, const SemElement& el) -> SemElement {
        const auto& p = std::get<Execution>(el);
        if (upper.kind == Point::Kind::silent_bar)
            return empty_execution(p.start());
        return mpast(p, lower.word);
    };
    return assemble(points, std::move(elements), lts, restriction);
}

SemPresheaf branching_failed_sem(const Lts& lts, std::size_t depth)
{
    return branching_sem(lts, word_points(visible(lts), depth));
}

Execution map_pf(const StateMap& f, const Lts& target, const Execution& p)
{
    Execution q = empty_execution(f.at(p.start()));
    for (std::size_t i = 0; i < p.length(); ++i) {
        const auto& label = p.trace[i];
        const State from = f.at(p.states[i]);
        const State to = f.at(p.states[i + 1]);
        if (label.is_tau() && from == to)
            continue;
        if (!target.has_transition(q.last(), label, to))
            throw internal_error("no " + label.name() + "-step from " + target.name(q.last()) + " to " +
                                 target.name(to) + " while mapping an execution");
        q = extended(std::move(q), label, to);
    }
    return q;
}

SemMap branching_sem_map(const StateMap& f, const Lts& source, const Lts& target, std::size_t depth, bool barred)
{
    const auto check = is_branching_simulation(f, source, target);
    if (!check.holds)
        throw precondition_error("map is not a branching simulation");
    const auto letters = joined(visible(source), visible(target));
    const auto points = barred ? barred_points(letters, depth) : word_points(letters, depth);
    auto src = branching_sem(source, points);
    auto tgt = branching_sem(target, points);
    auto map = lift_map(
        src, tgt,
        [&](Elem, const SemElement& el) { return SemElement{map_pf(f, target, std::get<Execution>(el))}; },
        [](Elem, const SemElement&, const SemElement&) {});
    return SemMap{std::move(src), std::move(tgt), std::move(map)};
}

PosetPtr time_poset(std::size_t depth)
{
    std::vector<std::string> names;
    std::vector<std::pair<Elem, Elem>> order;
    for (std::size_t n = 0; n <= depth; ++n) {
        names.push_back(std::to_string(n));
        if (n > 0)
            order.emplace_back(n - 1, n);
    }
    return std::make_shared<FinPoset>(std::move(names), order);
}

std::shared_ptr<FinPresheaf> observation_presheaf(const std::set<Label>& letters, std::size_t depth, bool with_tau_letter,
                                                  bool barred)
{
    const auto alphabet = with_tau_letter ? with_tau(letters) : letters;
    const auto time = time_poset(depth);
    std::vector<std::vector<Word>> words(depth + 1);
    for (auto& w : words_up_to(alphabet, depth))
        words[w.size()].push_back(std::move(w));
    std::vector<std::size_t> sizes;
    for (std::size_t n = 0; n <= depth; ++n)
        sizes.push_back(words[n].size() + (barred && n > 0 ? 1 : 0));
    auto out = std::make_shared<FinPresheaf>(time, sizes);
    for (std::size_t n = 0; n <= depth; ++n) {
        std::vector<std::string> names;
        for (const auto& w : words[n])
            names.push_back(to_string(w));
        if (barred && n > 0)
            names.emplace_back("tau_bar");
        out->set_element_names(n, names);
        for (std::size_t m = 0; m < n; ++m) {
            std::map<Word, std::size_t> lower;
            for (std::size_t y = 0; y < words[m].size(); ++y)
                lower.emplace(words[m][y], y);
            for (std::size_t x = 0; x < words[n].size(); ++x)
                out->set_res(n, m, x, lower.at(prefix_of(words[n][x], m)));
            if (barred)
                out->set_res(n, m, words[n].size(), m == 0 ? lower.at(Word{}) : words[m].size());
        }
    }
    return out;
}

} // namespace bisim
