#include "bisim/lts.hpp"

#include "bisim/errors.hpp"
#include "bisim/fair_search.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <sstream>

namespace bisim {

std::string to_string(const Word& word)
{
    if (word.empty())
        return "eps";
    std::string out;
    for (const auto& letter : word) {
        if (!out.empty())
            out += '.';
        out += letter.name();
    }
    return out;
}

bool is_prefix(const Word& prefix, const Word& word)
{
    return prefix.size() <= word.size() && std::equal(prefix.begin(), prefix.end(), word.begin());
}

Word meet(const Word& lhs, const Word& rhs)
{
    auto [l, r] = std::mismatch(lhs.begin(), lhs.end(), rhs.begin(), rhs.end());
    return Word(lhs.begin(), l);
}

Word prefix_of(const Word& word, std::size_t length)
{
    return Word(word.begin(), word.begin() + static_cast<std::ptrdiff_t>(std::min(length, word.size())));
}

std::vector<Word> words_up_to(const std::set<Label>& letters, std::size_t depth)
{
    std::vector<Word> out{Word{}};
    std::size_t level_begin = 0;
    for (std::size_t len = 1; len <= depth; ++len) {
        const std::size_t level_end = out.size();
        for (std::size_t i = level_begin; i < level_end; ++i) {
            for (const auto& letter : letters) {
                Word w = out[i];
                w.push_back(letter);
                out.push_back(std::move(w));
            }
        }
        level_begin = level_end;
    }
    return out;
}

Lts::Lts(std::vector<std::string> state_names, std::vector<Transition> transitions,
         std::set<Label> extra_alphabet)
    : names_{std::move(state_names)}, alphabet_{std::move(extra_alphabet)}
{
    if (alphabet_.contains(Label::tau()))
        throw precondition_error("the silent label cannot be a visible action");
    std::sort(transitions.begin(), transitions.end());
    transitions.erase(std::unique(transitions.begin(), transitions.end()), transitions.end());
    out_.resize(names_.size());
    for (const auto& t : transitions) {
        if (t.source >= names_.size() || t.target >= names_.size())
            throw precondition_error("transition refers to a state outside the system");
        if (t.label.name().empty())
            throw precondition_error("empty transition label");
        if (t.label.is_tau())
            has_tau_ = true;
        else
            alphabet_.insert(t.label);
        out_[t.source].emplace_back(t.label, t.target);
    }
    transitions_ = std::move(transitions);
}

std::optional<State> Lts::find(std::string_view name) const
{
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end())
        return std::nullopt;
    return static_cast<State>(it - names_.begin());
}

std::set<Label> Lts::labels() const
{
    auto out = alphabet_;
    if (has_tau_)
        out.insert(Label::tau());
    return out;
}

std::vector<State> Lts::successors(State s, const Label& label) const
{
    std::vector<State> out;
    for (const auto& [l, t] : out_.at(s))
        if (l == label)
            out.push_back(t);
    return out;
}

bool Lts::has_transition(State source, const Label& label, State target) const
{
    const auto& edges = out_.at(source);
    return std::find(edges.begin(), edges.end(), std::pair{label, target}) != edges.end();
}

Lts Lts::renamed(std::vector<std::string> names) const
{
    if (names.size() != names_.size())
        throw precondition_error("name list does not match the number of states");
    return Lts{std::move(names), transitions_, alphabet_};
}

std::vector<std::string> default_state_names(std::size_t count)
{
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(std::to_string(i));
    return out;
}

Execution empty_execution(State s)
{
    return Execution{{}, {s}};
}

Execution extended(Execution p, Label label, State target)
{
    p.trace.push_back(std::move(label));
    p.states.push_back(target);
    return p;
}

Execution restrict(const Execution& p, const Word& prefix)
{
    if (!is_prefix(prefix, p.trace))
        throw precondition_error("restriction to a word that is not a prefix of the trace");
    return restrict_to_length(p, prefix.size());
}

Execution restrict_to_length(const Execution& p, std::size_t length)
{
    if (length > p.length())
        throw precondition_error("restriction beyond the end of an execution");
    Execution out;
    out.trace.assign(p.trace.begin(), p.trace.begin() + static_cast<std::ptrdiff_t>(length));
    out.states.assign(p.states.begin(), p.states.begin() + static_cast<std::ptrdiff_t>(length + 1));
    return out;
}

bool is_execution_of(const Lts& lts, const Execution& p)
{
    if (p.states.size() != p.trace.size() + 1)
        return false;
    for (State s : p.states)
        if (s >= lts.size())
            return false;
    for (std::size_t i = 0; i < p.trace.size(); ++i)
        if (!lts.has_transition(p.states[i], p.trace[i], p.states[i + 1]))
            return false;
    return true;
}

Execution apply_map(const StateMap& f, const Execution& p)
{
    Execution out{p.trace, {}};
    out.states.reserve(p.states.size());
    for (State s : p.states)
        out.states.push_back(f.at(s));
    return out;
}

std::string to_string(const Execution& p, const Lts& lts)
{
    std::string out = lts.name(p.states.front());
    for (std::size_t i = 0; i < p.trace.size(); ++i)
        out += " -" + p.trace[i].name() + "-> " + lts.name(p.states[i + 1]);
    return out;
}

ExecutionStages executions_up_to(const Lts& lts, std::size_t depth)
{
    return executions_up_to(lts, depth, lts.labels());
}

ExecutionStages executions_up_to(const Lts& lts, std::size_t depth, const std::set<Label>& letters)
{
    ExecutionStages stages;
    for (auto& w : words_up_to(letters, depth))
        stages.emplace(std::move(w), std::vector<Execution>{});
    auto& base = stages[Word{}];
    for (State s = 0; s < lts.size(); ++s)
        base.push_back(empty_execution(s));
    std::vector<Execution> frontier = base;
    for (std::size_t len = 1; len <= depth; ++len) {
        std::vector<Execution> next;
        for (const auto& p : frontier)
            for (const auto& [label, target] : lts.out(p.last()))
                if (letters.contains(label))
                    next.push_back(extended(p, label, target));
        for (const auto& p : next)
            stages[p.trace].push_back(p);
        frontier = std::move(next);
    }
    for (auto& [w, execs] : stages)
        std::sort(execs.begin(), execs.end());
    return stages;
}

std::vector<Execution> executions_with_trace(const Lts& lts, const Word& trace)
{
    std::vector<Execution> current;
    for (State s = 0; s < lts.size(); ++s)
        current.push_back(empty_execution(s));
    for (const auto& letter : trace) {
        std::vector<Execution> next;
        for (const auto& p : current)
            for (State t : lts.successors(p.last(), letter))
                next.push_back(extended(p, letter, t));
        current = std::move(next);
    }
    std::sort(current.begin(), current.end());
    return current;
}

std::vector<std::vector<char>> silent_closure(const Lts& lts)
{
    const std::size_t n = lts.size();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (State s = 0; s < n; ++s) {
        std::vector<State> stack{s};
        reach[s][s] = 1;
        while (!stack.empty()) {
            State x = stack.back();
            stack.pop_back();
            for (const auto& [label, t] : lts.out(x)) {
                if (label.is_tau() && !reach[s][t]) {
                    reach[s][t] = 1;
                    stack.push_back(t);
                }
            }
        }
    }
    return reach;
}

std::set<WeakStep> weak_reach(const Lts& lts, std::size_t length_bound)
{
    std::set<WeakStep> rel;
    std::deque<WeakStep> work;
    auto add = [&](WeakStep step) {
        if (rel.insert(step).second)
            work.push_back(std::move(step));
    };
    for (State s = 0; s < lts.size(); ++s)
        add(WeakStep{s, {}, s});
    while (!work.empty()) {
        WeakStep step = std::move(work.front());
        work.pop_front();
        for (const auto& [label, t] : lts.out(step.to)) {
            if (label.is_tau()) {
                add(WeakStep{step.from, step.trace, t});
            } else if (step.trace.size() < length_bound) {
                Word w = step.trace;
                w.push_back(label);
                add(WeakStep{step.from, std::move(w), t});
            }
        }
    }
    return rel;
}

State Lasso::at(std::size_t position) const
{
    const std::size_t m = stem.length();
    if (position <= m)
        return stem.states[position];
    return cycle[(position - m - 1) % cycle.size()].second;
}

const Label& Lasso::label_at(std::size_t position) const
{
    const std::size_t m = stem.length();
    if (position < m)
        return stem.trace[position];
    return cycle[(position - m) % cycle.size()].first;
}

Execution Lasso::prefix(std::size_t length) const
{
    Execution out{{}, {at(0)}};
    for (std::size_t i = 0; i < length; ++i) {
        out.trace.push_back(label_at(i));
        out.states.push_back(at(i + 1));
    }
    return out;
}

std::set<State> Lasso::cycle_states() const
{
    std::set<State> out;
    for (const auto& [label, s] : cycle)
        out.insert(s);
    return out;
}

namespace {

// Shortest stem and primitive period of the sequence u v^omega.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> canonical_sequence(std::vector<T> stem, std::vector<T> cycle)
{
    const std::size_t k = cycle.size();
    for (std::size_t d = 1; d <= k; ++d) {
        if (k % d != 0)
            continue;
        bool periodic = true;
        for (std::size_t j = d; j < k && periodic; ++j)
            periodic = cycle[j] == cycle[j - d];
        if (periodic) {
            cycle.resize(d);
            break;
        }
    }
    while (!stem.empty() && stem.back() == cycle.back()) {
        std::rotate(cycle.rbegin(), cycle.rbegin() + 1, cycle.rend());
        stem.pop_back();
    }
    return {std::move(stem), std::move(cycle)};
}

} // namespace

Lasso canonical(const Lasso& lasso)
{
    if (lasso.cycle.empty())
        throw precondition_error("lasso with an empty cycle");
    if (lasso.cycle.back().second != lasso.stem.last())
        throw precondition_error("lasso cycle does not close at its entry state");
    using step = std::pair<State, Label>;
    std::vector<step> stem;
    std::vector<step> cycle;
    for (std::size_t i = 0; i < lasso.stem.length(); ++i)
        stem.emplace_back(lasso.stem.states[i], lasso.stem.trace[i]);
    State entry = lasso.stem.last();
    for (const auto& [label, target] : lasso.cycle) {
        cycle.emplace_back(entry, label);
        entry = target;
    }
    auto [u, v] = canonical_sequence(std::move(stem), std::move(cycle));
    Lasso out;
    for (const auto& [s, label] : u) {
        out.stem.states.push_back(s);
        out.stem.trace.push_back(label);
    }
    out.stem.states.push_back(v.front().first);
    for (std::size_t j = 0; j < v.size(); ++j)
        out.cycle.emplace_back(v[j].second, v[(j + 1) % v.size()].first);
    return out;
}

bool is_lasso_of(const Lts& lts, const Lasso& lasso)
{
    if (lasso.cycle.empty() || !is_execution_of(lts, lasso.stem))
        return false;
    State entry = lasso.stem.last();
    for (const auto& [label, target] : lasso.cycle) {
        if (target >= lts.size() || !lts.has_transition(entry, label, target))
            return false;
        entry = target;
    }
    return entry == lasso.stem.last();
}

Lasso apply_map(const StateMap& f, const Lasso& lasso)
{
    Lasso out{apply_map(f, lasso.stem), {}};
    for (const auto& [label, s] : lasso.cycle)
        out.cycle.emplace_back(label, f.at(s));
    return out;
}

std::string to_string(const Lasso& lasso, const Lts& lts)
{
    std::string out = to_string(lasso.stem, lts) + " (";
    for (std::size_t j = 0; j < lasso.cycle.size(); ++j) {
        if (j != 0)
            out += ' ';
        out += "-" + lasso.cycle[j].first.name() + "-> " + lts.name(lasso.cycle[j].second);
    }
    return out + ")^w";
}

PeriodicWord canonical(const PeriodicWord& word)
{
    if (word.period.empty())
        throw precondition_error("periodic word with an empty period");
    auto [u, v] = canonical_sequence(word.prefix, word.period);
    return PeriodicWord{std::move(u), std::move(v)};
}

PeriodicWord trace_of(const Lasso& lasso)
{
    PeriodicWord w{lasso.stem.trace, {}};
    for (const auto& [label, s] : lasso.cycle)
        w.period.push_back(label);
    return canonical(w);
}

Label letter_at(const PeriodicWord& word, std::size_t position)
{
    if (position < word.prefix.size())
        return word.prefix[position];
    return word.period[(position - word.prefix.size()) % word.period.size()];
}

std::string to_string(const PeriodicWord& word)
{
    std::string out = word.prefix.empty() ? std::string{} : to_string(word.prefix) + ".";
    return out + "(" + to_string(word.period) + ")^w";
}

std::vector<Lasso> lassos_up_to(const Lts& lts, std::size_t stem_bound, std::size_t cycle_bound)
{
    if (cycle_bound == 0)
        throw precondition_error("cycle bound must be at least 1");
    std::set<Lasso> found;
    std::function<void(const Execution&, std::vector<std::pair<Label, State>>&, State)> close_cycles;
    close_cycles = [&](const Execution& stem, std::vector<std::pair<Label, State>>& cycle, State at) {
        if (cycle.size() == cycle_bound)
            return;
        for (const auto& [label, target] : lts.out(at)) {
            cycle.emplace_back(label, target);
            if (target == stem.last())
                found.insert(canonical(Lasso{stem, cycle}));
            close_cycles(stem, cycle, target);
            cycle.pop_back();
        }
    };
    std::function<void(const Execution&)> grow = [&](const Execution& stem) {
        std::vector<std::pair<Label, State>> cycle;
        close_cycles(stem, cycle, stem.last());
        if (stem.length() == stem_bound)
            return;
        for (const auto& [label, target] : lts.out(stem.last()))
            grow(extended(stem, label, target));
    };
    for (State s = 0; s < lts.size(); ++s)
        grow(empty_execution(s));
    return {found.begin(), found.end()};
}

FairLts make_fair(Lts lts, FairnessSpec fairness)
{
    auto check = [&](const std::set<State>& states) {
        for (State s : states)
            if (s >= lts.size())
                throw precondition_error("fairness refers to a state outside the system");
    };
    if (lts.has_tau())
        throw precondition_error("fair transition systems do not use the silent label");
    if (const auto* st = std::get_if<Streett>(&fairness)) {
        for (const auto& pair : st->pairs) {
            check(pair.trigger);
            check(pair.response);
        }
    } else if (const auto* aa = std::get_if<AlwaysAfter>(&fairness)) {
        check(aa->allowed);
        if (aa->start)
            check(*aa->start);
    } else {
        const auto& img = std::get<ImageFairness>(fairness);
        if (!img.source)
            throw precondition_error("image fairness without a source system");
        require_total(img.map, img.source->lts, lts);
        if (!is_simulation(img.map, img.source->lts, lts).holds)
            throw precondition_error("image fairness map is not a simulation");
    }
    return FairLts{std::move(lts), std::move(fairness)};
}

std::string kind_name(const FairnessSpec& spec)
{
    switch (spec.index()) {
    case 0: return "streett";
    case 1: return "always_after";
    default: return "image";
    }
}

bool is_fair(const FairLts& system, const Lasso& lasso)
{
    if (!is_lasso_of(system.lts, lasso))
        throw precondition_error("lasso is not a run of the system");
    auto graph = search::lasso_graph(lasso);
    return search::find_lasso(graph, {search::Constraint{0, &system, search::Polarity::fair}}).has_value();
}

std::vector<TaggedLasso> fair_lassos(const FairLts& system, std::size_t stem_bound, std::size_t cycle_bound)
{
    std::vector<TaggedLasso> out;
    for (auto& lasso : lassos_up_to(system.lts, stem_bound, cycle_bound)) {
        const bool fair = is_fair(system, lasso);
        out.push_back(TaggedLasso{std::move(lasso), fair});
    }
    return out;
}

void require_total(const StateMap& f, const Lts& source, const Lts& target)
{
    if (f.size() != source.size())
        throw precondition_error("state map is not total on the source system");
    for (State s : f)
        if (s >= target.size())
            throw precondition_error("state map leaves the target system");
}

SimulationCheck is_simulation(const StateMap& f, const Lts& source, const Lts& target)
{
    require_total(f, source, target);
    // Visible steps are reported before silent ones.
    for (const bool silent : {false, true})
        for (const auto& t : source.transitions())
            if (t.label.is_tau() == silent && !target.has_transition(f[t.source], t.label, f[t.target]))
                return SimulationCheck{false, t};
    return SimulationCheck{};
}

BranchingSimulationCheck is_branching_simulation(const StateMap& f, const Lts& source, const Lts& target)
{
    require_total(f, source, target);
    for (const auto& t : source.transitions()) {
        const bool simulated = target.has_transition(f[t.source], t.label, f[t.target]);
        const bool collapsed = t.label.is_tau() && f[t.source] == f[t.target];
        if (!simulated && !collapsed)
            return BranchingSimulationCheck{false, t, std::nullopt};
    }
    const auto silent = silent_closure(source);
    for (State x1 = 0; x1 < source.size(); ++x1) {
        for (State x3 = 0; x3 < source.size(); ++x3) {
            if (!silent[x1][x3] || f[x1] != f[x3])
                continue;
            for (State x2 = 0; x2 < source.size(); ++x2)
                if (silent[x1][x2] && silent[x2][x3] && f[x2] != f[x1])
                    return BranchingSimulationCheck{false, std::nullopt, std::array<State, 3>{x1, x2, x3}};
        }
    }
    return BranchingSimulationCheck{};
}

bool is_surjective(const StateMap& f, std::size_t target_size)
{
    std::vector<char> hit(target_size, 0);
    for (State s : f)
        if (s < target_size)
            hit[s] = 1;
    return std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; });
}

StateMap identity_map(std::size_t size)
{
    StateMap f(size);
    std::iota(f.begin(), f.end(), State{0});
    return f;
}

StateMap compose(const StateMap& second, const StateMap& first)
{
    StateMap out;
    out.reserve(first.size());
    for (State s : first)
        out.push_back(second.at(s));
    return out;
}

} // namespace bisim
