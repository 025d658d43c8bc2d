#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace bisim {

using State = std::uint32_t;

// A total function between state sets, indexed by source state.
using StateMap = std::vector<State>;

class Label {
public:
    Label() = default;
    explicit Label(std::string name) : name_{std::move(name)} {}

    static Label tau() { return Label{"tau"}; }

    [[nodiscard]] bool is_tau() const noexcept { return name_ == "tau"; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }

    friend auto operator<=>(const Label&, const Label&) = default;

private:
    std::string name_;
};

using Word = std::vector<Label>;

[[nodiscard]] std::string to_string(const Word& word);
[[nodiscard]] bool is_prefix(const Word& prefix, const Word& word);
[[nodiscard]] Word meet(const Word& lhs, const Word& rhs);
[[nodiscard]] Word prefix_of(const Word& word, std::size_t length);

// All words over `letters` of length at most `depth`, shortest first and
// lexicographic within a length.
[[nodiscard]] std::vector<Word> words_up_to(const std::set<Label>& letters, std::size_t depth);

struct Transition {
    State source{};
    Label label;
    State target{};

    friend auto operator<=>(const Transition&, const Transition&) = default;
};

class Lts {
public:
    Lts() = default;

    // Transitions are stored as a set; `extra_alphabet` adds visible labels
    // that have no transition.
    Lts(std::vector<std::string> state_names, std::vector<Transition> transitions,
        std::set<Label> extra_alphabet = {});

    [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
    [[nodiscard]] const std::string& name(State s) const { return names_.at(s); }
    [[nodiscard]] std::optional<State> find(std::string_view name) const;

    [[nodiscard]] const std::set<Label>& alphabet() const noexcept { return alphabet_; }
    [[nodiscard]] bool has_tau() const noexcept { return has_tau_; }
    [[nodiscard]] std::set<Label> labels() const;

    [[nodiscard]] const std::vector<Transition>& transitions() const noexcept { return transitions_; }
    [[nodiscard]] const std::vector<std::pair<Label, State>>& out(State s) const { return out_.at(s); }
    [[nodiscard]] std::vector<State> successors(State s, const Label& label) const;
    [[nodiscard]] bool has_transition(State source, const Label& label, State target) const;

    [[nodiscard]] Lts renamed(std::vector<std::string> names) const;

private:
    std::vector<std::string> names_;
    std::set<Label> alphabet_;
    bool has_tau_ = false;
    std::vector<Transition> transitions_;
    std::vector<std::vector<std::pair<Label, State>>> out_;
};

[[nodiscard]] std::vector<std::string> default_state_names(std::size_t count);

struct Execution {
    Word trace;
    std::vector<State> states;

    [[nodiscard]] State start() const { return states.front(); }
    [[nodiscard]] State last() const { return states.back(); }
    [[nodiscard]] std::size_t length() const noexcept { return trace.size(); }

    friend auto operator<=>(const Execution&, const Execution&) = default;
};

[[nodiscard]] Execution empty_execution(State s);
[[nodiscard]] Execution extended(Execution p, Label label, State target);
[[nodiscard]] Execution restrict(const Execution& p, const Word& prefix);
[[nodiscard]] Execution restrict_to_length(const Execution& p, std::size_t length);
[[nodiscard]] bool is_execution_of(const Lts& lts, const Execution& p);
[[nodiscard]] Execution apply_map(const StateMap& f, const Execution& p);
[[nodiscard]] std::string to_string(const Execution& p, const Lts& lts);

using ExecutionStages = std::map<Word, std::vector<Execution>>;

// Every execution from every state, grouped by trace, for all traces of
// length at most `depth` over the system's labels (silent label included when
// the system uses it). Stages are sorted; empty stages are present.
[[nodiscard]] ExecutionStages executions_up_to(const Lts& lts, std::size_t depth);
[[nodiscard]] ExecutionStages executions_up_to(const Lts& lts, std::size_t depth,
                                               const std::set<Label>& letters);
[[nodiscard]] std::vector<Execution> executions_with_trace(const Lts& lts, const Word& trace);

struct WeakStep {
    State from{};
    Word trace;
    State to{};

    friend auto operator<=>(const WeakStep&, const WeakStep&) = default;
};

[[nodiscard]] std::set<WeakStep> weak_reach(const Lts& lts, std::size_t length_bound);

// silent[x][y] holds iff y is reachable from x by silent steps only.
[[nodiscard]] std::vector<std::vector<char>> silent_closure(const Lts& lts);

struct Lasso {
    Execution stem;
    std::vector<std::pair<Label, State>> cycle;

    [[nodiscard]] State at(std::size_t position) const;
    [[nodiscard]] const Label& label_at(std::size_t position) const;
    [[nodiscard]] Execution prefix(std::size_t length) const;
    [[nodiscard]] std::set<State> cycle_states() const;

    friend auto operator<=>(const Lasso&, const Lasso&) = default;
};

// Shortest stem and primitive cycle; two lassos denote the same infinite run
// iff their canonical forms are equal.
[[nodiscard]] Lasso canonical(const Lasso& lasso);
[[nodiscard]] bool is_lasso_of(const Lts& lts, const Lasso& lasso);
[[nodiscard]] Lasso apply_map(const StateMap& f, const Lasso& lasso);
[[nodiscard]] std::string to_string(const Lasso& lasso, const Lts& lts);

struct PeriodicWord {
    Word prefix;
    Word period;

    friend auto operator<=>(const PeriodicWord&, const PeriodicWord&) = default;
};

[[nodiscard]] PeriodicWord canonical(const PeriodicWord& word);
[[nodiscard]] PeriodicWord trace_of(const Lasso& lasso);
[[nodiscard]] Label letter_at(const PeriodicWord& word, std::size_t position);
[[nodiscard]] std::string to_string(const PeriodicWord& word);

// All canonical lassos with stem length <= stem_bound and cycle length in
// [1, cycle_bound], sorted.
[[nodiscard]] std::vector<Lasso> lassos_up_to(const Lts& lts, std::size_t stem_bound,
                                              std::size_t cycle_bound);

struct FairLts;

struct StreettPair {
    std::set<State> trigger;
    std::set<State> response;
};

// Fair iff for every pair, a cycle meeting `trigger` also meets `response`.
struct Streett {
    std::vector<StreettPair> pairs;
};

// Fair iff every state at position >= offset lies in `allowed`. When `start`
// is given, only runs beginning in `start` are constrained; the others are
// fair.
struct AlwaysAfter {
    std::size_t offset = 0;
    std::set<State> allowed;
    std::optional<std::set<State>> start;
};

// Fair iff some fair run of `source` maps pointwise onto the run.
struct ImageFairness {
    std::shared_ptr<const FairLts> source;
    StateMap map;
};

using FairnessSpec = std::variant<Streett, AlwaysAfter, ImageFairness>;

struct FairLts {
    Lts lts;
    FairnessSpec fairness;
};

[[nodiscard]] FairLts make_fair(Lts lts, FairnessSpec fairness);
[[nodiscard]] std::string kind_name(const FairnessSpec& spec);

[[nodiscard]] bool is_fair(const FairLts& system, const Lasso& lasso);

struct TaggedLasso {
    Lasso lasso;
    bool fair = false;
};

[[nodiscard]] std::vector<TaggedLasso> fair_lassos(const FairLts& system, std::size_t stem_bound,
                                                   std::size_t cycle_bound);

struct SimulationCheck {
    bool holds = true;
    std::optional<Transition> violation;
};

void require_total(const StateMap& f, const Lts& source, const Lts& target);
[[nodiscard]] SimulationCheck is_simulation(const StateMap& f, const Lts& source, const Lts& target);
// Visible steps are simulated, silent steps are simulated or collapsed, and
// f is constant on x2 whenever x1 =>eps x2 =>eps x3 and f(x1) = f(x3).
struct BranchingSimulationCheck {
    bool holds = true;
    std::optional<Transition> step;
    std::optional<std::array<State, 3>> stutter;
};

[[nodiscard]] BranchingSimulationCheck is_branching_simulation(const StateMap& f, const Lts& source,
                                                               const Lts& target);
[[nodiscard]] bool is_surjective(const StateMap& f, std::size_t target_size);
[[nodiscard]] StateMap identity_map(std::size_t size);
[[nodiscard]] StateMap compose(const StateMap& second, const StateMap& first);

} // namespace bisim
