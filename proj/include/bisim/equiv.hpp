#pragma once

#include "bisim/lts.hpp"
#include "bisim/presheaf.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bisim {

class PartitionRelation {
public:
    enum class Kind { raw, symmetric, equivalence };

    explicit PartitionRelation(std::size_t size);
    PartitionRelation(std::size_t size, const std::vector<std::pair<State, State>>& pairs);

    static PartitionRelation identity(std::size_t size);
    static PartitionRelation universal(std::size_t size);
    static PartitionRelation kernel(const StateMap& f);

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] bool contains(State a, State b) const { return cells_[a * size_ + b] != 0; }
    void add(State a, State b);
    void remove(State a, State b);
    [[nodiscard]] std::vector<std::pair<State, State>> pairs() const;
    [[nodiscard]] std::size_t count() const;

    [[nodiscard]] bool is_reflexive() const;
    [[nodiscard]] bool is_symmetric() const;
    [[nodiscard]] bool is_transitive() const;
    [[nodiscard]] bool is_equivalence() const { return is_reflexive() && is_symmetric() && is_transitive(); }
    [[nodiscard]] Kind kind() const;

    [[nodiscard]] PartitionRelation reflexive_closure() const;
    [[nodiscard]] PartitionRelation symmetric_closure() const;
    [[nodiscard]] PartitionRelation equivalence_closure() const;

    // Blocks ordered by their least state; requires an equivalence.
    [[nodiscard]] std::vector<std::vector<State>> blocks() const;
    // State to block index, in the order of blocks().
    [[nodiscard]] StateMap block_map() const;
    [[nodiscard]] std::vector<std::vector<char>> matrix() const;

    friend bool operator==(const PartitionRelation&, const PartitionRelation&) = default;

private:
    std::size_t size_ = 0;
    std::vector<char> cells_;
};

[[nodiscard]] PartitionRelation relation_union(const PartitionRelation& a, const PartitionRelation& b);
// Pairs (x, z) with x first y and y second z.
[[nodiscard]] PartitionRelation relation_compose(const PartitionRelation& first, const PartitionRelation& second);
[[nodiscard]] std::string to_string(const PartitionRelation& relation, const Lts& lts);
[[nodiscard]] std::string to_string(PartitionRelation::Kind kind);

// Witnesses. Each names states of the systems given to the check.

// A step of the source system that the map does not preserve.
struct UnpreservedStep {
    Transition step;
};

// A step `from -label-> to` of the target with from = f(source) that has no
// matching step at `source`.
struct UnreflectedStep {
    State source{};
    State from{};
    Label label;
    State to{};
};

struct UncoveredState {
    State state{};
};

// first =>eps middle =>eps last with f(first) = f(last) != f(middle).
struct StutterTriple {
    State first{};
    State middle{};
    State last{};
};

// left R right and left -a-> x' but no matching step from right.
struct TransferFailure {
    State left{};
    State right{};
    Transition step;
};

// Two runs related by the check: the left one is fair, the right one is not,
// or the left one is unfair with a fair image on the right
// (fairness reflection and fair simulation).
struct LassoPair {
    Lasso left;
    Lasso right;
};

// A fair run of the target from f(start) that no fair run from start maps onto.
struct UnliftedLasso {
    State start{};
    Lasso image;
};

// The relation lacks (left, right) although `property` demands it.
struct MissingPair {
    State left{};
    State right{};
    std::string property;
};

struct SquareWitness {
    std::string family;
    std::string description;
    std::string stage;
};

using Witness = std::variant<UnpreservedStep, UnreflectedStep, UncoveredState, StutterTriple, TransferFailure,
                             LassoPair, UnliftedLasso, MissingPair, SquareWitness>;

[[nodiscard]] std::string witness_kind(const Witness& witness);

struct Verdict {
    std::string check;
    bool holds = true;
    std::optional<Witness> witness;
    std::string witness_text;
    // Empty when the verdict is exact.
    std::map<std::string, std::size_t> certified_bounds;
    std::vector<std::string> notes;
};

struct CheckBounds {
    std::size_t depth = 4;
    std::size_t stem_bound = 4;
    std::size_t cycle_bound = 4;
    MonoBounds mono;
};

enum class FairMode { exact, bounded };

[[nodiscard]] Verdict check_simulation(const StateMap& f, const Lts& source, const Lts& target);
// Surjectivity and reflection of every target step; f must be a simulation.
[[nodiscard]] Verdict check_strong_bisim_fn(const StateMap& f, const Lts& source, const Lts& target);
// Simulation plus fair lassos within the bounds mapping to fair lassos.
[[nodiscard]] Verdict check_fair_sim(const StateMap& f, const FairLts& source, const FairLts& target,
                                     const CheckBounds& bounds);
// No unfair run of the source has a fair image.
[[nodiscard]] Verdict check_fair_reflection(const StateMap& f, const FairLts& source, const FairLts& target,
                                            FairMode mode, const CheckBounds& bounds);
[[nodiscard]] Verdict check_fair_bisim_fn(const StateMap& f, const FairLts& source, const FairLts& target,
                                          FairMode mode, const CheckBounds& bounds);
// Step reflection plus lifting of fair target runs from f(x) to fair runs
// from x, over target lassos within the bounds.
[[nodiscard]] Verdict check_hildebrandt_open(const StateMap& f, const FairLts& source, const FairLts& target,
                                             const CheckBounds& bounds);

struct ForallFairOptions {
    FairMode mode = FairMode::exact;
    CheckBounds bounds;
    // Accept symmetric relations that are not equivalences. Nonstandard.
    bool symmetric_only = false;
};

[[nodiscard]] Verdict check_forall_fair_bisim(const PartitionRelation& relation, const FairLts& system,
                                              const ForallFairOptions& options);

struct FairQuotient {
    FairLts quotient;
    StateMap map;
};

// Blocks of the relation, fair exactly on images of fair source runs.
[[nodiscard]] FairQuotient forall_fair_quotient(const PartitionRelation& relation, const FairLts& system);

[[nodiscard]] Verdict check_branching_sim(const StateMap& f, const Lts& source, const Lts& target);
[[nodiscard]] Verdict check_branching_bisim_fn(const StateMap& f, const Lts& source, const Lts& target);

// Greatest fixpoints from the universal relation.
[[nodiscard]] PartitionRelation strong_bisimilarity(const Lts& lts);
[[nodiscard]] PartitionRelation branching_bisimilarity(const Lts& lts);

struct Quotient {
    Lts quotient;
    StateMap map;
};

// Blocks of the relation; a step between blocks for every step between
// members, except silent steps inside a block when `drop_inert` is set.
[[nodiscard]] Quotient quotient_by(const Lts& lts, const PartitionRelation& relation, bool drop_inert);
[[nodiscard]] Quotient branching_quotient(const Lts& lts);
[[nodiscard]] Quotient strong_quotient(const Lts& lts);
// The quotient map of the target composed after g.
[[nodiscard]] StateMap extend_reduction(const StateMap& g, const Lts& target);

enum class BruteKind { strong, branching };

// Largest bisimulation by trying every partition of the states; at most 10.
[[nodiscard]] PartitionRelation brute_force_largest(const Lts& lts, BruteKind kind);

enum class SemanticMode { strong, fair, branching_failed, branching };

[[nodiscard]] std::string to_string(SemanticMode mode);

struct BisimMapReport {
    Verdict presheaf;
    Verdict concrete;
    bool agree = true;
};

// Lifts f to the mode's semantic presheaves, runs the bounded square check
// and the matching concrete check.
[[nodiscard]] BisimMapReport check_bisim_map(const StateMap& f, const FairLts& source, const FairLts& target,
                                             SemanticMode mode, const CheckBounds& bounds);

// Renders the witness with state names of the two systems.
[[nodiscard]] std::string describe(const Witness& witness, const Lts& source, const Lts& target);

} // namespace bisim
