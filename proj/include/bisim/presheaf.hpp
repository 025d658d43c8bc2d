#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bisim {

using Elem = std::size_t;

class FinPoset {
public:
    // The order is the reflexive-transitive closure of `order_pairs`, each
    // pair read as (lower, upper). Cycles are rejected.
    FinPoset(std::vector<std::string> names, const std::vector<std::pair<Elem, Elem>>& order_pairs);

    [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
    [[nodiscard]] const std::string& name(Elem e) const { return names_.at(e); }
    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
    [[nodiscard]] std::optional<Elem> find(const std::string& name) const;

    [[nodiscard]] bool leq(Elem lower, Elem upper) const { return leq_[lower * size() + upper] != 0; }
    // Elements below `e`, `e` included, in topological order.
    [[nodiscard]] const std::vector<Elem>& down(Elem e) const { return down_.at(e); }
    [[nodiscard]] const std::vector<Elem>& up(Elem e) const { return up_.at(e); }
    // A linear extension: every element appears after everything below it.
    [[nodiscard]] const std::vector<Elem>& topological() const noexcept { return topo_; }
    [[nodiscard]] std::optional<Elem> meet(Elem a, Elem b) const;

    // True when every principal down-set is a chain.
    [[nodiscard]] bool is_forest() const noexcept { return forest_; }
    // Immediate predecessors of `e`.
    [[nodiscard]] const std::vector<Elem>& covers_below(Elem e) const { return covers_.at(e); }

    // Position of the comparable pair (upper, lower) in restriction tables,
    // or npos when lower is not below upper.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    [[nodiscard]] std::size_t slot(Elem upper, Elem lower) const { return slot_[upper * size() + lower]; }
    [[nodiscard]] std::size_t slot_count() const noexcept { return slot_count_; }

private:
    std::vector<std::string> names_;
    std::vector<char> leq_;
    std::vector<std::vector<Elem>> down_;
    std::vector<std::vector<Elem>> up_;
    std::vector<std::vector<Elem>> covers_;
    std::vector<Elem> topo_;
    std::vector<std::size_t> slot_;
    std::size_t slot_count_ = 0;
    bool forest_ = true;
};

using PosetPtr = std::shared_ptr<const FinPoset>;

// Stage sets are {0, ..., size(e) - 1}; restriction maps are stored for every
// comparable pair and default to the identity on the diagonal.
class FinPresheaf {
public:
    FinPresheaf(PosetPtr base, std::vector<std::size_t> sizes);

    [[nodiscard]] const FinPoset& base() const noexcept { return *base_; }
    [[nodiscard]] const PosetPtr& base_ptr() const noexcept { return base_; }
    [[nodiscard]] std::size_t size(Elem e) const { return sizes_.at(e); }
    [[nodiscard]] const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    [[nodiscard]] std::size_t total_size() const;

    [[nodiscard]] std::size_t res(Elem upper, Elem lower, std::size_t x) const
    {
        return data_[offset_[base_->slot(upper, lower)] + x];
    }
    void set_res(Elem upper, Elem lower, std::size_t x, std::size_t y);
    void set_res(Elem upper, Elem lower, const std::vector<std::size_t>& map);

    void set_element_names(Elem e, std::vector<std::string> names);
    [[nodiscard]] std::string element_name(Elem e, std::size_t x) const;

private:
    PosetPtr base_;
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offset_;
    std::vector<std::size_t> data_;
    std::vector<std::vector<std::string>> element_names_;
};

using PresheafPtr = std::shared_ptr<const FinPresheaf>;

struct RestrictionViolation {
    Elem lowest = 0;
    Elem middle = 0;
    Elem highest = 0;
    std::size_t element = 0;
};

struct PresheafCheck {
    bool valid = true;
    std::optional<RestrictionViolation> violation;
    std::string message;
};

[[nodiscard]] PresheafCheck validate(const FinPresheaf& presheaf);

class NatTrans {
public:
    NatTrans(PresheafPtr source, PresheafPtr target);

    [[nodiscard]] const FinPresheaf& source() const noexcept { return *source_; }
    [[nodiscard]] const FinPresheaf& target() const noexcept { return *target_; }
    [[nodiscard]] const PresheafPtr& source_ptr() const noexcept { return source_; }
    [[nodiscard]] const PresheafPtr& target_ptr() const noexcept { return target_; }

    [[nodiscard]] std::size_t at(Elem e, std::size_t x) const { return data_[offset_[e] + x]; }
    void set(Elem e, std::size_t x, std::size_t y) { data_[offset_[e] + x] = y; }

    [[nodiscard]] bool operator==(const NatTrans& other) const;

private:
    PresheafPtr source_;
    PresheafPtr target_;
    std::vector<std::size_t> offset_;
    std::vector<std::size_t> data_;
};

[[nodiscard]] NatTrans identity_transformation(const PresheafPtr& presheaf);
[[nodiscard]] NatTrans compose(const NatTrans& second, const NatTrans& first);
// Values in range and every naturality square commutes.
[[nodiscard]] bool is_natural(const NatTrans& t);
[[nodiscard]] bool is_mono(const NatTrans& t);
[[nodiscard]] bool is_stagewise_surjective(const NatTrans& t);

struct MonotoneMap {
    PosetPtr source;
    PosetPtr target;
    std::vector<Elem> map;
};

[[nodiscard]] bool is_monotone(const MonotoneMap& h);

// A commuting square over f: g is mono P -> Q, m: P -> F, n: Q -> G, f: F -> G.
struct Square {
    std::string family;
    std::string description;
    // The stage Q is generated from, when Q is representable.
    std::optional<Elem> stage;
    NatTrans g;
    NatTrans m;
    NatTrans n;
    NatTrans f;
};

// Some k: Q -> F with k.g = m and f.k = n. Exhaustive; over forest bases
// the search is a tree-structured consistency pass, elsewhere backtracking
// in topological order.
[[nodiscard]] std::optional<NatTrans> find_filler(const Square& square);

struct MonoBounds {
    std::size_t stage_bound = 2;
    std::size_t support_bound = 6;
};

enum class SquareFamily { empty, extension, retract, bounded };

[[nodiscard]] std::string to_string(SquareFamily family);

// Visits squares over f until `visit` returns false. Families:
//   empty     - the empty presheaf into a representable, one per element of G;
//   extension - representable inclusions y(d) -> y(e), d covering e below, for
//               every compatible pair of elements (all d < e off forests);
//   retract   - the empty presheaf into G with n the identity;
//   bounded   - Q generated inside G by at most stage_bound elements with at
//               most stage_bound elements per stage and support_bound nonempty
//               stages; every sub-presheaf P and every admissible m.
void enumerate_mono_squares(const NatTrans& f, const MonoBounds& bounds,
                            const std::vector<SquareFamily>& families,
                            const std::function<bool(const Square&)>& visit);

struct BisimMapVerdict {
    bool holds = true;
    std::optional<Square> counterexample;
    std::size_t squares_checked = 0;
    // Over forest bases the bounded family is implied by the empty and
    // extension families and is not run.
    bool bounded_family_run = false;
};

[[nodiscard]] BisimMapVerdict is_bisim_map_bounded(const NatTrans& f, const MonoBounds& bounds);

struct ColimitClass {
    Elem index = 0;
    std::size_t representative = 0;
    std::vector<std::pair<Elem, std::size_t>> members;
};

// Quotient of the disjoint union of the stages at `index` by agreement after
// restriction to a common lower element of `index`. The representative is
// the member at a minimal index of the class's support. The index must be
// closed under meets of pairs that share a lower bound in it.
[[nodiscard]] std::vector<ColimitClass> filtered_colimit(const FinPresheaf& presheaf, const std::vector<Elem>& index);

struct KanExtension {
    std::shared_ptr<FinPresheaf> presheaf;
    // Per target element, the representative (source element, element) of
    // every class.
    std::vector<std::vector<std::pair<Elem, std::size_t>>> representatives;
};

// Left Kan extension along h: the stage at r is the colimit over the
// elements s with r <= h(s), and the action sends a class to the class of
// any of its members.
[[nodiscard]] KanExtension left_kan(const MonotoneMap& h, const FinPresheaf& presheaf);
// Same stages, computed by splitting each index into the up-sets of its
// minimal elements and taking one filtered colimit per component.
[[nodiscard]] KanExtension left_kan_by_components(const MonotoneMap& h, const FinPresheaf& presheaf);

struct ElementsPoset {
    std::shared_ptr<FinPoset> poset;
    std::vector<std::pair<Elem, std::size_t>> points;
};

// Category of elements: (e, x) <= (e2, x2) iff e <= e2 and x2 restricts to
// x. With `simplify`, element names are used alone when they are unique.
[[nodiscard]] ElementsPoset elements_poset(const FinPresheaf& presheaf, bool simplify);

// `stage <e>: {x, ...}` per element and `res <e1> -> <e2>: x |-> y` per
// strict comparable pair and element, in lexicographic order.
[[nodiscard]] std::string dump(const FinPresheaf& presheaf);

} // namespace bisim
