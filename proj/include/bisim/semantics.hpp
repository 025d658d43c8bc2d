#pragma once

#include "bisim/lts.hpp"
#include "bisim/presheaf.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace bisim {

// A point of one of the observation posets: a finite word, a stretched
// silent observation (n, tau-bar) with n >= 1, the plain tau-bar, or an
// ultimately periodic infinite word.
struct Point {
    enum class Kind { word, stretch, silent_bar, infinite };

    Kind kind = Kind::word;
    Word word;
    std::size_t stretch = 0;
    PeriodicWord infinite;

    static Point finite(Word w) { return Point{Kind::word, std::move(w), 0, {}}; }
    static Point stretched(std::size_t n) { return Point{Kind::stretch, {}, n, {}}; }
    static Point bar() { return Point{Kind::silent_bar, {}, 0, {}}; }
    static Point omega(PeriodicWord w) { return Point{Kind::infinite, {}, 0, canonical(w)}; }

    friend auto operator<=>(const Point&, const Point&) = default;
};

[[nodiscard]] std::string to_string(const Point& point);

// Deletes silent letters.
[[nodiscard]] Word hide(const Word& word);
// Words are hidden letterwise; every (n, tau-bar) goes to tau-bar.
[[nodiscard]] Point hide(const Point& point);

class PointSet {
public:
    // `depth` bounds the length of the executions placed over the points.
    PointSet(std::vector<Point> points, const std::vector<std::pair<Elem, Elem>>& order, std::size_t depth);

    [[nodiscard]] const PosetPtr& poset() const noexcept { return poset_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] const Point& point(Elem e) const { return points_.at(e); }
    [[nodiscard]] const std::vector<Point>& points() const noexcept { return points_; }
    [[nodiscard]] std::optional<Elem> find(const Point& point) const;
    [[nodiscard]] Elem at(const Point& point) const;
    [[nodiscard]] std::size_t depth() const noexcept { return depth_; }

private:
    std::vector<Point> points_;
    std::size_t depth_ = 0;
    std::map<Point, Elem> index_;
    PosetPtr poset_;
};

using PointSetPtr = std::shared_ptr<const PointSet>;

// Finite words up to `depth` under prefix order.
[[nodiscard]] PointSetPtr word_points(const std::set<Label>& letters, std::size_t depth);
// Words over visible letters and silent letters up to `depth`, plus
// (n, tau-bar) for 1 <= n <= depth above the empty word.
[[nodiscard]] PointSetPtr stretched_points(const std::set<Label>& letters, std::size_t depth);
// Visible words up to `depth` plus tau-bar above the empty word.
[[nodiscard]] PointSetPtr barred_points(const std::set<Label>& letters, std::size_t depth);
// Visible words up to `depth`, the prefixes up to `prefix_length` of every
// infinite word, and the infinite words themselves.
[[nodiscard]] PointSetPtr infinite_points(const std::set<Label>& letters, std::size_t depth,
                                          const std::set<PeriodicWord>& infinite, std::size_t prefix_length);

// The hiding map between two point sets; every hidden point must exist in
// the target.
[[nodiscard]] MonotoneMap hiding_map(const PointSetPtr& from, const PointSetPtr& to);

using SemElement = std::variant<Execution, Lasso>;

[[nodiscard]] std::string to_string(const SemElement& element, const Lts& lts);

// A presheaf whose stage elements are concrete executions or lassos.
struct SemPresheaf {
    PointSetPtr points;
    std::shared_ptr<FinPresheaf> presheaf;
    std::vector<std::vector<SemElement>> elements;

    [[nodiscard]] const std::vector<SemElement>& stage(const Point& point) const;
    [[nodiscard]] std::optional<std::size_t> find(Elem e, const SemElement& element) const;
};

struct SemMap {
    SemPresheaf source;
    SemPresheaf target;
    NatTrans map;
};

// Executions of a system without silent steps, one stage per word.
[[nodiscard]] SemPresheaf strong_sem(const Lts& lts, std::size_t depth);
[[nodiscard]] SemPresheaf strong_sem(const Lts& lts, const PointSetPtr& points);
// Both systems over the union of their alphabets; f must be a simulation.
[[nodiscard]] SemMap strong_sem_map(const StateMap& f, const Lts& source, const Lts& target, std::size_t depth);

struct FairBounds {
    std::size_t depth = 4;
    std::size_t stem_bound = 4;
    std::size_t cycle_bound = 4;

    // Finite prefixes of infinite words are kept up to this length, long
    // enough that a lasso within the bounds is determined by its prefix.
    [[nodiscard]] std::size_t prefix_length() const { return std::max(depth, stem_bound + 2 * cycle_bound); }
};

// Finite stages as in strong_sem; one stage per infinite trace of a fair
// lasso within the bounds, holding those fair lassos.
[[nodiscard]] SemPresheaf fair_sem(const FairLts& system, const FairBounds& bounds);
// Shared base from the fair lassos of both systems; f must be a fair
// simulation on the enumerated lassos.
[[nodiscard]] SemMap fair_sem_map(const StateMap& f, const FairLts& source, const FairLts& target,
                                  const FairBounds& bounds);

// Executions over words with silent letters; with `barred`, every
// (n, tau-bar) stage holds all executions whose trace is silent.
[[nodiscard]] SemPresheaf base_presheaf(const Lts& lts, std::size_t depth, bool barred);
[[nodiscard]] SemPresheaf base_presheaf(const Lts& lts, const PointSetPtr& points);

// True when the trace is empty or ends in a visible letter.
[[nodiscard]] bool is_minimal(const Execution& p);
[[nodiscard]] std::vector<Execution> minimal_executions(const Lts& lts, const Word& observed, std::size_t depth);
// Restriction to the shortest prefix whose visible trace is `observed`.
[[nodiscard]] Execution mpast(const Execution& p, const Word& observed);

// Minimal executions at every visible word; the tau-bar stage holds the
// executions with silent traces and restricts to their start.
[[nodiscard]] SemPresheaf branching_sem(const Lts& lts, std::size_t depth);
[[nodiscard]] SemPresheaf branching_sem(const Lts& lts, const PointSetPtr& points);
// Minimal executions over visible words only.
[[nodiscard]] SemPresheaf branching_failed_sem(const Lts& lts, std::size_t depth);
[[nodiscard]] SemMap branching_sem_map(const StateMap& f, const Lts& source, const Lts& target, std::size_t depth,
                                       bool barred);

// The image of an execution under a branching simulation.
[[nodiscard]] Execution map_pf(const StateMap& f, const Lts& target, const Execution& p);

// Over the time points 0..depth: stage n holds the words of length n over
// `letters` (silent letter included when `with_tau`), plus tau-bar for n > 0
// when `barred`.
// Element names are the words themselves and "tau_bar".
[[nodiscard]] std::shared_ptr<FinPresheaf> observation_presheaf(const std::set<Label>& letters, std::size_t depth,
                                                                bool with_tau, bool barred);
[[nodiscard]] PosetPtr time_poset(std::size_t depth);

} // namespace bisim
