#include "bisim/presheaf.hpp"

#include "bisim/errors.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace bisim {

FinPoset::FinPoset(std::vector<std::string> names, const std::vector<std::pair<Elem, Elem>>& order_pairs)
    : names_{std::move(names)}
{
    const std::size_t n = names_.size();
    std::vector<std::vector<Elem>> above(n);
    for (const auto& [lo, hi] : order_pairs) {
        if (lo >= n || hi >= n)
            throw precondition_error("order pair outside the poset");
        if (lo != hi)
            above[lo].push_back(hi);
    }
    leq_.assign(n * n, 0);
    for (Elem e = 0; e < n; ++e) {
        std::vector<Elem> stack{e};
        leq_[e * n + e] = 1;
        while (!stack.empty()) {
            Elem v = stack.back();
            stack.pop_back();
            for (Elem w : above[v]) {
                if (!leq_[e * n + w]) {
                    leq_[e * n + w] = 1;
                    stack.push_back(w);
                }
            }
        }
    }
    for (Elem a = 0; a < n; ++a)
        for (Elem b = a + 1; b < n; ++b)
            if (leq(a, b) && leq(b, a))
                throw precondition_error("order relation is not antisymmetric");

    down_.resize(n);
    up_.resize(n);
    std::vector<std::size_t> down_count(n, 0);
    for (Elem a = 0; a < n; ++a)
        for (Elem b = 0; b < n; ++b)
            if (leq(a, b))
                ++down_count[b];
    topo_.resize(n);
    std::iota(topo_.begin(), topo_.end(), Elem{0});
    std::stable_sort(topo_.begin(), topo_.end(),
                     [&](Elem a, Elem b) { return down_count[a] < down_count[b]; });
    for (Elem e : topo_) {
        for (Elem d : topo_) {
            if (leq(d, e))
                down_[e].push_back(d);
            if (leq(e, d))
                up_[e].push_back(d);
        }
    }
    covers_.resize(n);
    for (Elem e = 0; e < n; ++e) {
        for (Elem d : down_[e]) {
            if (d == e)
                continue;
            bool immediate = true;
            for (Elem c : down_[e])
                if (c != e && c != d && leq(d, c))
                    immediate = false;
            if (immediate)
                covers_[e].push_back(d);
        }
        if (covers_[e].size() > 1)
            forest_ = false;
    }
    slot_.assign(n * n, npos);
    for (Elem hi = 0; hi < n; ++hi)
        for (Elem lo : down_[hi])
            slot_[hi * n + lo] = slot_count_++;
}

std::optional<Elem> FinPoset::find(const std::string& name) const
{
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end())
        return std::nullopt;
    return static_cast<Elem>(it - names_.begin());
}

std::optional<Elem> FinPoset::meet(Elem a, Elem b) const
{
    std::vector<Elem> lower;
    for (Elem c : down_.at(a))
        if (leq(c, b))
            lower.push_back(c);
    for (Elem m : lower)
        if (std::all_of(lower.begin(), lower.end(), [&](Elem c) { return leq(c, m); }))
            return m;
    return std::nullopt;
}

FinPresheaf::FinPresheaf(PosetPtr base, std::vector<std::size_t> sizes)
    : base_{std::move(base)}, sizes_{std::move(sizes)}
{
    if (!base_ || sizes_.size() != base_->size())
        throw precondition_error("presheaf stage sizes do not match its base");
    offset_.assign(base_->slot_count() + 1, 0);
    std::size_t total = 0;
    for (Elem hi = 0; hi < base_->size(); ++hi) {
        for (Elem lo : base_->down(hi)) {
            offset_[base_->slot(hi, lo)] = total;
            total += sizes_[hi];
        }
    }
    data_.assign(total, FinPoset::npos);
    for (Elem e = 0; e < base_->size(); ++e)
        for (std::size_t x = 0; x < sizes_[e]; ++x)
            data_[offset_[base_->slot(e, e)] + x] = x;
    element_names_.resize(base_->size());
}

std::size_t FinPresheaf::total_size() const
{
    return std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{0});
}

void FinPresheaf::set_res(Elem upper, Elem lower, std::size_t x, std::size_t y)
{
    const auto s = base_->slot(upper, lower);
    if (s == FinPoset::npos)
        throw precondition_error("restriction between incomparable elements");
    if (x >= sizes_.at(upper))
        throw precondition_error("restriction of an element outside its stage");
    data_[offset_[s] + x] = y;
}

void FinPresheaf::set_res(Elem upper, Elem lower, const std::vector<std::size_t>& map)
{
    if (map.size() != sizes_.at(upper))
        throw precondition_error("restriction map has the wrong size");
    for (std::size_t x = 0; x < map.size(); ++x)
        set_res(upper, lower, x, map[x]);
}

void FinPresheaf::set_element_names(Elem e, std::vector<std::string> names)
{
    if (names.size() != sizes_.at(e))
        throw precondition_error("element names do not match the stage size");
    element_names_[e] = std::move(names);
}

std::string FinPresheaf::element_name(Elem e, std::size_t x) const
{
    const auto& names = element_names_.at(e);
    if (x < names.size())
        return names[x];
    return "#" + std::to_string(x);
}

PresheafCheck validate(const FinPresheaf& presheaf)
{
    const auto& base = presheaf.base();
    auto fail = [](Elem lo, Elem mid, Elem hi, std::size_t x, std::string why) {
        return PresheafCheck{false, RestrictionViolation{lo, mid, hi, x}, std::move(why)};
    };
    for (Elem hi = 0; hi < base.size(); ++hi) {
        for (std::size_t x = 0; x < presheaf.size(hi); ++x) {
            if (presheaf.res(hi, hi, x) != x)
                return fail(hi, hi, hi, x, "restriction to the same element is not the identity");
            for (Elem lo : base.down(hi))
                if (presheaf.res(hi, lo, x) >= presheaf.size(lo))
                    return fail(lo, lo, hi, x, "restriction leaves the lower stage");
        }
    }
    for (Elem hi = 0; hi < base.size(); ++hi) {
        for (Elem mid : base.down(hi)) {
            for (Elem lo : base.down(mid)) {
                for (std::size_t x = 0; x < presheaf.size(hi); ++x) {
                    const auto two_steps = presheaf.res(mid, lo, presheaf.res(hi, mid, x));
                    if (two_steps != presheaf.res(hi, lo, x))
                        return fail(lo, mid, hi, x, "restrictions do not compose");
                }
            }
        }
    }
    return PresheafCheck{};
}

namespace {

bool same_base(const FinPresheaf& a, const FinPresheaf& b)
{
    if (a.base_ptr() == b.base_ptr())
        return true;
    const auto& p = a.base();
    const auto& q = b.base();
    if (p.size() != q.size() || p.names() != q.names())
        return false;
    for (Elem x = 0; x < p.size(); ++x)
        for (Elem y = 0; y < p.size(); ++y)
            if (p.leq(x, y) != q.leq(x, y))
                return false;
    return true;
}

} // namespace

NatTrans::NatTrans(PresheafPtr source, PresheafPtr target) : source_{std::move(source)}, target_{std::move(target)}
{
    if (!source_ || !target_ || !same_base(*source_, *target_))
        throw precondition_error("natural transformation between presheaves over different bases");
    offset_.resize(source_->base().size() + 1, 0);
    for (Elem e = 0; e < source_->base().size(); ++e)
        offset_[e + 1] = offset_[e] + source_->size(e);
    data_.assign(offset_.back(), 0);
}

bool NatTrans::operator==(const NatTrans& other) const
{
    return source_ == other.source_ && target_ == other.target_ && data_ == other.data_;
}

NatTrans identity_transformation(const PresheafPtr& presheaf)
{
    NatTrans t{presheaf, presheaf};
    for (Elem e = 0; e < presheaf->base().size(); ++e)
        for (std::size_t x = 0; x < presheaf->size(e); ++x)
            t.set(e, x, x);
    return t;
}

NatTrans compose(const NatTrans& second, const NatTrans& first)
{
    if (first.target_ptr() != second.source_ptr())
        throw precondition_error("composing natural transformations that do not meet");
    NatTrans t{first.source_ptr(), second.target_ptr()};
    for (Elem e = 0; e < first.source().base().size(); ++e)
        for (std::size_t x = 0; x < first.source().size(e); ++x)
            t.set(e, x, second.at(e, first.at(e, x)));
    return t;
}

bool is_natural(const NatTrans& t)
{
    const auto& base = t.source().base();
    for (Elem e = 0; e < base.size(); ++e)
        for (std::size_t x = 0; x < t.source().size(e); ++x)
            if (t.at(e, x) >= t.target().size(e))
                return false;
    for (Elem hi = 0; hi < base.size(); ++hi)
        for (Elem lo : base.down(hi))
            for (std::size_t x = 0; x < t.source().size(hi); ++x)
                if (t.at(lo, t.source().res(hi, lo, x)) != t.target().res(hi, lo, t.at(hi, x)))
                    return false;
    return true;
}

bool is_mono(const NatTrans& t)
{
    for (Elem e = 0; e < t.source().base().size(); ++e) {
        std::vector<char> hit(t.target().size(e), 0);
        for (std::size_t x = 0; x < t.source().size(e); ++x) {
            auto y = t.at(e, x);
            if (hit[y])
                return false;
            hit[y] = 1;
        }
    }
    return true;
}

bool is_stagewise_surjective(const NatTrans& t)
{
    for (Elem e = 0; e < t.source().base().size(); ++e) {
        std::vector<char> hit(t.target().size(e), 0);
        for (std::size_t x = 0; x < t.source().size(e); ++x)
            hit[t.at(e, x)] = 1;
        if (std::find(hit.begin(), hit.end(), 0) != hit.end())
            return false;
    }
    return true;
}

bool is_monotone(const MonotoneMap& h)
{
    if (!h.source || !h.target || h.map.size() != h.source->size())
        return false;
    for (Elem e : h.map)
        if (e >= h.target->size())
            return false;
    for (Elem a = 0; a < h.source->size(); ++a)
        for (Elem b : h.source->up(a))
            if (!h.target->leq(h.map[a], h.map[b]))
                return false;
    return true;
}

namespace {

struct Candidates {
    std::vector<std::vector<std::vector<std::size_t>>> values; // [stage][q] -> allowed x
};

Candidates filler_domains(const Square& sq)
{
    const auto& Q = sq.n.source();
    const auto& F = sq.f.source();
    const auto& base = Q.base();
    std::vector<std::vector<std::optional<std::size_t>>> fixed(base.size());
    for (Elem e = 0; e < base.size(); ++e) {
        fixed[e].resize(Q.size(e));
        for (std::size_t p = 0; p < sq.g.source().size(e); ++p)
            fixed[e][sq.g.at(e, p)] = sq.m.at(e, p);
    }
    Candidates c;
    c.values.resize(base.size());
    for (Elem e = 0; e < base.size(); ++e) {
        c.values[e].resize(Q.size(e));
        for (std::size_t q = 0; q < Q.size(e); ++q) {
            const auto wanted = sq.n.at(e, q);
            if (fixed[e][q]) {
                if (sq.f.at(e, *fixed[e][q]) == wanted)
                    c.values[e][q].push_back(*fixed[e][q]);
                continue;
            }
            for (std::size_t x = 0; x < F.size(e); ++x)
                if (sq.f.at(e, x) == wanted)
                    c.values[e][q].push_back(x);
        }
    }
    return c;
}

std::optional<NatTrans> forest_filler(const Square& sq, Candidates dom)
{
    const auto& Q = sq.n.source();
    const auto& F = sq.f.source();
    const auto& base = Q.base();
    const auto& topo = base.topological();
    // Prune bottom-up: a value survives when every element of Q above it
    // (through one cover) still has a surviving value restricting to it.
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        const Elem e = *it;
        if (base.covers_below(e).empty())
            continue;
        const Elem c = base.covers_below(e).front();
        std::vector<std::vector<char>> reachable(Q.size(c), std::vector<char>(F.size(c), 0));
        std::vector<char> constrained(Q.size(c), 0);
        for (std::size_t q = 0; q < Q.size(e); ++q) {
            const auto below = Q.res(e, c, q);
            std::vector<char> here(F.size(c), 0);
            for (auto x : dom.values[e][q])
                here[F.res(e, c, x)] = 1;
            if (!constrained[below]) {
                reachable[below] = here;
                constrained[below] = 1;
            } else {
                for (std::size_t y = 0; y < here.size(); ++y)
                    reachable[below][y] = reachable[below][y] && here[y];
            }
        }
        for (std::size_t q = 0; q < Q.size(c); ++q) {
            if (!constrained[q])
                continue;
            auto& values = dom.values[c][q];
            values.erase(std::remove_if(values.begin(), values.end(),
                                        [&](std::size_t x) { return !reachable[q][x]; }),
                         values.end());
        }
    }
    NatTrans k{sq.n.source_ptr(), sq.f.source_ptr()};
    for (Elem e : topo) {
        for (std::size_t q = 0; q < Q.size(e); ++q) {
            const auto& values = dom.values[e][q];
            std::optional<std::size_t> chosen;
            if (base.covers_below(e).empty()) {
                if (!values.empty())
                    chosen = values.front();
            } else {
                const Elem c = base.covers_below(e).front();
                const auto target = k.at(c, Q.res(e, c, q));
                for (auto x : values) {
                    if (F.res(e, c, x) == target) {
                        chosen = x;
                        break;
                    }
                }
            }
            if (!chosen)
                return std::nullopt;
            k.set(e, q, *chosen);
        }
    }
    return k;
}

std::optional<NatTrans> backtracking_filler(const Square& sq, const Candidates& dom)
{
    const auto& Q = sq.n.source();
    const auto& F = sq.f.source();
    const auto& base = Q.base();
    std::vector<std::pair<Elem, std::size_t>> order;
    for (Elem e : base.topological())
        for (std::size_t q = 0; q < Q.size(e); ++q)
            order.emplace_back(e, q);
    NatTrans k{sq.n.source_ptr(), sq.f.source_ptr()};
    std::function<bool(std::size_t)> assign = [&](std::size_t i) {
        if (i == order.size())
            return true;
        const auto [e, q] = order[i];
        for (auto x : dom.values[e][q]) {
            bool consistent = true;
            for (Elem d : base.down(e)) {
                if (d != e && F.res(e, d, x) != k.at(d, Q.res(e, d, q))) {
                    consistent = false;
                    break;
                }
            }
            if (!consistent)
                continue;
            k.set(e, q, x);
            if (assign(i + 1))
                return true;
        }
        return false;
    };
    if (!assign(0))
        return std::nullopt;
    return k;
}

void require_square(const Square& sq)
{
    if (sq.g.source_ptr() != sq.m.source_ptr() || sq.g.target_ptr() != sq.n.source_ptr() ||
        sq.m.target_ptr() != sq.f.source_ptr() || sq.n.target_ptr() != sq.f.target_ptr())
        throw precondition_error("square maps do not line up");
    if (!is_mono(sq.g))
        throw precondition_error("the left side of the square is not a mono");
    const auto& P = sq.g.source();
    for (Elem e = 0; e < P.base().size(); ++e)
        for (std::size_t p = 0; p < P.size(e); ++p)
            if (sq.f.at(e, sq.m.at(e, p)) != sq.n.at(e, sq.g.at(e, p)))
                throw precondition_error("square does not commute");
}

} // namespace

std::optional<NatTrans> find_filler(const Square& square)
{
    require_square(square);
    auto dom = filler_domains(square);
    auto k = square.n.source().base().is_forest() ? forest_filler(square, std::move(dom))
                                                  : backtracking_filler(square, dom);
    if (!k)
        return std::nullopt;
    if (!is_natural(*k) || !(compose(*k, square.g) == square.m) || !(compose(square.f, *k) == square.n))
        throw internal_error("filler search produced a map that fails the square");
    return k;
}

std::string to_string(SquareFamily family)
{
    switch (family) {
    case SquareFamily::empty: return "empty";
    case SquareFamily::extension: return "extension";
    case SquareFamily::retract: return "retract";
    case SquareFamily::bounded: return "bounded";
    }
    return "unknown";
}

namespace {

PresheafPtr representable(const PosetPtr& base, Elem e)
{
    std::vector<std::size_t> sizes(base->size(), 0);
    for (Elem d : base->down(e))
        sizes[d] = 1;
    auto y = std::make_shared<FinPresheaf>(base, sizes);
    for (Elem hi : base->down(e))
        for (Elem lo : base->down(hi))
            y->set_res(hi, lo, 0, 0);
    return y;
}

PresheafPtr empty_presheaf(const PosetPtr& base)
{
    return std::make_shared<FinPresheaf>(base, std::vector<std::size_t>(base->size(), 0));
}

// The map y(e) -> F picking x in F(e).
NatTrans element_map(const PresheafPtr& rep, Elem e, const PresheafPtr& target, std::size_t x)
{
    NatTrans t{rep, target};
    for (Elem d : rep->base().down(e))
        t.set(d, 0, target->res(e, d, x));
    return t;
}

NatTrans zero_map(const PresheafPtr& source, const PresheafPtr& target)
{
    return NatTrans{source, target};
}

class SquareStream {
public:
    SquareStream(const NatTrans& f, const MonoBounds& bounds, const std::function<bool(const Square&)>& visit)
        : f_{f}, bounds_{bounds}, visit_{visit}, base_{f.source().base_ptr()}
    {
    }

    bool empty_family()
    {
        const auto& G = f_.target();
        auto none = empty_presheaf(base_);
        for (Elem e : base_->topological()) {
            if (G.size(e) == 0)
                continue;
            auto y = representable(base_, e);
            for (std::size_t q = 0; q < G.size(e); ++q) {
                Square sq{"empty",
                          "no element of the source maps to " + G.element_name(e, q) + " at " + base_->name(e), e,
                          zero_map(none, y), zero_map(none, f_.source_ptr()),
                          element_map(y, e, f_.target_ptr(), q), f_};
                if (!visit_(sq))
                    return false;
            }
        }
        return true;
    }

    bool extension_family()
    {
        const auto& F = f_.source();
        const auto& G = f_.target();
        for (Elem e : base_->topological()) {
            if (G.size(e) == 0)
                continue;
            std::vector<Elem> lower;
            if (base_->is_forest())
                lower = base_->covers_below(e);
            else
                for (Elem d : base_->down(e))
                    if (d != e)
                        lower.push_back(d);
            if (lower.empty())
                continue;
            auto ye = representable(base_, e);
            for (Elem d : lower) {
                auto yd = representable(base_, d);
                NatTrans incl{yd, ye};
                for (std::size_t q = 0; q < G.size(e); ++q) {
                    const auto q_below = G.res(e, d, q);
                    for (std::size_t p = 0; p < F.size(d); ++p) {
                        if (f_.at(d, p) != q_below)
                            continue;
                        Square sq{"extension",
                                  "extend " + F.element_name(d, p) + " at " + base_->name(d) + " to an element over " +
                                      G.element_name(e, q) + " at " + base_->name(e),
                                  e, incl, element_map(yd, d, f_.source_ptr(), p),
                                  element_map(ye, e, f_.target_ptr(), q), f_};
                        if (!visit_(sq))
                            return false;
                    }
                }
            }
        }
        return true;
    }

    bool retract_family()
    {
        auto none = empty_presheaf(base_);
        Square sq{"retract", "section of the whole map", std::nullopt, zero_map(none, f_.target_ptr()),
                  zero_map(none, f_.source_ptr()), identity_transformation(f_.target_ptr()), f_};
        return visit_(sq);
    }

    bool bounded_family()
    {
        const auto& G = f_.target();
        std::vector<std::pair<Elem, std::size_t>> elements;
        for (Elem e : base_->topological())
            for (std::size_t q = 0; q < G.size(e); ++q)
                elements.emplace_back(e, q);
        std::set<std::set<std::pair<Elem, std::size_t>>> seen;
        std::vector<std::size_t> pick;
        std::function<bool(std::size_t)> choose = [&](std::size_t from) {
            if (!pick.empty()) {
                std::set<std::pair<Elem, std::size_t>> closure;
                for (auto i : pick) {
                    const auto [e, q] = elements[i];
                    for (Elem d : base_->down(e))
                        closure.emplace(d, G.res(e, d, q));
                }
                if (fits(closure) && seen.insert(closure).second && !squares_over(closure))
                    return false;
            }
            if (pick.size() == bounds_.stage_bound)
                return true;
            for (std::size_t i = from; i < elements.size(); ++i) {
                pick.push_back(i);
                if (!choose(i + 1))
                    return false;
                pick.pop_back();
            }
            return true;
        };
        return choose(0);
    }

private:
    bool fits(const std::set<std::pair<Elem, std::size_t>>& closure) const
    {
        std::map<Elem, std::size_t> per_stage;
        for (const auto& [e, q] : closure)
            ++per_stage[e];
        if (per_stage.size() > bounds_.support_bound)
            return false;
        return std::all_of(per_stage.begin(), per_stage.end(),
                           [&](const auto& kv) { return kv.second <= bounds_.stage_bound; });
    }

    // Sub-presheaf of `whole` on the chosen elements, with the inclusion.
    std::pair<PresheafPtr, NatTrans> sub_presheaf(const PresheafPtr& whole,
                                                  const std::set<std::pair<Elem, std::size_t>>& chosen) const
    {
        std::vector<std::size_t> sizes(base_->size(), 0);
        std::map<std::pair<Elem, std::size_t>, std::size_t> local;
        std::vector<std::vector<std::string>> names(base_->size());
        for (Elem e : base_->topological()) {
            for (std::size_t x = 0; x < whole->size(e); ++x) {
                if (!chosen.contains({e, x}))
                    continue;
                local[{e, x}] = sizes[e]++;
                names[e].push_back(whole->element_name(e, x));
            }
        }
        auto sub = std::make_shared<FinPresheaf>(base_, sizes);
        for (const auto& [ex, i] : local) {
            const auto [e, x] = ex;
            for (Elem d : base_->down(e))
                sub->set_res(e, d, i, local.at({d, whole->res(e, d, x)}));
        }
        for (Elem e = 0; e < base_->size(); ++e)
            sub->set_element_names(e, names[e]);
        NatTrans incl{sub, whole};
        for (const auto& [ex, i] : local)
            incl.set(ex.first, i, ex.second);
        return {sub, std::move(incl)};
    }

    bool squares_over(const std::set<std::pair<Elem, std::size_t>>& closure)
    {
        auto [Q, n] = sub_presheaf(f_.target_ptr(), closure);
        std::vector<std::pair<Elem, std::size_t>> q_elems;
        for (Elem e : base_->topological())
            for (std::size_t q = 0; q < Q->size(e); ++q)
                q_elems.emplace_back(e, q);
        const std::size_t count = q_elems.size();
        for (std::size_t mask = 0; mask + 1 < (std::size_t{1} << count); ++mask) {
            std::set<std::pair<Elem, std::size_t>> chosen;
            for (std::size_t i = 0; i < count; ++i)
                if (mask & (std::size_t{1} << i))
                    chosen.insert(q_elems[i]);
            bool down_closed = true;
            for (const auto& [e, q] : chosen)
                for (Elem d : base_->down(e))
                    down_closed = down_closed && chosen.contains({d, Q->res(e, d, q)});
            if (!down_closed)
                continue;
            auto [P, g] = sub_presheaf(Q, chosen);
            if (!sections(P, g, Q, n))
                return false;
        }
        return true;
    }

    bool sections(const PresheafPtr& P, const NatTrans& g, const PresheafPtr& Q, const NatTrans& n)
    {
        const auto& F = f_.source();
        std::vector<std::pair<Elem, std::size_t>> order;
        for (Elem e : base_->topological())
            for (std::size_t p = 0; p < P->size(e); ++p)
                order.emplace_back(e, p);
        NatTrans m{P, f_.source_ptr()};
        std::function<bool(std::size_t)> assign = [&](std::size_t i) {
            if (i == order.size()) {
                std::string desc = "sub-presheaf with " + std::to_string(Q->total_size()) + " elements, " +
                                   std::to_string(P->total_size()) + " fixed";
                return visit_(Square{"bounded", desc, std::nullopt, g, m, n, f_});
            }
            const auto [e, p] = order[i];
            const auto wanted = n.at(e, g.at(e, p));
            for (std::size_t x = 0; x < F.size(e); ++x) {
                if (f_.at(e, x) != wanted)
                    continue;
                bool consistent = true;
                for (Elem d : base_->down(e))
                    if (d != e && F.res(e, d, x) != m.at(d, P->res(e, d, p)))
                        consistent = false;
                if (!consistent)
                    continue;
                m.set(e, p, x);
                if (!assign(i + 1))
                    return false;
            }
            return true;
        };
        return assign(0);
    }

    const NatTrans& f_;
    MonoBounds bounds_;
    const std::function<bool(const Square&)>& visit_;
    PosetPtr base_;
};

} // namespace

void enumerate_mono_squares(const NatTrans& f, const MonoBounds& bounds, const std::vector<SquareFamily>& families,
                            const std::function<bool(const Square&)>& visit)
{
    if (bounds.stage_bound == 0 || bounds.support_bound == 0)
        throw precondition_error("square bounds must be at least 1");
    SquareStream stream{f, bounds, visit};
    for (auto family : families) {
        bool go_on = true;
        switch (family) {
        case SquareFamily::empty: go_on = stream.empty_family(); break;
        case SquareFamily::extension: go_on = stream.extension_family(); break;
        case SquareFamily::retract: go_on = stream.retract_family(); break;
        case SquareFamily::bounded: go_on = stream.bounded_family(); break;
        }
        if (!go_on)
            return;
    }
}

BisimMapVerdict is_bisim_map_bounded(const NatTrans& f, const MonoBounds& bounds)
{
    if (!is_natural(f))
        throw precondition_error("map is not a natural transformation");
    BisimMapVerdict verdict;
    std::vector<SquareFamily> families{SquareFamily::empty, SquareFamily::extension, SquareFamily::retract};
    if (!f.source().base().is_forest()) {
        families.push_back(SquareFamily::bounded);
        verdict.bounded_family_run = true;
    }
    enumerate_mono_squares(f, bounds, families, [&](const Square& sq) {
        ++verdict.squares_checked;
        if (find_filler(sq))
            return true;
        verdict.holds = false;
        verdict.counterexample = sq;
        return false;
    });
    return verdict;
}

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b)
            parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

void require_meet_closed(const FinPoset& base, const std::vector<char>& in_index)
{
    for (Elem a = 0; a < base.size(); ++a) {
        if (!in_index[a])
            continue;
        for (Elem b = a + 1; b < base.size(); ++b) {
            if (!in_index[b])
                continue;
            bool shared = false;
            for (Elem c : base.down(a))
                shared = shared || (in_index[c] && base.leq(c, b));
            if (!shared)
                continue;
            auto m = base.meet(a, b);
            if (!m || !in_index[*m])
                throw precondition_error("colimit index is not closed under meets");
        }
    }
}

} // namespace

std::vector<ColimitClass> filtered_colimit(const FinPresheaf& presheaf, const std::vector<Elem>& index)
{
    const auto& base = presheaf.base();
    std::vector<char> in_index(base.size(), 0);
    for (Elem e : index)
        in_index.at(e) = 1;
    require_meet_closed(base, in_index);

    std::vector<std::size_t> offset(base.size() + 1, 0);
    for (Elem e = 0; e < base.size(); ++e)
        offset[e + 1] = offset[e] + (in_index[e] ? presheaf.size(e) : 0);
    UnionFind uf{offset.back()};
    for (Elem e = 0; e < base.size(); ++e) {
        if (!in_index[e])
            continue;
        for (std::size_t x = 0; x < presheaf.size(e); ++x)
            for (Elem d : base.down(e))
                if (in_index[d])
                    uf.unite(offset[e] + x, offset[d] + presheaf.res(e, d, x));
    }
    std::vector<std::size_t> position(base.size(), 0);
    for (std::size_t i = 0; i < base.topological().size(); ++i)
        position[base.topological()[i]] = i;

    std::map<std::size_t, ColimitClass> by_root;
    for (Elem e : base.topological()) {
        if (!in_index[e])
            continue;
        for (std::size_t x = 0; x < presheaf.size(e); ++x) {
            const auto root = uf.find(offset[e] + x);
            auto [it, inserted] = by_root.try_emplace(root);
            if (inserted) {
                it->second.index = e;
                it->second.representative = x;
            }
            it->second.members.emplace_back(e, x);
        }
    }
    std::vector<ColimitClass> out;
    for (auto& [root, cls] : by_root)
        out.push_back(std::move(cls));
    std::sort(out.begin(), out.end(), [&](const ColimitClass& a, const ColimitClass& b) {
        return std::pair{position[a.index], a.representative} < std::pair{position[b.index], b.representative};
    });
    return out;
}

namespace {

using ClassLookup = std::map<std::pair<Elem, std::size_t>, std::size_t>;

KanExtension assemble_kan(const MonotoneMap& h, const FinPresheaf& presheaf,
                          const std::vector<std::vector<ColimitClass>>& stages)
{
    const auto& target = *h.target;
    std::vector<std::size_t> sizes;
    std::vector<ClassLookup> lookup(target.size());
    KanExtension out;
    out.representatives.resize(target.size());
    for (Elem r = 0; r < target.size(); ++r) {
        sizes.push_back(stages[r].size());
        for (std::size_t c = 0; c < stages[r].size(); ++c) {
            out.representatives[r].emplace_back(stages[r][c].index, stages[r][c].representative);
            for (const auto& member : stages[r][c].members)
                lookup[r][member] = c;
        }
    }
    out.presheaf = std::make_shared<FinPresheaf>(h.target, sizes);
    for (Elem r = 0; r < target.size(); ++r) {
        std::vector<std::string> names;
        for (const auto& [s, x] : out.representatives[r])
            names.push_back(presheaf.element_name(s, x));
        out.presheaf->set_element_names(r, names);
        for (Elem r2 : target.down(r))
            for (std::size_t c = 0; c < sizes[r]; ++c)
                out.presheaf->set_res(r, r2, c, lookup[r2].at(out.representatives[r][c]));
    }
    return out;
}

std::vector<Elem> kan_index(const MonotoneMap& h, Elem r)
{
    std::vector<Elem> index;
    for (Elem s : h.source->topological())
        if (h.target->leq(r, h.map[s]))
            index.push_back(s);
    return index;
}

void require_kan_input(const MonotoneMap& h, const FinPresheaf& presheaf)
{
    if (!is_monotone(h))
        throw precondition_error("Kan extension along a map that is not monotone");
    if (presheaf.base_ptr() != h.source && presheaf.base().names() != h.source->names())
        throw precondition_error("presheaf does not live over the source of the map");
}

} // namespace

KanExtension left_kan(const MonotoneMap& h, const FinPresheaf& presheaf)
{
    require_kan_input(h, presheaf);
    std::vector<std::vector<ColimitClass>> stages;
    for (Elem r = 0; r < h.target->size(); ++r)
        stages.push_back(filtered_colimit(presheaf, kan_index(h, r)));
    return assemble_kan(h, presheaf, stages);
}

KanExtension left_kan_by_components(const MonotoneMap& h, const FinPresheaf& presheaf)
{
    require_kan_input(h, presheaf);
    const auto& source = *h.source;
    std::vector<std::vector<ColimitClass>> stages;
    for (Elem r = 0; r < h.target->size(); ++r) {
        const auto index = kan_index(h, r);
        std::vector<char> in_index(source.size(), 0);
        for (Elem s : index)
            in_index[s] = 1;
        std::vector<ColimitClass> classes;
        for (Elem s : index) {
            bool minimal = true;
            for (Elem d : source.down(s))
                minimal = minimal && (d == s || !in_index[d]);
            if (!minimal)
                continue;
            std::vector<Elem> component;
            for (Elem u : source.up(s))
                if (in_index[u])
                    component.push_back(u);
            auto part = filtered_colimit(presheaf, component);
            classes.insert(classes.end(), part.begin(), part.end());
        }
        stages.push_back(std::move(classes));
    }
    return assemble_kan(h, presheaf, stages);
}

ElementsPoset elements_poset(const FinPresheaf& presheaf, bool simplify)
{
    const auto& base = presheaf.base();
    ElementsPoset out;
    std::map<std::pair<Elem, std::size_t>, Elem> index;
    for (Elem e : base.topological()) {
        for (std::size_t x = 0; x < presheaf.size(e); ++x) {
            index[{e, x}] = out.points.size();
            out.points.emplace_back(e, x);
        }
    }
    std::map<std::string, std::size_t> name_count;
    for (const auto& [e, x] : out.points)
        ++name_count[presheaf.element_name(e, x)];
    std::vector<std::string> names;
    for (const auto& [e, x] : out.points) {
        auto plain = presheaf.element_name(e, x);
        if (simplify && name_count[plain] == 1)
            names.push_back(plain);
        else
            names.push_back("(" + base.name(e) + "," + plain + ")");
    }
    std::vector<std::pair<Elem, Elem>> order;
    for (const auto& [e, x] : out.points)
        for (Elem d : base.covers_below(e))
            order.emplace_back(index.at({d, presheaf.res(e, d, x)}), index.at({e, x}));
    out.poset = std::make_shared<FinPoset>(std::move(names), order);
    return out;
}

std::string dump(const FinPresheaf& presheaf)
{
    const auto& base = presheaf.base();
    std::vector<Elem> stages(base.size());
    std::iota(stages.begin(), stages.end(), Elem{0});
    std::sort(stages.begin(), stages.end(), [&](Elem a, Elem b) { return base.name(a) < base.name(b); });
    std::ostringstream out;
    for (Elem e : stages) {
        std::vector<std::string> names;
        for (std::size_t x = 0; x < presheaf.size(e); ++x)
            names.push_back(presheaf.element_name(e, x));
        std::sort(names.begin(), names.end());
        out << "stage " << base.name(e) << ": {";
        for (std::size_t i = 0; i < names.size(); ++i)
            out << (i ? ", " : "") << names[i];
        out << "}\n";
    }
    for (Elem hi : stages) {
        std::vector<Elem> lower;
        for (Elem lo : base.down(hi))
            if (lo != hi)
                lower.push_back(lo);
        std::sort(lower.begin(), lower.end(), [&](Elem a, Elem b) { return base.name(a) < base.name(b); });
        for (Elem lo : lower) {
            std::vector<std::pair<std::string, std::string>> lines;
            for (std::size_t x = 0; x < presheaf.size(hi); ++x)
                lines.emplace_back(presheaf.element_name(hi, x), presheaf.element_name(lo, presheaf.res(hi, lo, x)));
            std::sort(lines.begin(), lines.end());
            for (const auto& [from, to] : lines)
                out << "res " << base.name(hi) << " -> " << base.name(lo) << ": " << from << " |-> " << to << "\n";
        }
    }
    return out.str();
}

} // namespace bisim
