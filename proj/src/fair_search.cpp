#include "bisim/fair_search.hpp"

#include "bisim/errors.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <variant>

namespace bisim::search {

namespace {

using Memory = std::uint32_t;
using InitFn = std::function<std::vector<Memory>(std::size_t node)>;
using StepFn = std::function<std::vector<Memory>(std::size_t node, Memory mem, const Label& label, std::size_t next)>;

// Product of the graph with a nondeterministic memory, restricted to nodes
// reachable from initial ones. The memory becomes a new last track.
Graph expand(const Graph& g, const InitFn& init, const StepFn& step)
{
    Graph out;
    out.tracks.resize(g.tracks.size() + 1);
    std::map<std::pair<std::size_t, Memory>, std::size_t> index;
    std::deque<std::pair<std::size_t, Memory>> work;
    auto node_of = [&](std::size_t node, Memory mem, bool is_initial) {
        auto [it, inserted] = index.try_emplace({node, mem}, out.succ.size());
        if (inserted) {
            out.succ.emplace_back();
            out.initial.push_back(is_initial ? 1 : 0);
            for (std::size_t t = 0; t < g.tracks.size(); ++t)
                out.tracks[t].push_back(g.tracks[t][node]);
            out.tracks.back().push_back(mem);
            work.emplace_back(node, mem);
        } else if (is_initial) {
            out.initial[it->second] = 1;
        }
        return it->second;
    };
    for (std::size_t n = 0; n < g.size(); ++n)
        if (g.initial[n])
            for (Memory m : init(n))
                node_of(n, m, true);
    while (!work.empty()) {
        auto [n, m] = work.front();
        work.pop_front();
        const std::size_t from = index.at({n, m});
        for (const auto& [label, next] : g.succ[n]) {
            for (Memory m2 : step(n, m, label, next)) {
                const std::size_t to = node_of(next, m2, false);
                out.succ[from].emplace_back(label, to);
            }
        }
    }
    return out;
}

using NodeSet = std::vector<char>;

struct Acceptance {
    NodeSet ok;
    std::vector<std::pair<NodeSet, NodeSet>> pairs;
};

class StreettSearch {
public:
    StreettSearch(const Graph& g, const Acceptance& acc) : g_{g}, acc_{acc} {}

    std::optional<NodeSet> run()
    {
        NodeSet reach(g_.size(), 0);
        std::vector<std::size_t> stack;
        for (std::size_t n = 0; n < g_.size(); ++n) {
            if (g_.initial[n] && acc_.ok[n] && !reach[n]) {
                reach[n] = 1;
                stack.push_back(n);
            }
        }
        while (!stack.empty()) {
            std::size_t n = stack.back();
            stack.pop_back();
            for (const auto& [label, m] : g_.succ[n]) {
                if (acc_.ok[m] && !reach[m]) {
                    reach[m] = 1;
                    stack.push_back(m);
                }
            }
        }
        reachable_ = reach;
        return refine(reach);
    }

    [[nodiscard]] const NodeSet& reachable() const { return reachable_; }

private:
    std::optional<NodeSet> refine(const NodeSet& allowed)
    {
        for (auto& component : components(allowed)) {
            NodeSet bad(g_.size(), 0);
            bool any_bad = false;
            for (const auto& [trigger, response] : acc_.pairs) {
                bool meets_trigger = false;
                bool meets_response = false;
                for (std::size_t n = 0; n < g_.size(); ++n) {
                    if (!component[n])
                        continue;
                    meets_trigger = meets_trigger || trigger[n];
                    meets_response = meets_response || response[n];
                }
                if (meets_trigger && !meets_response) {
                    any_bad = true;
                    for (std::size_t n = 0; n < g_.size(); ++n)
                        if (component[n] && trigger[n])
                            bad[n] = 1;
                }
            }
            if (!any_bad)
                return component;
            NodeSet rest = component;
            for (std::size_t n = 0; n < g_.size(); ++n)
                if (bad[n])
                    rest[n] = 0;
            if (auto found = refine(rest))
                return found;
        }
        return std::nullopt;
    }

    // Nontrivial strongly connected components of the induced subgraph.
    std::vector<NodeSet> components(const NodeSet& allowed)
    {
        const std::size_t n = g_.size();
        std::vector<long> order(n, -1);
        std::vector<long> low(n, 0);
        std::vector<char> on_stack(n, 0);
        std::vector<std::size_t> stack;
        std::vector<NodeSet> out;
        long counter = 0;
        std::function<void(std::size_t)> visit = [&](std::size_t v) {
            order[v] = low[v] = counter++;
            stack.push_back(v);
            on_stack[v] = 1;
            for (const auto& [label, w] : g_.succ[v]) {
                if (!allowed[w])
                    continue;
                if (order[w] < 0) {
                    visit(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], order[w]);
                }
            }
            if (low[v] != order[v])
                return;
            NodeSet comp(n, 0);
            std::size_t members = 0;
            std::size_t w = 0;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = 0;
                comp[w] = 1;
                ++members;
            } while (w != v);
            bool cyclic = members > 1;
            for (const auto& [label, x] : g_.succ[v])
                cyclic = cyclic || x == v;
            if (cyclic)
                out.push_back(std::move(comp));
        };
        for (std::size_t v = 0; v < n; ++v)
            if (allowed[v] && order[v] < 0)
                visit(v);
        return out;
    }

    const Graph& g_;
    const Acceptance& acc_;
    NodeSet reachable_;
};

using Hop = std::pair<Label, std::size_t>;

// Shortest path inside `within` from any node in `sources` to `target`;
// returns the hops after the source and the chosen source.
std::pair<std::size_t, std::vector<Hop>> shortest_path(const Graph& g, const NodeSet& within,
                                                       const std::vector<std::size_t>& sources,
                                                       const std::function<bool(std::size_t)>& is_target,
                                                       bool require_step)
{
    std::vector<long> parent(g.size(), -2);
    std::vector<Label> via(g.size());
    std::deque<std::size_t> work;
    std::vector<std::size_t> root(g.size(), 0);
    for (std::size_t s : sources) {
        if (!require_step && is_target(s))
            return {s, {}};
        parent[s] = -1;
        root[s] = s;
        work.push_back(s);
    }
    while (!work.empty()) {
        std::size_t v = work.front();
        work.pop_front();
        for (const auto& [label, w] : g.succ[v]) {
            if (!within[w])
                continue;
            if (is_target(w)) {
                std::vector<Hop> hops{{label, w}};
                for (std::size_t u = v; parent[u] != -1; u = static_cast<std::size_t>(parent[u]))
                    hops.emplace_back(via[u], u);
                std::reverse(hops.begin(), hops.end());
                return {root[v], hops};
            }
            if (parent[w] == -2) {
                parent[w] = static_cast<long>(v);
                via[w] = label;
                root[w] = root[v];
                work.push_back(w);
            }
        }
    }
    throw internal_error("no path inside a strongly connected component");
}

TrackLassos project(const Graph& g, std::size_t tracks, std::size_t first, const std::vector<Hop>& stem,
                    const std::vector<Hop>& cycle)
{
    TrackLassos out;
    for (std::size_t t = 0; t < tracks; ++t) {
        Lasso l;
        l.stem.states.push_back(g.tracks[t][first]);
        for (const auto& [label, node] : stem) {
            l.stem.trace.push_back(label);
            l.stem.states.push_back(g.tracks[t][node]);
        }
        for (const auto& [label, node] : cycle)
            l.cycle.emplace_back(label, g.tracks[t][node]);
        out.push_back(canonical(l));
    }
    return out;
}

std::optional<TrackLassos> search_one(const Graph& g, const Acceptance& acc, std::size_t tracks)
{
    StreettSearch s{g, acc};
    auto component = s.run();
    if (!component)
        return std::nullopt;
    std::vector<std::size_t> sources;
    for (std::size_t n = 0; n < g.size(); ++n)
        if (g.initial[n] && acc.ok[n])
            sources.push_back(n);
    const NodeSet& comp = *component;
    auto [first, stem] = shortest_path(g, s.reachable(), sources, [&](std::size_t n) { return comp[n] != 0; }, false);
    const std::size_t entry = stem.empty() ? first : stem.back().second;
    std::vector<Hop> cycle;
    std::size_t at = entry;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!comp[n] || n == entry)
            continue;
        auto hops = shortest_path(g, comp, {at}, [n](std::size_t m) { return m == n; }, false).second;
        cycle.insert(cycle.end(), hops.begin(), hops.end());
        at = n;
    }
    auto back = shortest_path(g, comp, {at}, [entry](std::size_t m) { return m == entry; }, true).second;
    cycle.insert(cycle.end(), back.begin(), back.end());
    return project(g, tracks, first, stem, cycle);
}

NodeSet on_track(const Graph& g, std::size_t track, const std::set<State>& states)
{
    NodeSet out(g.size(), 0);
    for (std::size_t n = 0; n < g.size(); ++n)
        out[n] = states.contains(g.tracks[track][n]) ? 1 : 0;
    return out;
}

} // namespace

Graph lasso_graph(const Lasso& lasso)
{
    const std::size_t m = lasso.stem.length();
    const std::size_t k = lasso.cycle.size();
    Graph g;
    g.succ.resize(m + k);
    g.tracks.assign(1, std::vector<State>(m + k));
    g.initial.assign(m + k, 0);
    g.initial[0] = 1;
    for (std::size_t i = 0; i <= m; ++i)
        g.tracks[0][i] = lasso.stem.states[i];
    for (std::size_t i = 0; i < m; ++i)
        g.succ[i].emplace_back(lasso.stem.trace[i], i + 1);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t from = m + j;
        const std::size_t to = (j + 1 == k) ? m : m + j + 1;
        if (j + 1 < k)
            g.tracks[0][to] = lasso.cycle[j].second;
        g.succ[from].emplace_back(lasso.cycle[j].first, to);
    }
    return g;
}

Graph system_graph(const Lts& lts)
{
    Graph g;
    g.succ.resize(lts.size());
    g.tracks.assign(1, std::vector<State>(lts.size()));
    g.initial.assign(lts.size(), 1);
    for (State s = 0; s < lts.size(); ++s) {
        g.tracks[0][s] = s;
        for (const auto& [label, t] : lts.out(s))
            g.succ[s].emplace_back(label, static_cast<std::size_t>(t));
    }
    return g;
}

Graph lift(const Graph& graph, std::size_t track, const Lts& source, const StateMap& map, std::optional<State> start)
{
    if (map.size() != source.size())
        throw precondition_error("lifting map is not total on the source system");
    auto init = [&](std::size_t node) {
        std::vector<Memory> out;
        for (State w = 0; w < source.size(); ++w)
            if (map[w] == graph.tracks[track][node] && (!start || *start == w))
                out.push_back(w);
        return out;
    };
    auto step = [&](std::size_t, Memory w, const Label& label, std::size_t next) {
        std::vector<Memory> out;
        for (State w2 : source.successors(w, label))
            if (map[w2] == graph.tracks[track][next])
                out.push_back(w2);
        return out;
    };
    return expand(graph, init, step);
}

Graph synchronous_product(const Lts& lts, const std::vector<std::vector<char>>& related)
{
    Graph g;
    g.tracks.resize(2);
    std::map<std::pair<State, State>, std::size_t> index;
    for (State x = 0; x < lts.size(); ++x) {
        for (State y = 0; y < lts.size(); ++y) {
            if (!related[x][y])
                continue;
            index[{x, y}] = g.succ.size();
            g.succ.emplace_back();
            g.initial.push_back(1);
            g.tracks[0].push_back(x);
            g.tracks[1].push_back(y);
        }
    }
    for (const auto& [xy, node] : index) {
        for (const auto& [a, x2] : lts.out(xy.first))
            for (const auto& [b, y2] : lts.out(xy.second))
                if (a == b && related[x2][y2])
                    g.succ[node].emplace_back(a, index.at({x2, y2}));
    }
    return g;
}

Graph with_image_track(Graph graph, std::size_t track, const StateMap& map)
{
    std::vector<State> image;
    image.reserve(graph.size());
    for (State s : graph.tracks.at(track))
        image.push_back(map.at(s));
    graph.tracks.push_back(std::move(image));
    return graph;
}

std::optional<TrackLassos> find_lasso(const Graph& input, const std::vector<Constraint>& constraints)
{
    const std::size_t original_tracks = input.tracks.size();
    Graph g = input;
    std::vector<Constraint> work = constraints;
    for (auto& c : work) {
        while (const auto* img = std::get_if<ImageFairness>(&c.system->fairness)) {
            if (c.polarity == Polarity::unfair)
                throw unsupported_error("unfairness of an image fairness predicate is not decided exactly");
            g = lift(g, c.track, img->source->lts, img->map);
            c = Constraint{g.tracks.size() - 1, img->source.get(), Polarity::fair};
        }
    }

    // Always-after constraints: product with a capped position counter and a
    // status of clean, violated, or exempt (start outside the start set).
    std::vector<std::size_t> flag_track(work.size(), 0);
    for (std::size_t i = 0; i < work.size(); ++i) {
        const auto* aa = std::get_if<AlwaysAfter>(&work[i].system->fairness);
        if (!aa)
            continue;
        const std::size_t track = work[i].track;
        const Memory cap = static_cast<Memory>(std::max<std::size_t>(aa->offset, 1));
        const Memory violated = cap + 1;
        const Memory exempt = 2 * (cap + 1);
        const Graph before = g;
        auto init = [&](std::size_t node) {
            const State s = before.tracks[track][node];
            if (aa->start && !aa->start->contains(s))
                return std::vector<Memory>{exempt};
            return std::vector<Memory>{aa->offset == 0 && !aa->allowed.contains(s) ? violated : 0};
        };
        auto step = [&](std::size_t, Memory mem, const Label&, std::size_t next) {
            if (mem == exempt)
                return std::vector<Memory>{exempt};
            const bool was = mem > cap;
            const Memory counter = std::min<Memory>((mem % (cap + 1)) + 1, cap);
            const State s = before.tracks[track][next];
            const bool now = was || (counter >= aa->offset && !aa->allowed.contains(s));
            return std::vector<Memory>{now ? counter + cap + 1 : counter};
        };
        g = expand(before, init, step);
        flag_track[i] = g.tracks.size() - 1;
        for (auto& m : g.tracks.back())
            m = (m > cap && m != exempt) ? 1 : 0;
    }

    std::vector<std::vector<Acceptance>> choices;
    for (std::size_t i = 0; i < work.size(); ++i) {
        const auto& c = work[i];
        std::vector<Acceptance> alts;
        NodeSet all(g.size(), 1);
        NodeSet none(g.size(), 0);
        if (const auto* st = std::get_if<Streett>(&c.system->fairness)) {
            if (c.polarity == Polarity::fair) {
                Acceptance a{all, {}};
                for (const auto& p : st->pairs)
                    a.pairs.emplace_back(on_track(g, c.track, p.trigger), on_track(g, c.track, p.response));
                alts.push_back(std::move(a));
            } else {
                for (const auto& p : st->pairs)
                    alts.push_back(Acceptance{all, {{all, on_track(g, c.track, p.trigger)},
                                                    {on_track(g, c.track, p.response), none}}});
            }
        } else {
            const auto& flags = g.tracks[flag_track[i]];
            NodeSet clean(g.size(), 0);
            for (std::size_t n = 0; n < g.size(); ++n)
                clean[n] = flags[n] == 0 ? 1 : 0;
            if (c.polarity == Polarity::fair)
                alts.push_back(Acceptance{clean, {}});
            else
                alts.push_back(Acceptance{all, {{clean, none}}});
        }
        choices.push_back(std::move(alts));
    }

    std::vector<std::size_t> pick(choices.size(), 0);
    for (const auto& alts : choices)
        if (alts.empty())
            return std::nullopt;
    while (true) {
        Acceptance combined{NodeSet(g.size(), 1), {}};
        for (std::size_t i = 0; i < choices.size(); ++i) {
            const auto& a = choices[i][pick[i]];
            for (std::size_t n = 0; n < g.size(); ++n)
                combined.ok[n] = combined.ok[n] && a.ok[n];
            combined.pairs.insert(combined.pairs.end(), a.pairs.begin(), a.pairs.end());
        }
        if (auto found = search_one(g, combined, original_tracks))
            return found;
        std::size_t i = 0;
        while (i < pick.size() && ++pick[i] == choices[i].size()) {
            pick[i] = 0;
            ++i;
        }
        if (i == pick.size())
            return std::nullopt;
    }
}

} // namespace bisim::search
