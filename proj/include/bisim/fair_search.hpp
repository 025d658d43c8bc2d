#pragma once

#include "bisim/lts.hpp"

#include <cstddef>
#include <optional>
#include <vector>

// Search for ultimately periodic paths in finite labelled graphs whose state
// tracks satisfy, or violate, the fairness of given systems. Every exact
// fairness decision in the library reduces to one call of find_lasso.
namespace bisim::search {

struct Graph {
    std::vector<std::vector<std::pair<Label, std::size_t>>> succ;
    // tracks[t][node] is the state of system t shown at `node`.
    std::vector<std::vector<State>> tracks;
    std::vector<char> initial;

    [[nodiscard]] std::size_t size() const noexcept { return succ.size(); }
};

enum class Polarity { fair, unfair };

struct Constraint {
    std::size_t track = 0;
    const FairLts* system = nullptr;
    Polarity polarity = Polarity::fair;
};

// One lasso per track of the input graph, in canonical form.
using TrackLassos = std::vector<Lasso>;

// A path from an initial node that ends in a cycle and satisfies every
// constraint. Unfair image fairness is not decidable by this search and
// raises unsupported_error.
[[nodiscard]] std::optional<TrackLassos> find_lasso(const Graph& graph, const std::vector<Constraint>& constraints);

// Nodes are positions of the lasso; the only initial node is position 0.
[[nodiscard]] Graph lasso_graph(const Lasso& lasso);

// Nodes are states; every node is initial; one track holding the state.
[[nodiscard]] Graph system_graph(const Lts& lts);

// Adds a track of `source` states s with map[s] equal to `track`, moving in
// step with the graph's labels. With `start`, position 0 of the new track is
// fixed.
[[nodiscard]] Graph lift(const Graph& graph, std::size_t track, const Lts& source, const StateMap& map,
                         std::optional<State> start = std::nullopt);

// Pairs (x, y) of states of one system allowed by `related`, moving on equal
// labels; every allowed pair is initial. Tracks: 0 = x, 1 = y.
[[nodiscard]] Graph synchronous_product(const Lts& lts, const std::vector<std::vector<char>>& related);

// Adds a track that applies `map` to an existing track.
[[nodiscard]] Graph with_image_track(Graph graph, std::size_t track, const StateMap& map);

} // namespace bisim::search
