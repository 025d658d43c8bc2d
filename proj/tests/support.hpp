#pragma once

#include "bisim/io.hpp"
#include "bisim/lts.hpp"

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace support {

inline std::filesystem::path corpus(const std::string& relative)
{
    return std::filesystem::path{BISIM_CORPUS_DIR} / relative;
}

inline bisim::Model model(const std::string& relative)
{
    return bisim::load_model(corpus(relative));
}

inline bisim::StateMap map_file(const std::string& relative, const bisim::Lts& source, const bisim::Lts& target)
{
    return bisim::parse_state_map(bisim::read_text_file(corpus(relative)), source, target);
}

inline bisim::Label L(const std::string& name)
{
    return bisim::Label{name};
}

// Word from a dot-separated string; "" is the empty word.
inline bisim::Word W(const std::string& text)
{
    bisim::Word w;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto dot = text.find('.', start);
        const auto end = dot == std::string::npos ? text.size() : dot;
        w.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    return w;
}

// Execution from state names and labels: E(lts, {"x0", "x1"}, "tau").
inline bisim::Execution E(const bisim::Lts& lts, const std::vector<std::string>& states, const std::string& trace)
{
    bisim::Execution p{W(trace), {}};
    for (const auto& s : states)
        p.states.push_back(*lts.find(s));
    return p;
}

inline bisim::Lts chain()
{
    return model("chain/chain.aut").lts;
}

struct RandomSystems {
    std::mt19937 rng;

    explicit RandomSystems(std::uint32_t seed) : rng{seed} {}

    std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>{0, n - 1}(rng); }

    // Up to `max_states` states over the given labels, each possible
    // transition present with probability `density`.
    bisim::Lts lts(std::size_t max_states, const std::vector<std::string>& labels, double density)
    {
        const std::size_t n = 1 + below(max_states);
        std::bernoulli_distribution coin{density};
        std::vector<bisim::Transition> steps;
        for (bisim::State s = 0; s < n; ++s)
            for (const auto& l : labels)
                for (bisim::State t = 0; t < n; ++t)
                    if (coin(rng))
                        steps.push_back(bisim::Transition{s, bisim::Label{l}, t});
        std::set<bisim::Label> alphabet;
        for (const auto& l : labels)
            if (l != "tau")
                alphabet.insert(bisim::Label{l});
        return bisim::Lts{bisim::default_state_names(n), std::move(steps), alphabet};
    }

    // A system over `size` states holding the image of every step of
    // `source` under f plus random extra steps, so f is a simulation into it.
    bisim::Lts image_target(const bisim::Lts& source, const bisim::StateMap& f, std::size_t size,
                            const std::vector<std::string>& labels, double extra)
    {
        std::bernoulli_distribution coin{extra};
        std::vector<bisim::Transition> steps;
        for (const auto& t : source.transitions())
            steps.push_back(bisim::Transition{f[t.source], t.label, f[t.target]});
        for (bisim::State s = 0; s < size; ++s)
            for (const auto& l : labels)
                for (bisim::State t = 0; t < size; ++t)
                    if (coin(rng))
                        steps.push_back(bisim::Transition{s, bisim::Label{l}, t});
        std::sort(steps.begin(), steps.end());
        steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
        std::set<bisim::Label> alphabet = source.alphabet();
        for (const auto& l : labels)
            if (l != "tau")
                alphabet.insert(bisim::Label{l});
        return bisim::Lts{bisim::default_state_names(size), std::move(steps), alphabet};
    }

    bisim::StateMap map(std::size_t from, std::size_t to)
    {
        bisim::StateMap f(from);
        for (auto& s : f)
            s = static_cast<bisim::State>(below(to));
        return f;
    }
};

} // namespace support
