#pragma once

#include "bisim/lts.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bisim {

struct ParsedAut {
    Lts lts;
    std::vector<std::string> warnings;
};

// Aldebaran text: header `des (i, t, s)` then `(from,"label",to)` lines with
// 0-based states. The first header field is ignored.
[[nodiscard]] ParsedAut parse_aut(std::string_view text);
[[nodiscard]] std::string serialize_aut(const Lts& lts);

struct Sidecar {
    std::optional<std::vector<std::string>> names;
    std::optional<FairnessSpec> fairness;
};

// JSON object with optional `names` (index -> identifier) and an optional
// fairness description keyed by `kind` ("streett" or "always_after").
// State references may be names or indices.
[[nodiscard]] Sidecar parse_sidecar(std::string_view text, const Lts& lts);

struct Model {
    Lts lts;
    std::optional<FairnessSpec> fairness;
    std::vector<std::string> warnings;

    [[nodiscard]] FairLts fair() const;
};

// Reads `path` and, when present, the sidecar next to it (same stem, .json).
[[nodiscard]] Model load_model(const std::filesystem::path& path);
[[nodiscard]] Model load_model(std::string_view aut_text, std::optional<std::string_view> sidecar_text);

// Lines `source -> target`; `#` starts a comment. Every source state must be
// mapped exactly once.
[[nodiscard]] StateMap parse_state_map(std::string_view text, const Lts& source, const Lts& target);
[[nodiscard]] std::string serialize_state_map(const StateMap& f, const Lts& source, const Lts& target);

// Lines `s ~ t`, read as the unordered pair {s, t}; `#` starts a comment.
[[nodiscard]] std::vector<std::pair<State, State>> parse_relation_pairs(std::string_view text, const Lts& lts);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

} // namespace bisim
