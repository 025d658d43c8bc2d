#pragma once

#include "bisim/equiv.hpp"
#include "bisim/io.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bisim::cli {

enum class Verb { check, quotient, dump, corpus };

enum class Format { text, json };

struct Options {
    CheckBounds bounds;
    // check: simulation, strong-bisim-fn, fair-sim, fair-reflection,
    // fair-bisim-fn, hildebrandt-open, forall-fair-bisim, branching-sim,
    // branching-bisim-fn, bisim-map. quotient: strong, branching, forall-fair.
    std::string kind;
    // bisim-map and dump: strong, fair, branching_failed, branching (dump also
    // takes base and base_barred). Fair checks: exact or bounded.
    std::string mode;
    Format format = Format::text;
    std::optional<std::filesystem::path> map;
    std::vector<std::filesystem::path> relations;
    // Equivalence closure of every relation file, and of their union.
    bool close = false;
    // Compose the relation files in order instead of taking their union.
    bool compose = false;
    bool symmetric_only = false;
    std::optional<std::filesystem::path> output;
    std::optional<std::filesystem::path> corpus_dir;
};

struct Command {
    Verb verb = Verb::check;
    std::vector<std::filesystem::path> inputs;
    Options options;
};

enum ExitStatus : int { holds = 0, fails = 1, parse_failure = 2, precondition_failure = 3, internal_failure = 4 };

struct Report {
    int status = ExitStatus::holds;
    std::string output;
    // Filled by bisim-map checks.
    std::optional<bool> agree;
};

[[nodiscard]] Report run(const Command& command);

// Parses arguments (program name first); usage errors give status 2.
[[nodiscard]] Report run(const std::vector<std::string>& args);

struct Expectation {
    std::string name;
    // Where the expected outcome comes from.
    std::string source;
    Command command;
    int status = ExitStatus::holds;
    std::optional<bool> agree;
    // Text the output must contain.
    std::string output_contains;
};

struct CorpusSystem {
    std::string name;
    std::string source;
    std::vector<std::filesystem::path> files;
};

struct Corpus {
    std::filesystem::path dir;
    std::vector<CorpusSystem> systems;
    std::vector<Expectation> expectations;
};

[[nodiscard]] std::filesystem::path default_corpus_dir();
[[nodiscard]] Corpus load_corpus(const std::filesystem::path& dir = default_corpus_dir());

struct ExpectationResult {
    const Expectation* expectation = nullptr;
    Report report;
    bool passed = false;
};

[[nodiscard]] std::vector<ExpectationResult> run_corpus(const Corpus& corpus);

// Machine record with fields check, holds, witness, certified_bounds, notes.
[[nodiscard]] std::string to_json(const Verdict& verdict, const Lts& source, const Lts& target);

} // namespace bisim::cli
