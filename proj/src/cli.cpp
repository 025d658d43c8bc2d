#include "bisim/cli.hpp"

#include "bisim/errors.hpp"
#include "bisim/semantics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <future>
#include <sstream>

#ifndef BISIM_CORPUS_DIR
#define BISIM_CORPUS_DIR "corpus"
#endif

namespace bisim::cli {

namespace {

using Json = nlohmann::ordered_json;

Json state_json(const Lts& lts, State s)
{
    return lts.name(s);
}

Json witness_json(const Witness& witness, const Lts& source, const Lts& target)
{
    Json out;
    out["kind"] = witness_kind(witness);
    out["text"] = describe(witness, source, target);
    std::visit(
        [&](const auto& w) {
            using T = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<T, UnpreservedStep>) {
                out["from"] = state_json(source, w.step.source);
                out["label"] = w.step.label.name();
                out["to"] = state_json(source, w.step.target);
            } else if constexpr (std::is_same_v<T, UnreflectedStep>) {
                out["at"] = state_json(source, w.source);
                out["from"] = state_json(target, w.from);
                out["label"] = w.label.name();
                out["to"] = state_json(target, w.to);
            } else if constexpr (std::is_same_v<T, UncoveredState>) {
                out["state"] = state_json(target, w.state);
            } else if constexpr (std::is_same_v<T, StutterTriple>) {
                out["first"] = state_json(source, w.first);
                out["middle"] = state_json(source, w.middle);
                out["last"] = state_json(source, w.last);
            } else if constexpr (std::is_same_v<T, TransferFailure>) {
                out["left"] = state_json(source, w.left);
                out["right"] = state_json(source, w.right);
                out["label"] = w.step.label.name();
                out["to"] = state_json(source, w.step.target);
            } else if constexpr (std::is_same_v<T, LassoPair>) {
                out["left"] = to_string(w.left, source);
                out["right"] = to_string(w.right, target);
            } else if constexpr (std::is_same_v<T, UnliftedLasso>) {
                out["start"] = state_json(source, w.start);
                out["image"] = to_string(w.image, target);
            } else if constexpr (std::is_same_v<T, MissingPair>) {
                out["left"] = state_json(source, w.left);
                out["right"] = state_json(source, w.right);
                out["property"] = w.property;
            } else {
                out["family"] = w.family;
                out["stage"] = w.stage;
                out["description"] = w.description;
            }
        },
        witness);
    return out;
}

Json verdict_json(const Verdict& verdict, const Lts& source, const Lts& target)
{
    Json out;
    out["check"] = verdict.check;
    out["holds"] = verdict.holds;
    out["witness"] = verdict.witness ? witness_json(*verdict.witness, source, target) : Json(nullptr);
    Json bounds = Json::object();
    for (const auto& [key, value] : verdict.certified_bounds)
        bounds[key] = value;
    out["certified_bounds"] = bounds;
    out["notes"] = verdict.notes;
    return out;
}

std::string verdict_text(const Verdict& verdict, const std::string& indent = "")
{
    std::ostringstream out;
    out << indent << "check: " << verdict.check << "\n";
    out << indent << "holds: " << (verdict.holds ? "true" : "false") << "\n";
    if (verdict.witness)
        out << indent << "witness: " << verdict.witness_text << "\n";
    out << indent << "certified_bounds: ";
    if (verdict.certified_bounds.empty()) {
        out << "exact";
    } else {
        bool first = true;
        for (const auto& [key, value] : verdict.certified_bounds) {
            out << (first ? "" : ", ") << key << "=" << value;
            first = false;
        }
    }
    out << "\n";
    for (const auto& note : verdict.notes)
        out << indent << "note: " << note << "\n";
    return out.str();
}

void require_inputs(const Command& command, std::size_t low, std::size_t high)
{
    const auto n = command.inputs.size();
    if (n < low || n > high)
        throw parse_error("expected between " + std::to_string(low) + " and " + std::to_string(high) +
                          " model files, got " + std::to_string(n));
}

struct Pair {
    Model source;
    Model target;
    StateMap map;
};

Pair load_pair(const Command& command)
{
    require_inputs(command, 1, 2);
    if (!command.options.map)
        throw parse_error("this check needs --map");
    auto source = load_model(command.inputs[0]);
    auto target = command.inputs.size() == 2 ? load_model(command.inputs[1]) : source;
    auto map = parse_state_map(read_text_file(*command.options.map), source.lts, target.lts);
    return Pair{std::move(source), std::move(target), std::move(map)};
}

PartitionRelation load_relation(const Command& command, const Lts& lts)
{
    const auto& opt = command.options;
    if (opt.relations.empty())
        throw parse_error("this check needs at least one --relation");
    std::optional<PartitionRelation> combined;
    for (const auto& path : opt.relations) {
        PartitionRelation r{lts.size(), parse_relation_pairs(read_text_file(path), lts)};
        if (opt.close)
            r = r.equivalence_closure();
        if (!combined)
            combined = std::move(r);
        else
            combined = opt.compose ? relation_compose(*combined, r) : relation_union(*combined, r);
    }
    if (opt.close && !opt.compose)
        combined = combined->equivalence_closure();
    return *combined;
}

FairMode fair_mode(const Options& options)
{
    if (options.mode.empty() || options.mode == "exact")
        return FairMode::exact;
    if (options.mode == "bounded")
        return FairMode::bounded;
    throw parse_error("fair checks take --mode exact or bounded, not '" + options.mode + "'");
}

SemanticMode semantic_mode(const std::string& mode)
{
    if (mode == "strong")
        return SemanticMode::strong;
    if (mode == "fair")
        return SemanticMode::fair;
    if (mode == "branching_failed")
        return SemanticMode::branching_failed;
    if (mode == "branching")
        return SemanticMode::branching;
    throw parse_error("unknown semantic mode '" + mode + "'");
}

Report verdict_report(const Verdict& verdict, const Lts& source, const Lts& target, Format format)
{
    Report report;
    report.status = verdict.holds ? ExitStatus::holds : ExitStatus::fails;
    report.output = format == Format::json ? verdict_json(verdict, source, target).dump(2) + "\n"
                                           : verdict_text(verdict);
    return report;
}

Report run_check(const Command& command)
{
    const auto& opt = command.options;
    const auto& kind = opt.kind;
    const auto& bounds = opt.bounds;

    if (kind == "forall-fair-bisim") {
        require_inputs(command, 1, 1);
        const auto model = load_model(command.inputs[0]);
        const auto relation = load_relation(command, model.lts);
        ForallFairOptions options{fair_mode(opt), bounds, opt.symmetric_only};
        return verdict_report(check_forall_fair_bisim(relation, model.fair(), options), model.lts, model.lts,
                              opt.format);
    }

    const auto pair = load_pair(command);
    const auto& x = pair.source;
    const auto& y = pair.target;
    const auto& f = pair.map;
    if (kind == "bisim-map") {
        const FairLts fx{x.lts, x.fairness.value_or(Streett{})};
        const FairLts fy{y.lts, y.fairness.value_or(Streett{})};
        const auto result = check_bisim_map(f, fx, fy, semantic_mode(opt.mode), bounds);
        Report report;
        report.status = result.presheaf.holds ? ExitStatus::holds : ExitStatus::fails;
        report.agree = result.agree;
        if (opt.format == Format::json) {
            auto doc = verdict_json(result.presheaf, x.lts, y.lts);
            doc["concrete"] = verdict_json(result.concrete, x.lts, y.lts);
            doc["agree"] = result.agree;
            report.output = doc.dump(2) + "\n";
        } else {
            report.output = verdict_text(result.presheaf) + "concrete:\n" + verdict_text(result.concrete, "  ") +
                            "agree: " + (result.agree ? "true" : "false") + "\n";
        }
        return report;
    }

    Verdict verdict;
    if (kind == "simulation")
        verdict = check_simulation(f, x.lts, y.lts);
    else if (kind == "strong-bisim-fn")
        verdict = check_strong_bisim_fn(f, x.lts, y.lts);
    else if (kind == "fair-sim")
        verdict = check_fair_sim(f, x.fair(), y.fair(), bounds);
    else if (kind == "fair-reflection")
        verdict = check_fair_reflection(f, x.fair(), y.fair(), fair_mode(opt), bounds);
    else if (kind == "fair-bisim-fn")
        verdict = check_fair_bisim_fn(f, x.fair(), y.fair(), fair_mode(opt), bounds);
    else if (kind == "hildebrandt-open")
        verdict = check_hildebrandt_open(f, x.fair(), y.fair(), bounds);
    else if (kind == "branching-sim")
        verdict = check_branching_sim(f, x.lts, y.lts);
    else if (kind == "branching-bisim-fn")
        verdict = check_branching_bisim_fn(f, x.lts, y.lts);
    else
        throw parse_error("unknown check kind '" + kind + "'");
    return verdict_report(verdict, x.lts, y.lts, opt.format);
}

std::string sidecar_text(const Lts& lts)
{
    Json doc;
    doc["names"] = lts.names();
    return doc.dump(2) + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out{path, std::ios::binary};
    if (!out)
        throw parse_error("cannot write " + path.string());
    out << text;
}

Report run_quotient(const Command& command)
{
    require_inputs(command, 1, 1);
    const auto& opt = command.options;
    const auto model = load_model(command.inputs[0]);
    Lts quotient;
    StateMap map;
    std::vector<std::string> notes;
    if (opt.kind == "branching") {
        auto q = branching_quotient(model.lts);
        quotient = std::move(q.quotient);
        map = std::move(q.map);
    } else if (opt.kind == "strong") {
        auto q = strong_quotient(model.lts);
        quotient = std::move(q.quotient);
        map = std::move(q.map);
    } else if (opt.kind == "forall-fair") {
        auto q = forall_fair_quotient(load_relation(command, model.lts), model.fair());
        quotient = std::move(q.quotient.lts);
        map = std::move(q.map);
        notes.emplace_back("quotient fairness: images of fair runs of the input (not stored in the sidecar)");
    } else {
        throw parse_error("quotient takes --kind strong, branching or forall-fair");
    }

    const auto aut = serialize_aut(quotient);
    const auto map_text = serialize_state_map(map, model.lts, quotient);
    Report report;
    std::ostringstream out;
    if (opt.format == Format::json) {
        Json doc;
        doc["kind"] = opt.kind;
        doc["states"] = quotient.size();
        doc["transitions"] = quotient.transitions().size();
        doc["names"] = quotient.names();
        doc["aut"] = aut;
        doc["map"] = map_text;
        doc["notes"] = notes;
        out << doc.dump(2) << "\n";
    } else {
        out << "quotient: " << quotient.size() << " states, " << quotient.transitions().size() << " transitions\n";
        for (const auto& note : notes)
            out << "note: " << note << "\n";
        if (!opt.output)
            out << aut << "# map\n" << map_text;
    }
    if (opt.output) {
        auto base = *opt.output;
        write_file(base.replace_extension(".aut"), aut);
        write_file(base.replace_extension(".json"), sidecar_text(quotient));
        write_file(base.replace_extension(".map"), map_text);
    }
    report.output = out.str();
    return report;
}

Report run_dump(const Command& command)
{
    require_inputs(command, 1, 1);
    const auto& opt = command.options;
    const auto model = load_model(command.inputs[0]);
    const auto depth = opt.bounds.depth;
    const std::string mode = opt.mode.empty() ? (model.lts.has_tau() ? "branching" : "strong") : opt.mode;
    SemPresheaf sem;
    if (mode == "strong")
        sem = strong_sem(model.lts, depth);
    else if (mode == "fair")
        sem = fair_sem(model.fair(), FairBounds{depth, opt.bounds.stem_bound, opt.bounds.cycle_bound});
    else if (mode == "base")
        sem = base_presheaf(model.lts, depth, false);
    else if (mode == "base_barred")
        sem = base_presheaf(model.lts, depth, true);
    else if (mode == "branching")
        sem = branching_sem(model.lts, depth);
    else if (mode == "branching_failed")
        sem = branching_failed_sem(model.lts, depth);
    else
        throw parse_error("unknown dump mode '" + mode + "'");
    return Report{ExitStatus::holds, dump(*sem.presheaf), std::nullopt};
}

Report run_corpus_verb(const Command& command)
{
    const auto corpus = load_corpus(command.options.corpus_dir.value_or(default_corpus_dir()));
    const auto results = run_corpus(corpus);
    std::ostringstream out;
    std::size_t passed = 0;
    for (const auto& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.expectation->name << " (status " << r.report.status;
        if (r.report.agree)
            out << ", agree " << (*r.report.agree ? "true" : "false");
        out << ")\n";
        passed += r.passed ? 1 : 0;
    }
    out << passed << "/" << results.size() << " expectations pass\n";
    return Report{passed == results.size() ? ExitStatus::holds : ExitStatus::fails, out.str(), std::nullopt};
}

} // namespace

std::string to_json(const Verdict& verdict, const Lts& source, const Lts& target)
{
    return verdict_json(verdict, source, target).dump(2);
}

Report run(const Command& command)
{
    try {
        switch (command.verb) {
        case Verb::check: return run_check(command);
        case Verb::quotient: return run_quotient(command);
        case Verb::dump: return run_dump(command);
        case Verb::corpus: return run_corpus_verb(command);
        }
    } catch (const parse_error& e) {
        return Report{ExitStatus::parse_failure, std::string("parse error: ") + e.what() + "\n", std::nullopt};
    } catch (const precondition_error& e) {
        return Report{ExitStatus::precondition_failure, std::string("precondition: ") + e.what() + "\n",
                      std::nullopt};
    } catch (const unsupported_error& e) {
        return Report{ExitStatus::precondition_failure, std::string("unsupported: ") + e.what() + "\n",
                      std::nullopt};
    } catch (const std::exception& e) {
        return Report{ExitStatus::internal_failure, std::string("internal error: ") + e.what() + "\n",
                      std::nullopt};
    }
    return Report{ExitStatus::internal_failure, "internal error: unknown verb\n", std::nullopt};
}

Report run(const std::vector<std::string>& args)
{
    CLI::App app{"Bisimulation checks over labelled transition systems"};
    app.require_subcommand(1);
    Command command;
    auto& opt = command.options;
    std::string format = "text";
    std::vector<std::string> inputs;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--depth", opt.bounds.depth, "word depth")->capture_default_str();
        sub->add_option("--stem-bound", opt.bounds.stem_bound, "lasso stem bound")->capture_default_str();
        sub->add_option("--cycle-bound", opt.bounds.cycle_bound, "lasso cycle bound")->capture_default_str();
        sub->add_option("--mono-stage-bound", opt.bounds.mono.stage_bound, "generators per mono")
            ->capture_default_str();
        sub->add_option("--mono-support-bound", opt.bounds.mono.support_bound, "stages per mono")
            ->capture_default_str();
        sub->add_option("--mode", opt.mode, "semantic mode or exact|bounded");
        sub->add_option("--format", format, "text or json (machine)")
            ->check(CLI::IsMember({"text", "json", "machine"}));
    };

    auto* check = app.add_subcommand("check", "run one checker");
    add_common(check);
    check->add_option("--kind", opt.kind, "checker name")->required();
    check->add_option("--map", opt.map, "state map file");
    check->add_option("--relation", opt.relations, "relation file (repeatable)");
    check->add_flag("--close", opt.close, "equivalence closure of the relations");
    check->add_flag("--compose", opt.compose, "compose relation files in order");
    check->add_flag("--symmetric-only", opt.symmetric_only, "accept symmetric relations (nonstandard)");
    check->add_option("models", inputs, "source and optional target .aut")->required();

    auto* quotient = app.add_subcommand("quotient", "quotient a system");
    add_common(quotient);
    quotient->add_option("--kind", opt.kind, "strong, branching or forall-fair")->required();
    quotient->add_option("--relation", opt.relations, "relation file (repeatable)");
    quotient->add_flag("--close", opt.close, "equivalence closure of the relations");
    quotient->add_option("--output", opt.output, "write PREFIX.aut, PREFIX.json and PREFIX.map");
    quotient->add_option("model", inputs, ".aut file")->required();

    auto* dump_cmd = app.add_subcommand("dump", "print a semantic presheaf");
    add_common(dump_cmd);
    dump_cmd->add_option("model", inputs, ".aut file")->required();

    auto* corpus = app.add_subcommand("corpus", "run the bundled corpus");
    corpus->add_option("--corpus-dir", opt.corpus_dir, "corpus directory");

    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        return Report{ExitStatus::holds, app.help(), std::nullopt};
    } catch (const CLI::ParseError& e) {
        return Report{ExitStatus::parse_failure, std::string("usage error: ") + e.what() + "\n" + app.help(),
                      std::nullopt};
    }
    if (check->parsed())
        command.verb = Verb::check;
    else if (quotient->parsed())
        command.verb = Verb::quotient;
    else if (dump_cmd->parsed())
        command.verb = Verb::dump;
    else
        command.verb = Verb::corpus;
    opt.format = format == "text" ? Format::text : Format::json;
    for (const auto& i : inputs)
        command.inputs.emplace_back(i);
    return run(command);
}

std::filesystem::path default_corpus_dir()
{
    if (const char* env = std::getenv("BISIM_CORPUS_DIR"))
        return env;
    return BISIM_CORPUS_DIR;
}

namespace {

Command check_command(const std::filesystem::path& dir, std::string kind, std::vector<std::string> models,
                      std::optional<std::string> map = std::nullopt, std::string mode = {})
{
    Command c;
    c.verb = Verb::check;
    c.options.kind = std::move(kind);
    c.options.mode = std::move(mode);
    for (const auto& m : models)
        c.inputs.push_back(dir / m);
    if (map)
        c.options.map = dir / *map;
    return c;
}

Command relation_command(const std::filesystem::path& dir, const std::string& model,
                         const std::vector<std::string>& relations, bool compose = false)
{
    Command c = check_command(dir, "forall-fair-bisim", {model});
    for (const auto& r : relations)
        c.options.relations.push_back(dir / r);
    c.options.close = true;
    c.options.compose = compose;
    return c;
}

} // namespace

Corpus load_corpus(const std::filesystem::path& dir)
{
    Corpus corpus;
    corpus.dir = dir;
    corpus.systems = {
        {"CHAIN", "three-state silent-then-visible chain", {dir / "chain/chain.aut"}},
        {"SYS_BRANCH", "branching simulation that is not a branching bisimulation",
         {dir / "sys_branch/union.aut", dir / "sys_branch/x.aut", dir / "sys_branch/y.aut"}},
        {"SYS_FAIR_REM", "fair simulation with step reflection that is not a fair bisimulation",
         {dir / "sys_fair_rem/x.aut", dir / "sys_fair_rem/y.aut"}},
        {"SYS_UNION", "union counterexample with four Streett pairs", {dir / "sys_union/sys.aut"}},
        {"SYS_COMP", "composition counterexample with an always-after constraint", {dir / "sys_comp/sys.aut"}},
    };

    auto expect = [&](std::string name, std::string source, Command command, int status,
                      std::string contains = {}, std::optional<bool> agree = std::nullopt) {
        corpus.expectations.push_back(
            Expectation{std::move(name), std::move(source), std::move(command), status, agree, std::move(contains)});
    };

    Command chain_quotient;
    chain_quotient.verb = Verb::quotient;
    chain_quotient.options.kind = "branching";
    chain_quotient.inputs = {dir / "chain/chain.aut"};
    expect("chain/branching-quotient-two-states", "CHAIN", chain_quotient, ExitStatus::holds, "2 states");

    const std::vector<std::string> branch = {"sys_branch/x.aut", "sys_branch/y.aut"};
    expect("sys_branch/branching-sim", "SYS_BRANCH", check_command(dir, "branching-sim", branch, "sys_branch/f.map"),
           ExitStatus::holds);
    expect("sys_branch/branching-bisim-fn-fails", "SYS_BRANCH",
           check_command(dir, "branching-bisim-fn", branch, "sys_branch/f.map"), ExitStatus::fails,
           "y1 -tau-> y3");
    expect("sys_branch/bisim-map-without-bar-mismatch", "SYS_BRANCH",
           check_command(dir, "bisim-map", branch, "sys_branch/f.map", "branching_failed"), ExitStatus::holds, {},
           false);
    expect("sys_branch/bisim-map-with-bar-fails", "SYS_BRANCH",
           check_command(dir, "bisim-map", branch, "sys_branch/f.map", "branching"), ExitStatus::fails, "tau_bar",
           true);

    const std::vector<std::string> rem = {"sys_fair_rem/x.aut", "sys_fair_rem/y.aut"};
    expect("sys_fair_rem/fair-sim", "SYS_FAIR_REM", check_command(dir, "fair-sim", rem, "sys_fair_rem/f.map"),
           ExitStatus::holds);
    expect("sys_fair_rem/hildebrandt-open", "SYS_FAIR_REM",
           check_command(dir, "hildebrandt-open", rem, "sys_fair_rem/f.map"), ExitStatus::holds);
    expect("sys_fair_rem/fair-bisim-fn-fails", "SYS_FAIR_REM",
           check_command(dir, "fair-bisim-fn", rem, "sys_fair_rem/f.map"), ExitStatus::fails, "x (-a-> x)^w | y (-a-> y)^w");
    expect("sys_fair_rem/bisim-map-fair-fails", "SYS_FAIR_REM",
           check_command(dir, "bisim-map", rem, "sys_fair_rem/f.map", "fair"), ExitStatus::fails, {}, true);

    expect("sys_union/R1", "SYS_UNION", relation_command(dir, "sys_union/sys.aut", {"sys_union/R1.rel"}),
           ExitStatus::holds);
    expect("sys_union/R2", "SYS_UNION", relation_command(dir, "sys_union/sys.aut", {"sys_union/R2.rel"}),
           ExitStatus::holds);
    expect("sys_union/R1-union-R2-fails", "SYS_UNION",
           relation_command(dir, "sys_union/sys.aut", {"sys_union/R1.rel", "sys_union/R2.rel"}), ExitStatus::fails,
           " | ");
    Command union_quotient = relation_command(dir, "sys_union/sys.aut", {"sys_union/R2.rel"});
    union_quotient.verb = Verb::quotient;
    union_quotient.options.kind = "forall-fair";
    expect("sys_union/R2-quotient", "SYS_UNION", union_quotient, ExitStatus::holds, "2 states");

    expect("sys_comp/T", "SYS_COMP", relation_command(dir, "sys_comp/sys.aut", {"sys_comp/T.rel"}),
           ExitStatus::holds);
    expect("sys_comp/Tprime", "SYS_COMP", relation_command(dir, "sys_comp/sys.aut", {"sys_comp/Tprime.rel"}),
           ExitStatus::holds);
    expect("sys_comp/composition-not-transitive", "SYS_COMP",
           relation_command(dir, "sys_comp/sys.aut", {"sys_comp/Tprime.rel", "sys_comp/T.rel"}, true),
           ExitStatus::fails, "(x1, y1) is missing for transitivity");
    return corpus;
}

std::vector<ExpectationResult> run_corpus(const Corpus& corpus)
{
    std::vector<std::future<Report>> pending;
    for (const auto& e : corpus.expectations)
        pending.push_back(std::async(std::launch::async, [&e] { return run(e.command); }));
    std::vector<ExpectationResult> out;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        const auto& e = corpus.expectations[i];
        ExpectationResult r{&e, pending[i].get(), false};
        r.passed = r.report.status == e.status && (!e.agree || r.report.agree == e.agree) &&
                   r.report.output.find(e.output_contains) != std::string::npos;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace bisim::cli
