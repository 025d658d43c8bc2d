#include "bisim/io.hpp"

#include "bisim/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <regex>
#include <sstream>

namespace bisim {

namespace {

std::vector<std::string> split_lines(std::string_view text)
{
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    if (!current.empty())
        lines.push_back(current);
    return lines;
}

std::string strip(std::string_view s)
{
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string_view::npos)
        return {};
    const auto end = s.find_last_not_of(" \t");
    return std::string(s.substr(begin, end - begin + 1));
}

std::string without_comment(const std::string& line)
{
    return strip(line.substr(0, line.find('#')));
}

std::size_t to_index(const std::string& digits, std::size_t line_no)
{
    try {
        return static_cast<std::size_t>(std::stoull(digits));
    } catch (const std::exception&) {
        throw parse_error("line " + std::to_string(line_no) + ": number out of range");
    }
}

State resolve_state(const nlohmann::json& ref, const Lts& lts)
{
    if (ref.is_number_unsigned()) {
        const auto index = ref.get<std::size_t>();
        if (index >= lts.size())
            throw parse_error("sidecar refers to state index " + std::to_string(index) + " outside the system");
        return static_cast<State>(index);
    }
    if (ref.is_string()) {
        if (auto s = lts.find(ref.get<std::string>()))
            return *s;
        throw parse_error("sidecar refers to unknown state '" + ref.get<std::string>() + "'");
    }
    throw parse_error("sidecar state references must be names or indices");
}

std::set<State> resolve_states(const nlohmann::json& refs, const Lts& lts)
{
    if (!refs.is_array())
        throw parse_error("sidecar expects a list of states");
    std::set<State> out;
    for (const auto& ref : refs)
        out.insert(resolve_state(ref, lts));
    return out;
}

State state_by_name(const Lts& lts, const std::string& name, std::size_t line_no)
{
    if (auto s = lts.find(name))
        return *s;
    throw parse_error("line " + std::to_string(line_no) + ": unknown state '" + name + "'");
}

} // namespace

ParsedAut parse_aut(std::string_view text)
{
    static const std::regex header{R"re(^\s*des\s*\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)\s*$)re"};
    static const std::regex edge{R"re(^\s*\(\s*(\d+)\s*,\s*(?:"([^"]*)"|([^,"\s][^,"]*?))\s*,\s*(\d+)\s*\)\s*$)re"};

    const auto lines = split_lines(text);
    std::size_t first = 0;
    while (first < lines.size() && strip(lines[first]).empty())
        ++first;
    if (first == lines.size())
        throw parse_error("empty model file");
    std::smatch m;
    if (!std::regex_match(lines[first], m, header))
        throw parse_error("line " + std::to_string(first + 1) + ": malformed header, expected des (i, t, s)");
    const std::size_t declared_transitions = to_index(m[2].str(), first + 1);
    const std::size_t states = to_index(m[3].str(), first + 1);

    ParsedAut out;
    std::vector<Transition> transitions;
    std::set<Transition> seen;
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        if (strip(lines[i]).empty())
            continue;
        if (!std::regex_match(lines[i], m, edge))
            throw parse_error("line " + std::to_string(i + 1) + ": malformed transition");
        const std::size_t from = to_index(m[1].str(), i + 1);
        const std::size_t to = to_index(m[4].str(), i + 1);
        const std::string label = m[2].matched ? m[2].str() : strip(m[3].str());
        if (from >= states || to >= states)
            throw parse_error("line " + std::to_string(i + 1) + ": state index out of range (" +
                              std::to_string(states) + " states declared)");
        if (label.empty())
            throw parse_error("line " + std::to_string(i + 1) + ": empty label");
        Transition t{static_cast<State>(from), Label{label}, static_cast<State>(to)};
        if (!seen.insert(t).second)
            out.warnings.push_back("line " + std::to_string(i + 1) + ": duplicate transition ignored");
        transitions.push_back(std::move(t));
    }
    if (transitions.size() != declared_transitions)
        throw parse_error("header declares " + std::to_string(declared_transitions) + " transitions, found " +
                          std::to_string(transitions.size()));
    out.lts = Lts{default_state_names(states), std::move(transitions)};
    return out;
}

std::string serialize_aut(const Lts& lts)
{
    std::ostringstream out;
    out << "des (0," << lts.transitions().size() << ',' << lts.size() << ")\n";
    for (const auto& t : lts.transitions())
        out << '(' << t.source << ",\"" << t.label.name() << "\"," << t.target << ")\n";
    return out.str();
}

Sidecar parse_sidecar(std::string_view text, const Lts& lts)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("sidecar is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw parse_error("sidecar must be a JSON object");

    Sidecar out;
    Lts named = lts;
    if (doc.contains("names")) {
        const auto& names = doc["names"];
        if (!names.is_array() || names.size() != lts.size())
            throw parse_error("sidecar names must list one identifier per state");
        std::vector<std::string> list;
        std::set<std::string> unique;
        for (const auto& n : names) {
            if (!n.is_string())
                throw parse_error("sidecar names must be strings");
            list.push_back(n.get<std::string>());
            if (!unique.insert(list.back()).second)
                throw parse_error("duplicate state name '" + list.back() + "'");
        }
        named = lts.renamed(list);
        out.names = std::move(list);
    }
    if (!doc.contains("kind"))
        return out;

    const auto kind = doc["kind"].get<std::string>();
    if (kind == "streett") {
        Streett spec;
        if (!doc.contains("pairs") || !doc["pairs"].is_array())
            throw parse_error("streett sidecar needs a list of pairs");
        for (const auto& pair : doc["pairs"]) {
            if (!pair.is_array() || pair.size() != 2)
                throw parse_error("a streett pair has exactly two state lists");
            spec.pairs.push_back(StreettPair{resolve_states(pair[0], named), resolve_states(pair[1], named)});
        }
        out.fairness = spec;
    } else if (kind == "always_after") {
        AlwaysAfter spec;
        if (!doc.contains("offset") || !doc["offset"].is_number_unsigned())
            throw parse_error("always_after sidecar needs a non-negative offset");
        spec.offset = doc["offset"].get<std::size_t>();
        spec.allowed = resolve_states(doc.value("states", nlohmann::json::array()), named);
        if (doc.contains("start"))
            spec.start = resolve_states(doc["start"], named);
        out.fairness = spec;
    } else {
        throw parse_error("unknown fairness kind '" + kind + "'");
    }
    return out;
}

FairLts Model::fair() const
{
    return make_fair(lts, fairness.value_or(FairnessSpec{Streett{}}));
}

Model load_model(std::string_view aut_text, std::optional<std::string_view> sidecar_text)
{
    auto parsed = parse_aut(aut_text);
    Model model{std::move(parsed.lts), std::nullopt, std::move(parsed.warnings)};
    if (sidecar_text) {
        auto side = parse_sidecar(*sidecar_text, model.lts);
        if (side.names)
            model.lts = model.lts.renamed(*side.names);
        model.fairness = std::move(side.fairness);
    }
    return model;
}

Model load_model(const std::filesystem::path& path)
{
    const auto text = read_text_file(path);
    auto sidecar_path = path;
    sidecar_path.replace_extension(".json");
    if (std::filesystem::exists(sidecar_path)) {
        const auto side = read_text_file(sidecar_path);
        return load_model(text, std::string_view{side});
    }
    return load_model(text, std::nullopt);
}

StateMap parse_state_map(std::string_view text, const Lts& source, const Lts& target)
{
    constexpr State unmapped = static_cast<State>(-1);
    StateMap f(source.size(), unmapped);
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = without_comment(lines[i]);
        if (line.empty())
            continue;
        const auto arrow = line.find("->");
        if (arrow == std::string::npos)
            throw parse_error("line " + std::to_string(i + 1) + ": expected 'source -> target'");
        const State s = state_by_name(source, strip(line.substr(0, arrow)), i + 1);
        const State t = state_by_name(target, strip(line.substr(arrow + 2)), i + 1);
        if (f[s] != unmapped && f[s] != t)
            throw parse_error("line " + std::to_string(i + 1) + ": state '" + source.name(s) + "' mapped twice");
        f[s] = t;
    }
    for (State s = 0; s < source.size(); ++s)
        if (f[s] == unmapped)
            throw parse_error("state '" + source.name(s) + "' is not mapped");
    return f;
}

std::string serialize_state_map(const StateMap& f, const Lts& source, const Lts& target)
{
    std::string out;
    for (State s = 0; s < f.size(); ++s)
        out += source.name(s) + " -> " + target.name(f[s]) + "\n";
    return out;
}

std::vector<std::pair<State, State>> parse_relation_pairs(std::string_view text, const Lts& lts)
{
    std::vector<std::pair<State, State>> out;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = without_comment(lines[i]);
        if (line.empty())
            continue;
        const auto tilde = line.find('~');
        if (tilde == std::string::npos)
            throw parse_error("line " + std::to_string(i + 1) + ": expected 's ~ t'");
        const State s = state_by_name(lts, strip(line.substr(0, tilde)), i + 1);
        const State t = state_by_name(lts, strip(line.substr(tilde + 1)), i + 1);
        out.emplace_back(s, t);
        out.emplace_back(t, s);
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in{path, std::ios::binary};
    if (!in)
        throw parse_error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace bisim
