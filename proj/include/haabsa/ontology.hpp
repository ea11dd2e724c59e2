#ifndef HAABSA_ONTOLOGY_HPP
#define HAABSA_ONTOLOGY_HPP

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "haabsa/dataset.hpp"
#include "haabsa/errors.hpp"

namespace haabsa {

// The kind number doubles as the id of the rule it triggers.
enum class ConceptKind { Generic = 1, AspectSpecific = 2, ContextDependent = 3 };

struct SentimentConcept {
    ConceptKind kind = ConceptKind::Generic;
    Polarity polarity = Polarity::Positive;           // Generic, AspectSpecific
    std::string category;                             // AspectSpecific
    std::map<std::string, Polarity> by_category;      // ContextDependent
};

struct RuleHit {
    int rule = 0;
    std::string form;
    Polarity polarity = Polarity::Positive;

    friend bool operator==(const RuleHit&, const RuleHit&) = default;
};

enum class Outcome { Positive, Negative, Inconclusive };
enum class InconclusiveReason { None, Conflict, NoHit };

struct OntologyVerdict {
    Outcome outcome = Outcome::Inconclusive;
    InconclusiveReason reason = InconclusiveReason::NoHit;
    std::vector<RuleHit> trace;

    bool conclusive() const noexcept { return outcome != Outcome::Inconclusive; }

    std::optional<Polarity> polarity() const noexcept {
        if (outcome == Outcome::Positive) return Polarity::Positive;
        if (outcome == Outcome::Negative) return Polarity::Negative;
        return std::nullopt;
    }

    friend bool operator==(const OntologyVerdict&, const OntologyVerdict&) = default;
};

inline std::string_view to_string(InconclusiveReason r) noexcept {
    switch (r) {
    case InconclusiveReason::Conflict: return "conflict";
    case InconclusiveReason::NoHit: return "no_hit";
    case InconclusiveReason::None: break;
    }
    return "none";
}

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Lowercases and collapses whitespace; at most two words are accepted.
inline std::string normalize_form(std::string_view form) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : form) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) {
                words.push_back(lower(cur));
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty())
        words.push_back(lower(cur));
    if (words.empty() || words.size() > 2)
        throw ValidationError("ontology surface form '" + std::string(form) + "' must be one or two words");
    return words.size() == 1 ? words[0] : words[0] + " " + words[1];
}

inline Polarity parse_polar(const std::string& s, const std::string& form) {
    if (s == "positive") return Polarity::Positive;
    if (s == "negative") return Polarity::Negative;
    throw ValidationError("ontology entry '" + form + "': polarity must be positive or negative, got '" + s + "'");
}

} // namespace detail

/// Flat lexicalized sentiment ontology. A surface form belongs to at most one
/// concept kind, so at most one rule can fire for it.
class Ontology {
public:
    void add_aspect(std::string_view form, std::string category) {
        const std::string key = detail::normalize_form(form);
        if (!aspects_.emplace(key, std::move(category)).second)
            throw ValidationError("duplicate aspect surface form '" + key + "'");
    }

    void add_generic(std::string_view form, Polarity p) {
        SentimentConcept c;
        c.kind = ConceptKind::Generic;
        c.polarity = require_polar(p, form);
        add_concept(form, std::move(c));
    }

    void add_aspect_specific(std::string_view form, std::string category, Polarity p) {
        SentimentConcept c;
        c.kind = ConceptKind::AspectSpecific;
        c.polarity = require_polar(p, form);
        c.category = std::move(category);
        add_concept(form, std::move(c));
    }

    void add_context_dependent(std::string_view form, std::map<std::string, Polarity> by_category) {
        if (by_category.empty())
            throw ValidationError("context-dependent entry '" + std::string(form) + "' has an empty category map");
        for (const auto& [_, p] : by_category)
            require_polar(p, form);
        SentimentConcept c;
        c.kind = ConceptKind::ContextDependent;
        c.by_category = std::move(by_category);
        add_concept(form, std::move(c));
    }

    const std::map<std::string, SentimentConcept>& concepts() const noexcept { return concepts_; }
    const std::map<std::string, std::string>& aspects() const noexcept { return aspects_; }
    std::size_t size() const noexcept { return concepts_.size(); }

    std::optional<std::string> aspect_category(std::string_view form) const {
        auto it = aspects_.find(detail::normalize_form(form));
        if (it == aspects_.end())
            return std::nullopt;
        return it->second;
    }

    void remove_concept(const std::string& form) { concepts_.erase(detail::normalize_form(form)); }

private:
    static Polarity require_polar(Polarity p, std::string_view form) {
        if (p == Polarity::Neutral)
            throw ValidationError("ontology entry '" + std::string(form) + "' cannot be neutral");
        return p;
    }

    void add_concept(std::string_view form, SentimentConcept c) {
        const std::string key = detail::normalize_form(form);
        if (!concepts_.emplace(key, std::move(c)).second)
            throw ValidationError("surface form '" + key + "' is listed more than once");
    }

    std::map<std::string, std::string> aspects_;
    std::map<std::string, SentimentConcept> concepts_;
};

/// Matches lowercased unigrams and bigrams of the whole sentence against the
/// ontology, in sentence order. Each surface form is reported once.
inline std::vector<RuleHit> find_hits(const Ontology& onto, const Sentence& s) {
    std::vector<std::string> words;
    words.reserve(s.tokens.size());
    for (const auto& t : s.tokens)
        words.push_back(detail::lower(t));

    std::vector<RuleHit> hits;
    std::set<std::string> fired;
    auto consider = [&](const std::string& form) {
        auto it = onto.concepts().find(form);
        if (it == onto.concepts().end() || fired.count(form))
            return;
        const SentimentConcept& c = it->second;
        switch (c.kind) {
        case ConceptKind::Generic:
            hits.push_back({1, form, c.polarity});
            break;
        case ConceptKind::AspectSpecific:
            if (c.category == s.category)
                hits.push_back({2, form, c.polarity});
            break;
        case ConceptKind::ContextDependent:
            if (auto m = c.by_category.find(s.category); m != c.by_category.end())
                hits.push_back({3, form, m->second});
            break;
        }
        fired.insert(form);
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
        consider(words[i]);
        if (i + 1 < words.size())
            consider(words[i] + " " + words[i + 1]);
    }
    return hits;
}

inline OntologyVerdict classify(const Ontology& onto, const Sentence& s) {
    OntologyVerdict v;
    v.trace = find_hits(onto, s);
    if (v.trace.empty()) {
        v.outcome = Outcome::Inconclusive;
        v.reason = InconclusiveReason::NoHit;
        return v;
    }
    const Polarity first = v.trace.front().polarity;
    const bool unanimous =
        std::all_of(v.trace.begin(), v.trace.end(), [first](const RuleHit& h) { return h.polarity == first; });
    if (!unanimous) {
        v.outcome = Outcome::Inconclusive;
        v.reason = InconclusiveReason::Conflict;
        return v;
    }
    v.outcome = first == Polarity::Positive ? Outcome::Positive : Outcome::Negative;
    v.reason = InconclusiveReason::None;
    return v;
}

/// Reads the JSON ontology file with arrays `aspects`, `generic`,
/// `aspect_specific` and `context_dependent`. Missing arrays count as empty.
inline Ontology ontology_from_json(const nlohmann::json& j) {
    Ontology onto;
    auto entries = [&j](const char* key) {
        return j.contains(key) ? j.at(key) : nlohmann::json::array();
    };
    for (const auto& e : entries("aspects"))
        onto.add_aspect(e.at("form").get<std::string>(), e.at("category").get<std::string>());
    for (const auto& e : entries("generic")) {
        const auto form = e.at("form").get<std::string>();
        onto.add_generic(form, detail::parse_polar(e.at("polarity").get<std::string>(), form));
    }
    for (const auto& e : entries("aspect_specific")) {
        const auto form = e.at("form").get<std::string>();
        onto.add_aspect_specific(form, e.at("category").get<std::string>(),
                                 detail::parse_polar(e.at("polarity").get<std::string>(), form));
    }
    for (const auto& e : entries("context_dependent")) {
        const auto form = e.at("form").get<std::string>();
        std::map<std::string, Polarity> m;
        for (const auto& [cat, pol] : e.at("polarities").items())
            m.emplace(cat, detail::parse_polar(pol.get<std::string>(), form));
        onto.add_context_dependent(form, std::move(m));
    }
    return onto;
}

inline Ontology load_ontology(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open ontology file '" + path + "'");
    try {
        return ontology_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

} // namespace haabsa

#endif
