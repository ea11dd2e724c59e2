#ifndef HAABSA_DATASET_HPP
#define HAABSA_DATASET_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "haabsa/errors.hpp"

namespace haabsa {

enum class Polarity { Negative = 0, Neutral = 1, Positive = 2 };

inline constexpr std::size_t kNumClasses = 3;

inline std::size_t label_to_index(Polarity p) noexcept { return static_cast<std::size_t>(p); }

inline Polarity index_to_label(std::size_t index) {
    if (index >= kNumClasses)
        throw ContractError("polarity index " + std::to_string(index) + " out of range [0,3)");
    return static_cast<Polarity>(index);
}

inline std::string_view to_string(Polarity p) noexcept {
    switch (p) {
    case Polarity::Negative: return "negative";
    case Polarity::Neutral: return "neutral";
    case Polarity::Positive: return "positive";
    }
    return "negative";
}

inline Polarity parse_polarity(std::string_view s) {
    if (s == "negative") return Polarity::Negative;
    if (s == "neutral") return Polarity::Neutral;
    if (s == "positive") return Polarity::Positive;
    throw ValidationError("unknown polarity '" + std::string(s) + "'");
}

/// Half-open token range [start, end).
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const noexcept { return end - start; }
    friend auto operator<=>(const Span&, const Span&) = default;
};

struct Sentence {
    std::string sid;
    std::vector<std::string> tokens;
    Span target;
    std::string category;
    Polarity polarity = Polarity::Neutral;

    void validate() const {
        if (target.start >= target.end)
            throw ValidationError("sentence '" + sid + "': empty target span [" + std::to_string(target.start) +
                                  "," + std::to_string(target.end) + ")");
        if (target.end > tokens.size())
            throw ValidationError("sentence '" + sid + "': target span end " + std::to_string(target.end) +
                                  " exceeds token count " + std::to_string(tokens.size()));
    }
};

/// A sentence cut into left context, target and right context. Offsets
/// keep each token addressable in the original sentence.
struct SplitSentence {
    std::string sid;
    std::vector<std::string> left;
    std::vector<std::string> target;
    std::vector<std::string> right;

    std::size_t target_offset() const noexcept { return left.size(); }
    std::size_t right_offset() const noexcept { return left.size() + target.size(); }

    std::vector<std::string> joined() const {
        std::vector<std::string> all = left;
        all.insert(all.end(), target.begin(), target.end());
        all.insert(all.end(), right.begin(), right.end());
        return all;
    }
};

inline SplitSentence split_around_target(const Sentence& s) {
    SplitSentence out;
    out.sid = s.sid;
    const auto begin = s.tokens.begin();
    out.left.assign(begin, begin + static_cast<std::ptrdiff_t>(s.target.start));
    out.target.assign(begin + static_cast<std::ptrdiff_t>(s.target.start),
                      begin + static_cast<std::ptrdiff_t>(s.target.end));
    out.right.assign(begin + static_cast<std::ptrdiff_t>(s.target.end), s.tokens.end());
    return out;
}

enum class SplitTag { Train, Test, Unspecified };

struct Corpus {
    std::vector<Sentence> sentences;
    SplitTag split = SplitTag::Unspecified;
    std::string source;

    std::size_t size() const noexcept { return sentences.size(); }
    bool empty() const noexcept { return sentences.empty(); }
};

inline Sentence sentence_from_json(const nlohmann::json& j) {
    Sentence s;
    s.sid = j.at("sid").get<std::string>();
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    const auto& span = j.at("target");
    if (!span.is_array() || span.size() != 2)
        throw ValidationError("sentence '" + s.sid + "': target must be [start, end]");
    const auto start = span.at(0).get<long long>();
    const auto end = span.at(1).get<long long>();
    if (start < 0 || end < 0)
        throw ValidationError("sentence '" + s.sid + "': negative target index");
    s.target = {static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
    s.category = j.at("category").get<std::string>();
    try {
        s.polarity = parse_polarity(j.at("polarity").get<std::string>());
    } catch (const ValidationError& e) {
        throw ValidationError("sentence '" + s.sid + "': " + e.what());
    }
    s.validate();
    return s;
}

inline nlohmann::json sentence_to_json(const Sentence& s) {
    return {{"sid", s.sid},
            {"tokens", s.tokens},
            {"target", {s.target.start, s.target.end}},
            {"category", s.category},
            {"polarity", to_string(s.polarity)}};
}

/// Reads the JSON-lines corpus format. Every malformed line raises a
/// ParseError carrying its line number; blank lines are ignored.
inline Corpus parse_corpus(std::istream& in, const std::string& source = "<stream>",
                           SplitTag split = SplitTag::Unspecified) {
    Corpus corpus;
    corpus.split = split;
    corpus.source = source;
    std::set<std::pair<std::string, Span>> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        Sentence s;
        try {
            s = sentence_from_json(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source, lineno, e.what());
        } catch (const ValidationError& e) {
            throw ParseError(source, lineno, e.what());
        }
        if (!seen.emplace(s.sid, s.target).second)
            throw ParseError(source, lineno,
                             "duplicate sentence '" + s.sid + "' with target [" + std::to_string(s.target.start) +
                                 "," + std::to_string(s.target.end) + ")");
        corpus.sentences.push_back(std::move(s));
    }
    return corpus;
}

inline Corpus parse_corpus(const std::string& path, SplitTag split = SplitTag::Unspecified) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open corpus file '" + path + "'");
    return parse_corpus(in, path, split);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const Sentence& s : corpus.sentences)
        out << sentence_to_json(s).dump() << '\n';
}

struct ClassDistribution {
    std::array<std::size_t, kNumClasses> counts{};
    std::array<double, kNumClasses> percentages{}; // rounded to one decimal
    std::size_t total = 0;

    std::size_t count(Polarity p) const { return counts[label_to_index(p)]; }
    double percent(Polarity p) const { return percentages[label_to_index(p)]; }
};

inline ClassDistribution class_distribution(std::span<const Sentence> sentences) {
    if (sentences.empty())
        throw ValidationError("class distribution of an empty corpus");
    ClassDistribution d;
    for (const Sentence& s : sentences)
        ++d.counts[label_to_index(s.polarity)];
    d.total = sentences.size();
    for (std::size_t k = 0; k < kNumClasses; ++k)
        d.percentages[k] = std::round(1000.0 * static_cast<double>(d.counts[k]) / static_cast<double>(d.total)) / 10.0;
    return d;
}

inline ClassDistribution class_distribution(const Corpus& c) { return class_distribution(c.sentences); }

/// Most frequent polarity; ties go to the lowest class index.
inline Polarity majority_label(const Corpus& c) {
    const ClassDistribution d = class_distribution(c);
    std::size_t best = 0;
    for (std::size_t k = 1; k < kNumClasses; ++k)
        if (d.counts[k] > d.counts[best])
            best = k;
    return index_to_label(best);
}

} // namespace haabsa

#endif
