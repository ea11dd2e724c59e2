#ifndef HAABSA_EMBEDDINGS_HPP
#define HAABSA_EMBEDDINGS_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "haabsa/dataset.hpp"
#include "haabsa/errors.hpp"
#include "haabsa/tensor.hpp"

namespace haabsa {

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Shortest representation that parses back to the same double.
inline void write_double(std::ostream& out, double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    out.write(buf, end - buf);
}

} // namespace detail

enum class OovPolicy { Zero, HashedUniform };

inline OovPolicy parse_oov_policy(std::string_view s) {
    if (s == "zero") return OovPolicy::Zero;
    if (s == "hashed") return OovPolicy::HashedUniform;
    throw ConfigError("unknown OOV policy '" + std::string(s) + "' (expected zero or hashed)");
}

/// Word vectors that do not depend on context: one row per token.
class NonContextualStore {
public:
    explicit NonContextualStore(std::size_t dim, OovPolicy policy = OovPolicy::Zero, std::uint64_t oov_seed = 0)
        : dim_(dim), policy_(policy), oov_seed_(oov_seed) {
        if (dim == 0)
            throw ConfigError("embedding dimension must be positive");
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return vectors_.size(); }
    OovPolicy oov_policy() const noexcept { return policy_; }
    void set_oov_policy(OovPolicy p, std::uint64_t seed = 0) {
        policy_ = p;
        oov_seed_ = seed;
    }

    bool contains(const std::string& token) const { return vectors_.count(token) != 0; }

    void insert(const std::string& token, Tensor v) {
        if (v.size() != dim_ || !v.is_vector())
            throw DimensionError("embedding for '" + token + "' has shape " + v.shape_string() + ", store dim is " +
                                 std::to_string(dim_));
        if (vectors_.emplace(token, std::move(v)).second)
            order_.push_back(token);
    }

    /// Stored vector, or the OOV policy's vector for unknown tokens.
    Tensor lookup(const std::string& token) const {
        if (auto it = vectors_.find(token); it != vectors_.end())
            return it->second;
        Tensor v(dim_);
        if (policy_ == OovPolicy::HashedUniform) {
            Rng rng(detail::fnv1a(token) ^ oov_seed_);
            std::uniform_real_distribution<double> dist(-0.1, 0.1);
            for (double& x : v.values())
                x = dist(rng);
        }
        return v;
    }

    /// Tokens in insertion order.
    const std::vector<std::string>& tokens() const noexcept { return order_; }

private:
    std::size_t dim_;
    OovPolicy policy_;
    std::uint64_t oov_seed_;
    std::unordered_map<std::string, Tensor> vectors_;
    std::vector<std::string> order_;
};

/// Parses `token v1 ... vd` lines. The dimension comes from the first row
/// unless `expected_dim` is given.
inline NonContextualStore load_noncontextual(std::istream& in, const std::string& source = "<stream>",
                                             std::optional<std::size_t> expected_dim = std::nullopt,
                                             OovPolicy policy = OovPolicy::Zero) {
    std::optional<NonContextualStore> store;
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::istringstream fields(line);
        std::string token;
        if (!(fields >> token))
            continue;
        row.clear();
        std::string field;
        while (fields >> field) {
            double x = 0.0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
            if (ec != std::errc() || ptr != field.data() + field.size())
                throw ParseError(source, lineno, "bad number '" + field + "' for token '" + token + "'");
            row.push_back(x);
        }
        if (!store) {
            if (row.empty())
                throw ParseError(source, lineno, "token '" + token + "' has no vector");
            if (expected_dim && *expected_dim != row.size())
                throw ConfigError(source + ": vectors have dimension " + std::to_string(row.size()) + ", expected " +
                                  std::to_string(*expected_dim));
            store.emplace(row.size(), policy);
        }
        if (row.size() != store->dim())
            throw ParseError(source, lineno,
                             "token '" + token + "' has " + std::to_string(row.size()) + " values, expected " +
                                 std::to_string(store->dim()));
        store->insert(token, Tensor::vector(row));
    }
    if (!store)
        throw ConfigError(source + ": embedding file is empty");
    return std::move(*store);
}

inline NonContextualStore load_noncontextual(const std::string& path,
                                             std::optional<std::size_t> expected_dim = std::nullopt,
                                             OovPolicy policy = OovPolicy::Zero) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open embedding file '" + path + "'");
    return load_noncontextual(in, path, expected_dim, policy);
}

inline void write_noncontextual(std::ostream& out, const NonContextualStore& store) {
    for (const std::string& token : store.tokens()) {
        out << token;
        const Tensor v = store.lookup(token);
        for (double x : v.values()) {
            out << ' ';
            detail::write_double(out, x);
        }
        out << '\n';
    }
}

/// Per-occurrence layer vectors keyed by (sentence id, token index).
class ContextualStore {
public:
    ContextualStore(std::size_t layer_count, std::size_t layer_dim) : layers_(layer_count), dim_(layer_dim) {
        if (layer_count == 0 || layer_dim == 0)
            throw ConfigError("contextual store needs positive layer count and dimension");
    }

    std::size_t layer_count() const noexcept { return layers_; }
    std::size_t layer_dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const nlohmann::json& header() const noexcept { return header_; }
    void set_header(nlohmann::json h) { header_ = std::move(h); }

    void insert(const std::string& sid, std::size_t token, std::vector<Tensor> layers) {
        if (layers.size() != layers_)
            throw DimensionError("occurrence (" + sid + "," + std::to_string(token) + ") has " +
                                 std::to_string(layers.size()) + " layers, store has " + std::to_string(layers_));
        for (const Tensor& l : layers)
            if (l.size() != dim_)
                throw DimensionError("occurrence (" + sid + "," + std::to_string(token) + ") has a layer of size " +
                                     std::to_string(l.size()) + ", store dim is " + std::to_string(dim_));
        entries_[{sid, token}] = std::move(layers);
    }

    const std::vector<Tensor>& layers(const std::string& sid, std::size_t token) const {
        auto it = entries_.find({sid, token});
        if (it == entries_.end())
            throw ConfigError("no contextual vectors for sentence '" + sid + "' token " + std::to_string(token));
        return it->second;
    }

    bool contains(const std::string& sid, std::size_t token) const { return entries_.count({sid, token}) != 0; }

    /// Every sentence of the corpus must have exactly one entry per token.
    void validate_against(const Corpus& corpus) const {
        std::map<std::string, std::size_t> lengths;
        for (const Sentence& s : corpus.sentences) {
            auto [it, fresh] = lengths.emplace(s.sid, s.tokens.size());
            if (!fresh && it->second != s.tokens.size())
                throw ValidationError("sentence '" + s.sid + "' appears with different token counts");
        }
        std::map<std::string, std::size_t> counts;
        for (const auto& [key, _] : entries_)
            ++counts[key.first];
        for (const auto& [sid, n] : lengths) {
            for (std::size_t i = 0; i < n; ++i)
                if (!contains(sid, i))
                    throw ValidationError("contextual store lacks sentence '" + sid + "' token " + std::to_string(i));
            if (counts[sid] != n)
                throw ValidationError("contextual store has " + std::to_string(counts[sid]) + " tokens for sentence '" +
                                      sid + "', corpus has " + std::to_string(n));
        }
    }

    template <class Fn>
    void for_each(Fn&& fn) const {
        for (const auto& [key, layers] : entries_)
            fn(key.first, key.second, layers);
    }

private:
    std::size_t layers_;
    std::size_t dim_;
    std::map<std::pair<std::string, std::size_t>, std::vector<Tensor>> entries_;
    nlohmann::json header_;
};

/// JSON lines `{"sid":..., "tok":..., "layers":[[...], ...]}`; an optional
/// `{"header": {...}}` line records provenance.
inline ContextualStore load_contextual(std::istream& in, const std::string& source = "<stream>") {
    std::optional<ContextualStore> store;
    nlohmann::json header;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (j.contains("header")) {
                header = j.at("header");
                continue;
            }
            const auto sid = j.at("sid").get<std::string>();
            const auto tok = j.at("tok").get<long long>();
            if (tok < 0)
                throw ParseError(source, lineno, "negative token index");
            std::vector<Tensor> layers;
            for (const auto& l : j.at("layers"))
                layers.push_back(Tensor::vector(l.get<std::vector<double>>()));
            if (layers.empty() || layers.front().size() == 0)
                throw ParseError(source, lineno, "occurrence without layer vectors");
            if (!store)
                store.emplace(layers.size(), layers.front().size());
            store->insert(sid, static_cast<std::size_t>(tok), std::move(layers));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source, lineno, e.what());
        } catch (const DimensionError& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    if (!store)
        throw ConfigError(source + ": contextual embedding file has no records");
    store->set_header(std::move(header));
    return std::move(*store);
}

inline ContextualStore load_contextual(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open contextual embedding file '" + path + "'");
    return load_contextual(in, path);
}

inline void write_contextual(std::ostream& out, const ContextualStore& store) {
    if (!store.header().is_null())
        out << nlohmann::json{{"header", store.header()}}.dump() << '\n';
    store.for_each([&out](const std::string& sid, std::size_t tok, const std::vector<Tensor>& layers) {
        nlohmann::json j{{"sid", sid}, {"tok", tok}, {"layers", nlohmann::json::array()}};
        for (const Tensor& l : layers)
            j["layers"].push_back(l.storage());
        out << j.dump() << '\n';
    });
}

/// Normalized layer-mixing weights and the overall scale of an ELMo-style
/// combination. Trainable copies live in the model as pre-softmax logits.
struct ElmoWeights {
    std::vector<double> s;
    double gamma = 1.0;

    static ElmoWeights from_logits(std::span<const double> logits, double gamma) {
        const Tensor norm = softmax(Tensor::vector(std::vector<double>(logits.begin(), logits.end())));
        return {std::vector<double>(norm.values().begin(), norm.values().end()), gamma};
    }

    static ElmoWeights uniform(std::size_t layers, double gamma = 1.0) {
        return {std::vector<double>(layers, 1.0 / static_cast<double>(layers)), gamma};
    }

    void check_normalized() const {
        const double total = std::accumulate(s.begin(), s.end(), 0.0);
        if (s.empty() || std::abs(total - 1.0) > 1e-12)
            throw ConfigError("ELMo layer weights must sum to 1, got " + std::to_string(total));
        for (double w : s)
            if (w < 0.0)
                throw ConfigError("ELMo layer weights must be nonnegative");
    }
};

/// gamma * sum_j s_j * h_j over all supplied layers.
inline Tensor elmo_combine(std::span<const Tensor> layers, const ElmoWeights& w) {
    if (layers.size() != w.s.size())
        throw ConfigError("elmo_combine: " + std::to_string(layers.size()) + " layers but " +
                          std::to_string(w.s.size()) + " weights");
    w.check_normalized();
    Tensor out = Tensor::zeros_like(layers.front());
    for (std::size_t j = 0; j < layers.size(); ++j) {
        Tensor::require_same_shape(out, layers[j], "elmo_combine");
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] += w.s[j] * layers[j][k];
    }
    out *= w.gamma;
    return out;
}

/// Sum of the final four layers.
inline Tensor bert_combine(std::span<const Tensor> layers) {
    if (layers.size() < 4)
        throw ConfigError("bert_combine needs at least 4 layers, got " + std::to_string(layers.size()));
    Tensor out = Tensor::zeros_like(layers.back());
    for (std::size_t j = layers.size() - 4; j < layers.size(); ++j) {
        Tensor::require_same_shape(out, layers[j], "bert_combine");
        out += layers[j];
    }
    return out;
}

} // namespace haabsa

#endif
