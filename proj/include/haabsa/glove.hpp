#ifndef HAABSA_GLOVE_HPP
#define HAABSA_GLOVE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "haabsa/errors.hpp"
#include "haabsa/tensor.hpp"

namespace haabsa {

/// Symmetric word co-occurrence counts over a fixed vocabulary.
class CooccurrenceTable {
public:
    CooccurrenceTable() = default;
    CooccurrenceTable(std::vector<std::string> vocabulary, std::size_t window)
        : vocab_(std::move(vocabulary)), window_(window), counts_(vocab_.size() * vocab_.size(), 0.0) {
        for (std::size_t i = 0; i < vocab_.size(); ++i)
            if (!index_.emplace(vocab_[i], i).second)
                throw ConfigError("duplicate vocabulary entry '" + vocab_[i] + "'");
    }

    const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }
    std::size_t vocab_size() const noexcept { return vocab_.size(); }
    std::size_t window() const noexcept { return window_; }

    std::size_t index_of(const std::string& word) const {
        auto it = index_.find(word);
        if (it == index_.end())
            throw ConfigError("word '" + word + "' not in co-occurrence vocabulary");
        return it->second;
    }

    double& at(std::size_t i, std::size_t k) { return counts_[i * vocab_.size() + k]; }
    double at(std::size_t i, std::size_t k) const { return counts_[i * vocab_.size() + k]; }
    double count(const std::string& a, const std::string& b) const { return at(index_of(a), index_of(b)); }

    bool all_zero() const {
        return std::all_of(counts_.begin(), counts_.end(), [](double x) { return x == 0.0; });
    }

private:
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t window_ = 1;
    std::vector<double> counts_;
};

/// Counts every pair of positions at distance 1..window, in both directions.
/// Vocabulary order is first appearance.
inline CooccurrenceTable build_cooccurrence(std::span<const std::vector<std::string>> corpus, std::size_t window) {
    if (window < 1)
        throw ConfigError("co-occurrence window must be at least 1");
    std::vector<std::string> vocab;
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& sentence : corpus)
        for (const auto& w : sentence)
            if (seen.emplace(w, vocab.size()).second)
                vocab.push_back(w);
    CooccurrenceTable table(vocab, window);
    for (const auto& sentence : corpus) {
        for (std::size_t p = 0; p < sentence.size(); ++p) {
            const std::size_t i = seen.at(sentence[p]);
            for (std::size_t q = p + 1; q < sentence.size() && q - p <= window; ++q) {
                const std::size_t k = seen.at(sentence[q]);
                table.at(i, k) += 1.0;
                table.at(k, i) += 1.0;
            }
        }
    }
    return table;
}

/// f(x) = min(1, (x / x_max)^alpha).
struct GloveWeighting {
    double x_max = 100.0;
    double alpha = 0.75;

    double operator()(double x) const {
        if (x <= 0.0)
            return 0.0;
        return x >= x_max ? 1.0 : std::pow(x / x_max, alpha);
    }
};

/// One vector and one bias per word, shared by both roles in a pair.
struct GloveModel {
    std::vector<std::string> vocabulary;
    Tensor vectors; // vocab x dim
    Tensor biases;  // vocab

    std::size_t dim() const noexcept { return vectors.cols(); }

    double score(std::size_t i, std::size_t k) const {
        double s = biases[i] + biases[k];
        for (std::size_t c = 0; c < dim(); ++c)
            s += vectors(i, c) * vectors(k, c);
        return s;
    }
};

/// Weighted least-squares cost over all pairs with a positive count.
inline double glove_cost(const GloveModel& model, const CooccurrenceTable& table, const GloveWeighting& f = {}) {
    if (model.vocabulary != table.vocabulary())
        throw ConfigError("glove_cost: model and table vocabularies differ");
    double cost = 0.0;
    const std::size_t v = table.vocab_size();
    for (std::size_t i = 0; i < v; ++i)
        for (std::size_t k = 0; k < v; ++k) {
            const double x = table.at(i, k);
            if (x <= 0.0)
                continue;
            const double r = model.score(i, k) - std::log(x);
            cost += f(x) * r * r;
        }
    return cost;
}

struct GloveTrainResult {
    GloveModel model;
    std::vector<double> cost_trace; // cost at init, then after each epoch
};

/// Full-batch gradient descent on the GloVe cost.
inline GloveTrainResult glove_train(const CooccurrenceTable& table, std::size_t dim, std::size_t epochs,
                                    double learning_rate, std::uint64_t seed, const GloveWeighting& f = {}) {
    if (dim < 1)
        throw ConfigError("GloVe dimension must be at least 1");
    const std::size_t v = table.vocab_size();
    if (v == 0)
        throw ConfigError("GloVe training needs a nonempty vocabulary");
    Rng rng(seed);
    GloveTrainResult result;
    GloveModel& m = result.model;
    m.vocabulary = table.vocabulary();
    m.vectors = Tensor::uniform(v, dim, 0.5 / static_cast<double>(dim), rng);
    m.biases = Tensor(v);

    result.cost_trace.push_back(glove_cost(m, table, f));
    Tensor grad_w(v, dim);
    Tensor grad_b(v);
    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        grad_w.set_zero();
        grad_b.set_zero();
        for (std::size_t i = 0; i < v; ++i)
            for (std::size_t k = 0; k < v; ++k) {
                const double x = table.at(i, k);
                if (x <= 0.0)
                    continue;
                const double g = 2.0 * f(x) * (m.score(i, k) - std::log(x));
                for (std::size_t c = 0; c < dim; ++c) {
                    grad_w(i, c) += g * m.vectors(k, c);
                    grad_w(k, c) += g * m.vectors(i, c);
                }
                grad_b[i] += g;
                grad_b[k] += g;
            }
        for (std::size_t n = 0; n < grad_w.size(); ++n)
            m.vectors[n] -= learning_rate * grad_w[n];
        for (std::size_t n = 0; n < v; ++n)
            m.biases[n] -= learning_rate * grad_b[n];
        const double cost = glove_cost(m, table, f);
        if (!std::isfinite(cost))
            throw DivergenceError(epoch, 0, "GloVe cost became non-finite");
        result.cost_trace.push_back(cost);
    }
    return result;
}

} // namespace haabsa

#endif
