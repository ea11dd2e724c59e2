#ifndef HAABSA_EMBEDDER_HPP
#define HAABSA_EMBEDDER_HPP

#include <memory>
#include <string>
#include <string_view>

#include "haabsa/autodiff.hpp"
#include "haabsa/embeddings.hpp"

namespace haabsa {

enum class Combiner { Bert, Elmo };

inline Combiner parse_combiner(std::string_view s) {
    if (s == "bert") return Combiner::Bert;
    if (s == "elmo") return Combiner::Elmo;
    throw ConfigError("unknown combiner '" + std::string(s) + "' (expected bert or elmo)");
}

/// Trainable ELMo mixing weights: pre-softmax layer logits and a scale.
struct ElmoParams {
    Parameter logits;
    Parameter gamma;

    explicit ElmoParams(std::size_t layers)
        : logits("elmo.s", Tensor(layers)), gamma("elmo.gamma", Tensor::vector({1.0})) {}

    ElmoWeights weights() const {
        return ElmoWeights::from_logits(logits.value.values(), gamma.value[0]);
    }
};

/// Supplies one input vector per token, either from a static word store or
/// from per-occurrence contextual layers.
class Embedder {
public:
    static Embedder noncontextual(std::shared_ptr<const NonContextualStore> store) {
        Embedder e;
        e.dim_ = store->dim();
        e.words_ = std::move(store);
        return e;
    }

    static Embedder contextual(std::shared_ptr<const ContextualStore> store, Combiner combiner) {
        if (combiner == Combiner::Bert && store->layer_count() < 4)
            throw ConfigError("BERT combination needs at least 4 layers, store has " +
                              std::to_string(store->layer_count()));
        Embedder e;
        e.dim_ = store->layer_dim();
        e.layers_ = std::move(store);
        e.combiner_ = combiner;
        return e;
    }

    std::size_t dim() const noexcept { return dim_; }
    bool is_contextual() const noexcept { return layers_ != nullptr; }
    Combiner combiner() const noexcept { return combiner_; }
    std::size_t layer_count() const noexcept { return layers_ ? layers_->layer_count() : 0; }
    const ContextualStore* contextual_store() const noexcept { return layers_.get(); }
    const NonContextualStore* word_store() const noexcept { return words_.get(); }

    /// Vector for token `index` of sentence `sid`. ELMo mixing goes through
    /// the tape when `elmo` is given so its weights receive gradients.
    Var embed(Tape& tape, const std::string& sid, std::size_t index, const std::string& token,
              const ElmoParams* elmo) const {
        if (words_)
            return tape.constant(words_->lookup(token));
        const std::vector<Tensor>& layers = layers_->layers(sid, index);
        if (combiner_ == Combiner::Bert)
            return tape.constant(bert_combine(layers));
        if (elmo == nullptr)
            return tape.constant(elmo_combine(layers, ElmoWeights::uniform(layers.size())));
        if (elmo->logits.value.size() != layers.size())
            throw ConfigError("model mixes " + std::to_string(elmo->logits.value.size()) +
                              " ELMo layers but the store provides " + std::to_string(layers.size()));
        std::vector<Var> rows;
        rows.reserve(layers.size());
        for (const Tensor& l : layers)
            rows.push_back(tape.constant(l));
        Var s = softmax(tape.param(elmo->logits));
        return scale(weighted_sum(rows, s), tape.param(elmo->gamma));
    }

private:
    Embedder() = default;

    std::size_t dim_ = 0;
    std::shared_ptr<const NonContextualStore> words_;
    std::shared_ptr<const ContextualStore> layers_;
    Combiner combiner_ = Combiner::Bert;
};

} // namespace haabsa

#endif
