#ifndef HAABSA_TRAINING_HPP
#define HAABSA_TRAINING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "haabsa/autodiff.hpp"
#include "haabsa/dataset.hpp"
#include "haabsa/embedder.hpp"
#include "haabsa/lcr_rot.hpp"

namespace haabsa {

struct Hyperparams {
    double learning_rate = 0.05;
    double momentum = 0.9;
    double l2 = 1e-5;
    double dropout = 0.0;
    std::size_t epochs = 20;
    std::uint64_t seed = 1;
    std::size_t batch_size = 1;
    double init_bound = 0.01;

    void validate() const {
        if (!(learning_rate >= 0.0))
            throw ConfigError("learning rate must be nonnegative");
        if (!(momentum >= 0.0 && momentum < 1.0))
            throw ConfigError("momentum must lie in [0,1)");
        if (!(l2 >= 0.0))
            throw ConfigError("L2 coefficient must be nonnegative");
        if (!(dropout >= 0.0 && dropout < 1.0))
            throw ConfigError("dropout rate must lie in [0,1)");
        if (batch_size < 1)
            throw ConfigError("batch size must be at least 1");
        if (!(init_bound > 0.0))
            throw ConfigError("initialization bound must be positive");
    }
};

/// Cross-entropy of the gold class plus l2 times the squared Frobenius norm
/// of every regularized (weight-matrix) parameter.
inline Var loss(Tape& t, Var probs, std::size_t gold, std::span<const Parameter* const> params, double l2) {
    Var ce = neg_log_at(probs, gold);
    if (l2 == 0.0)
        return ce;
    std::vector<Var> norms;
    for (const Parameter* p : params)
        if (p->regularized)
            norms.push_back(squared_norm(t.param(*p)));
    if (norms.empty())
        return ce;
    const std::array<Var, 2> terms{ce, scale(sum(norms), l2)};
    return sum(terms);
}

inline double loss_value(const Tensor& probs, std::size_t gold, std::span<const Parameter* const> params, double l2) {
    Tape t;
    return loss(t, t.constant(probs), gold, params, l2).value()[0];
}

/// Every value i.i.d. uniform on [-bound, bound].
inline void init_uniform(std::span<Parameter* const> params, double bound, std::uint64_t seed) {
    if (!(bound > 0.0))
        throw ConfigError("initialization bound must be positive");
    Rng rng(seed);
    for (Parameter* p : params)
        p->value.fill_uniform(bound, rng);
}

/// Velocity buffers mirroring a parameter list.
class OptimizerState {
public:
    explicit OptimizerState(std::span<Parameter* const> params) {
        velocity_.reserve(params.size());
        for (const Parameter* p : params)
            velocity_.push_back(Tensor::zeros_like(p->value));
    }

    std::vector<Tensor>& velocity() noexcept { return velocity_; }
    const std::vector<Tensor>& velocity() const noexcept { return velocity_; }

private:
    std::vector<Tensor> velocity_;
};

/// v <- momentum * v - lr * grad; value <- value + v; then clears gradients.
inline void sgd_momentum_step(std::span<Parameter* const> params, OptimizerState& state, double lr, double momentum) {
    auto& vel = state.velocity();
    if (vel.size() != params.size())
        throw ContractError("optimizer state tracks " + std::to_string(vel.size()) + " tensors, got " +
                            std::to_string(params.size()) + " parameters");
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        Tensor& v = vel[k];
        Tensor::require_same_shape(v, p.value, "sgd_momentum_step");
        if (p.trainable) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                v[i] = momentum * v[i] - lr * p.grad[i];
                p.value[i] += v[i];
            }
        }
        p.zero_grad();
    }
}

struct Evaluation {
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    // confusion[gold][predicted]
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
};

/// Accuracy of a prediction function over a corpus.
inline Evaluation evaluate_with(const Corpus& corpus, const std::function<std::size_t(const Sentence&)>& predictor) {
    if (corpus.empty())
        throw ValidationError("cannot evaluate on an empty corpus");
    Evaluation e;
    for (const Sentence& s : corpus.sentences) {
        const std::size_t gold = label_to_index(s.polarity);
        const std::size_t pred = predictor(s);
        ++e.confusion[gold][pred];
        if (pred == gold)
            ++e.correct;
    }
    e.total = corpus.size();
    e.accuracy = static_cast<double>(e.correct) / static_cast<double>(e.total);
    return e;
}

inline Evaluation evaluate(const Corpus& corpus, const Embedder& embedder, const LcrRotModel& model) {
    return evaluate_with(corpus, [&](const Sentence& s) { return predict(split_around_target(s), embedder, model); });
}

struct EpochStats {
    std::size_t epoch = 0;
    double loss = 0.0;           // mean training loss over the epoch
    double train_accuracy = 0.0; // inference-mode accuracy after the epoch
};

inline nlohmann::json to_json(const EpochStats& e) {
    return {{"epoch", e.epoch}, {"loss", e.loss}, {"train_acc", e.train_accuracy}};
}

struct TrainResult {
    LcrRotModel model;
    std::vector<EpochStats> trace;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Continues training an existing model with per-example (or mini-batch)
/// SGD with momentum over seeded shuffles of the corpus.
inline std::vector<EpochStats> train_model(LcrRotModel& model, const Corpus& corpus, const Embedder& embedder,
                                           const Hyperparams& hyper, const EpochCallback& on_epoch = {}) {
    hyper.validate();
    if (corpus.empty())
        throw ValidationError("training corpus is empty");
    model.config.dropout = hyper.dropout;
    std::vector<SplitSentence> splits;
    splits.reserve(corpus.size());
    for (const Sentence& s : corpus.sentences)
        splits.push_back(split_around_target(s));

    const std::vector<Parameter*> params = model.parameters();
    const std::vector<const Parameter*> cparams(params.begin(), params.end());
    OptimizerState state(params);
    zero_grads(params);
    Rng rng(hyper.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<EpochStats> trace;
    for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        std::size_t in_batch = 0;
        auto flush = [&] {
            if (in_batch == 0)
                return;
            if (in_batch > 1)
                for (Parameter* p : params)
                    p->grad *= 1.0 / static_cast<double>(in_batch);
            sgd_momentum_step(params, state, hyper.learning_rate, hyper.momentum);
            in_batch = 0;
        };
        for (std::size_t n = 0; n < order.size(); ++n) {
            const std::size_t idx = order[n];
            Tape t;
            ForwardOptions opts;
            opts.mode = Mode::Train;
            opts.rng = &rng;
            Var probs = forward(t, splits[idx], embedder, model, opts);
            Var l = loss(t, probs, label_to_index(corpus.sentences[idx].polarity), cparams, hyper.l2);
            const double lv = l.value()[0];
            if (!std::isfinite(lv))
                throw DivergenceError(epoch, idx, "training loss became non-finite");
            total += lv;
            t.backward(l);
            if (++in_batch == hyper.batch_size)
                flush();
        }
        flush();
        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = total / static_cast<double>(order.size());
        stats.train_accuracy = evaluate(corpus, embedder, model).accuracy;
        trace.push_back(stats);
        if (on_epoch)
            on_epoch(stats);
    }
    return trace;
}

/// Builds a fresh model, initializes weights uniformly and trains it.
inline TrainResult train(const Corpus& corpus, const Embedder& embedder, ModelConfig config, const Hyperparams& hyper,
                         const EpochCallback& on_epoch = {}) {
    hyper.validate();
    config.dropout = hyper.dropout;
    TrainResult result{LcrRotModel(config), {}};
    init_uniform(result.model.network_parameters(), hyper.init_bound, hyper.seed);
    result.trace = train_model(result.model, corpus, embedder, hyper, on_epoch);
    return result;
}

} // namespace haabsa

#endif
