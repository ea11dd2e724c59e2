#ifndef HAABSA_LCR_ROT_HPP
#define HAABSA_LCR_ROT_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "haabsa/autodiff.hpp"
#include "haabsa/dataset.hpp"
#include "haabsa/embedder.hpp"
#include "haabsa/errors.hpp"

namespace haabsa {

/// Where hierarchical attention rescales the four pooled vectors.
///   0: never; 1: once, all four after the final hop; 2: all four after every hop;
///   3: context and target pairs after the final hop; 4: the pairs after every hop.
enum class HierarchyMethod { None = 0, FinalAll = 1, EachHopAll = 2, FinalPairs = 3, EachHopPairs = 4 };

inline HierarchyMethod hierarchy_method(int m) {
    if (m < 0 || m > 4)
        throw ConfigError("hierarchy method must be in 0..4, got " + std::to_string(m));
    return static_cast<HierarchyMethod>(m);
}

inline bool rescales_each_hop(HierarchyMethod m) {
    return m == HierarchyMethod::EachHopAll || m == HierarchyMethod::EachHopPairs;
}

inline bool scores_pairs(HierarchyMethod m) {
    return m == HierarchyMethod::FinalPairs || m == HierarchyMethod::EachHopPairs;
}

inline std::size_t hierarchy_groups(HierarchyMethod m) {
    if (m == HierarchyMethod::None)
        return 0;
    return scores_pairs(m) ? 2 : 1;
}

struct ModelConfig {
    std::size_t embedding_dim = 300;
    std::size_t hidden_dim = 300; // per LSTM direction
    std::size_t hops = 3;
    HierarchyMethod method = HierarchyMethod::None;
    std::size_t classes = kNumClasses;
    double dropout = 0.0;
    std::size_t elmo_layers = 0; // > 0 adds trainable ELMo mixing weights

    void validate() const {
        if (embedding_dim == 0 || hidden_dim == 0)
            throw ConfigError("embedding and hidden dimensions must be positive");
        if (hops < 1)
            throw ConfigError("hop count must be at least 1");
        if (classes != kNumClasses)
            throw ConfigError("the classifier predicts exactly 3 polarity classes");
        if (!(dropout >= 0.0 && dropout < 1.0))
            throw ConfigError("dropout rate must lie in [0,1)");
    }
};

struct LstmCellParams {
    // Gate order: input, forget, output, candidate.
    std::array<Parameter, 4> input_weights;  // d x d_e
    std::array<Parameter, 4> hidden_weights; // d x d
    std::array<Parameter, 4> biases;         // d

    LstmCellParams() = default;
    LstmCellParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim) {
        static constexpr std::array<const char*, 4> gates{"i", "f", "o", "c"};
        for (std::size_t g = 0; g < 4; ++g) {
            input_weights[g] = Parameter(prefix + ".W_" + gates[g], Tensor(hidden_dim, input_dim), true);
            hidden_weights[g] = Parameter(prefix + ".U_" + gates[g], Tensor(hidden_dim, hidden_dim), true);
            biases[g] = Parameter(prefix + ".b_" + gates[g], Tensor(hidden_dim));
        }
    }

    void collect(std::vector<Parameter*>& out) {
        for (std::size_t g = 0; g < 4; ++g) {
            out.push_back(&input_weights[g]);
            out.push_back(&hidden_weights[g]);
            out.push_back(&biases[g]);
        }
    }
};

struct BiLstmParams {
    LstmCellParams forward;
    LstmCellParams backward;

    BiLstmParams() = default;
    BiLstmParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim)
        : forward(prefix + ".fwd", input_dim, hidden_dim), backward(prefix + ".bwd", input_dim, hidden_dim) {}

    void collect(std::vector<Parameter*>& out) {
        forward.collect(out);
        backward.collect(out);
    }
};

/// Bilinear attention scorer tanh(h' W q + b).
struct AttentionHead {
    Parameter weight; // 2d x 2d
    Parameter bias;   // scalar

    AttentionHead() = default;
    AttentionHead(const std::string& prefix, std::size_t width)
        : weight(prefix + ".W", Tensor(width, width), true), bias(prefix + ".b", Tensor(1)) {}
};

struct RotatoryParams {
    AttentionHead left;
    AttentionHead right;
    AttentionHead target_left;
    AttentionHead target_right;

    RotatoryParams() = default;
    explicit RotatoryParams(std::size_t width)
        : left("rot.left", width), right("rot.right", width), target_left("rot.target_left", width),
          target_right("rot.target_right", width) {}

    void collect(std::vector<Parameter*>& out) {
        for (AttentionHead* h : {&left, &right, &target_left, &target_right}) {
            out.push_back(&h->weight);
            out.push_back(&h->bias);
        }
    }
};

/// Sentence-level scorer tanh(v' W + b) of the hierarchical layer.
struct VectorScorer {
    Parameter weight; // 2d x 1
    Parameter bias;   // scalar

    VectorScorer() = default;
    VectorScorer(const std::string& prefix, std::size_t width)
        : weight(prefix + ".W", Tensor(width, 1), true), bias(prefix + ".b", Tensor(1)) {}
};

/// One scorer for the all-four methods; context and target scorers for the pair methods.
struct HierarchicalParams {
    std::vector<VectorScorer> groups;

    HierarchicalParams() = default;
    HierarchicalParams(HierarchyMethod m, std::size_t width) {
        for (std::size_t g = 0; g < hierarchy_groups(m); ++g)
            groups.emplace_back("hier." + std::to_string(g), width);
    }

    void collect(std::vector<Parameter*>& out) {
        for (VectorScorer& s : groups) {
            out.push_back(&s.weight);
            out.push_back(&s.bias);
        }
    }
};

struct HeadParams {
    Parameter weight; // classes x 8d
    Parameter bias;   // classes

    HeadParams() = default;
    HeadParams(std::size_t classes, std::size_t input)
        : weight("head.W", Tensor(classes, input), true), bias("head.b", Tensor(classes)) {}
};

/// All learnable state of the multi-hop rotatory-attention classifier.
/// Parameters start at zero; see init_uniform in training.hpp.
struct LcrRotModel {
    ModelConfig config;
    BiLstmParams left_lstm;
    BiLstmParams target_lstm;
    BiLstmParams right_lstm;
    RotatoryParams rotatory;
    HierarchicalParams hierarchical;
    HeadParams head;
    std::optional<ElmoParams> elmo;

    LcrRotModel() = default;
    explicit LcrRotModel(const ModelConfig& cfg) : config(cfg) {
        cfg.validate();
        const std::size_t d = cfg.hidden_dim;
        const std::size_t de = cfg.embedding_dim;
        left_lstm = BiLstmParams("left_lstm", de, d);
        target_lstm = BiLstmParams("target_lstm", de, d);
        right_lstm = BiLstmParams("right_lstm", de, d);
        rotatory = RotatoryParams(2 * d);
        hierarchical = HierarchicalParams(cfg.method, 2 * d);
        head = HeadParams(cfg.classes, 8 * d);
        if (cfg.elmo_layers > 0)
            elmo.emplace(cfg.elmo_layers);
    }

    std::size_t width() const noexcept { return 2 * config.hidden_dim; }

    /// Weight matrices and biases, i.e. everything the uniform initializer touches.
    std::vector<Parameter*> network_parameters() {
        std::vector<Parameter*> out;
        left_lstm.collect(out);
        target_lstm.collect(out);
        right_lstm.collect(out);
        rotatory.collect(out);
        hierarchical.collect(out);
        out.push_back(&head.weight);
        out.push_back(&head.bias);
        return out;
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out = network_parameters();
        if (elmo) {
            out.push_back(&elmo->logits);
            out.push_back(&elmo->gamma);
        }
        return out;
    }

    std::vector<const Parameter*> parameters() const {
        auto mut = const_cast<LcrRotModel*>(this)->parameters();
        return {mut.begin(), mut.end()};
    }
};

enum class Mode { Train, Inference };

/// Per-hop attention distributions, token-aligned. A side with no tokens has
/// an empty score list.
struct HopTrace {
    std::vector<double> left;
    std::vector<double> right;
    std::vector<double> target_left;
    std::vector<double> target_right;
    std::vector<double> hierarchical; // canonical order, filled by methods 2 and 4
};

struct AttentionTrace {
    std::vector<HopTrace> hops;
    std::vector<double> final_hierarchical; // filled by methods 1 and 3
};

/// Hidden states of the three bi-LSTMs, each of width 2d.
struct EncodedSentence {
    std::vector<Var> left;
    std::vector<Var> target;
    std::vector<Var> right;
};

/// Canonical order: left target2context, right target2context,
/// left context2target, right context2target.
using FourVectors = std::array<Var, 4>;

enum VectorSlot : std::size_t { kLeft = 0, kRight = 1, kTargetLeft = 2, kTargetRight = 3 };

/// Runtime switches for one forward pass.
struct ForwardOptions {
    Mode mode = Mode::Inference;
    Rng* rng = nullptr;                // required when training with dropout
    AttentionTrace* trace = nullptr;   // optional attention capture
};

namespace detail {

inline Var affine(Tape& t, const Parameter& w, Var x, const Parameter& h_w, Var h, const Parameter& b) {
    return add(add(matvec(t.param(w), x), matvec(t.param(h_w), h)), t.param(b));
}

inline std::vector<double> to_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

} // namespace detail

/// Runs one LSTM direction over `inputs`; returns one hidden state per input.
inline std::vector<Var> lstm_run(Tape& t, const LstmCellParams& p, std::span<const Var> inputs, bool reverse) {
    const std::size_t d = p.biases[0].value.size();
    std::vector<Var> out(inputs.size());
    Var h = t.constant(Tensor(d));
    Var c = t.constant(Tensor(d));
    for (std::size_t step = 0; step < inputs.size(); ++step) {
        const std::size_t pos = reverse ? inputs.size() - 1 - step : step;
        const Var x = inputs[pos];
        Var i = sigmoid_map(detail::affine(t, p.input_weights[0], x, p.hidden_weights[0], h, p.biases[0]));
        Var f = sigmoid_map(detail::affine(t, p.input_weights[1], x, p.hidden_weights[1], h, p.biases[1]));
        Var o = sigmoid_map(detail::affine(t, p.input_weights[2], x, p.hidden_weights[2], h, p.biases[2]));
        Var g = tanh_map(detail::affine(t, p.input_weights[3], x, p.hidden_weights[3], h, p.biases[3]));
        c = add(mul(f, c), mul(i, g));
        h = mul(o, tanh_map(c));
        out[pos] = h;
    }
    return out;
}

/// Concatenated forward/backward hidden states, each of width 2d.
inline std::vector<Var> bilstm_run(Tape& t, const BiLstmParams& p, std::span<const Var> inputs) {
    const auto fwd = lstm_run(t, p.forward, inputs, false);
    const auto bwd = lstm_run(t, p.backward, inputs, true);
    std::vector<Var> out;
    out.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const std::array<Var, 2> parts{fwd[i], bwd[i]};
        out.push_back(concat(parts));
    }
    return out;
}

/// Embeds the three parts of a split sentence and encodes each with its own
/// bi-LSTM. Dropout hits the hidden states in training mode.
inline EncodedSentence encode(Tape& t, const SplitSentence& split, const Embedder& embedder, const LcrRotModel& model,
                              const ForwardOptions& opts = {}) {
    if (split.target.empty())
        throw EmptyTargetError("sentence '" + split.sid + "' has an empty target");
    if (embedder.dim() != model.config.embedding_dim)
        throw ConfigError("embedding dimension " + std::to_string(embedder.dim()) + " does not match model input " +
                          std::to_string(model.config.embedding_dim));
    const ElmoParams* elmo = model.elmo ? &*model.elmo : nullptr;
    auto embed_part = [&](const std::vector<std::string>& tokens, std::size_t offset) {
        std::vector<Var> xs;
        xs.reserve(tokens.size());
        for (std::size_t i = 0; i < tokens.size(); ++i)
            xs.push_back(embedder.embed(t, split.sid, offset + i, tokens[i], elmo));
        return xs;
    };
    const bool training = opts.mode == Mode::Train && model.config.dropout > 0.0;
    if (training && opts.rng == nullptr)
        throw ContractError("encode: training with dropout needs a random generator");
    auto run = [&](const BiLstmParams& p, const std::vector<std::string>& tokens, std::size_t offset) {
        auto hs = bilstm_run(t, p, embed_part(tokens, offset));
        if (training)
            for (Var& h : hs)
                h = dropout(h, model.config.dropout, *opts.rng, true);
        return hs;
    };
    EncodedSentence enc;
    enc.left = run(model.left_lstm, split.left, 0);
    enc.target = run(model.target_lstm, split.target, split.target_offset());
    enc.right = run(model.right_lstm, split.right, split.right_offset());
    return enc;
}

struct Attended {
    Var scores; // softmax-normalized, one per hidden state
    Var pooled; // attention-weighted sum of the hidden states
};

/// f_i = tanh(h_i' W q + b), alpha = softmax(f), pooled = sum alpha_i h_i.
/// An empty sequence yields nullopt; callers substitute a zero vector.
inline std::optional<Attended> attend(Tape& t, std::span<const Var> hidden, Var query, const AttentionHead& head) {
    if (hidden.empty())
        return std::nullopt;
    Var projected = matvec(t.param(head.weight), query);
    Var b = t.param(head.bias);
    std::vector<Var> f;
    f.reserve(hidden.size());
    for (Var h : hidden)
        f.push_back(tanh_map(add(dot(h, projected), b)));
    Var alpha = softmax(concat(f));
    return Attended{alpha, weighted_sum(hidden, alpha)};
}

/// One two-step rotatory attention pass: contexts attend with their target
/// query, then the target attends with each pooled context.
inline FourVectors rotatory_hop(Tape& t, const EncodedSentence& enc, Var query_left, Var query_right,
                                const RotatoryParams& p, HopTrace* trace = nullptr) {
    const std::size_t width = enc.target.front().value().size();
    auto pooled_or_zero = [&](const std::optional<Attended>& a, std::vector<double>* sink) {
        if (!a)
            return t.constant(Tensor(width));
        if (sink)
            *sink = detail::to_vector(a->scores.value());
        return a->pooled;
    };
    Var r_left = pooled_or_zero(attend(t, enc.left, query_left, p.left), trace ? &trace->left : nullptr);
    Var r_right = pooled_or_zero(attend(t, enc.right, query_right, p.right), trace ? &trace->right : nullptr);
    Var r_target_left =
        pooled_or_zero(attend(t, enc.target, r_left, p.target_left), trace ? &trace->target_left : nullptr);
    Var r_target_right =
        pooled_or_zero(attend(t, enc.target, r_right, p.target_right), trace ? &trace->target_right : nullptr);
    return {r_left, r_right, r_target_left, r_target_right};
}

/// Rescales each vector by its softmax-normalized sentence-level score, over
/// all four vectors or within the context and target pairs.
inline FourVectors hierarchical_rescale(Tape& t, const FourVectors& v, HierarchyMethod method,
                                        const HierarchicalParams& p, std::vector<double>* alphas = nullptr) {
    if (method == HierarchyMethod::None)
        return v;
    if (p.groups.size() != hierarchy_groups(method))
        throw ConfigError("hierarchical parameters have " + std::to_string(p.groups.size()) + " groups, method " +
                          std::to_string(static_cast<int>(method)) + " needs " +
                          std::to_string(hierarchy_groups(method)));
    FourVectors out = v;
    if (alphas)
        alphas->assign(4, 0.0);
    auto rescale_group = [&](const VectorScorer& scorer, std::span<const std::size_t> slots) {
        Var w = t.param(scorer.weight);
        Var b = t.param(scorer.bias);
        std::vector<Var> f;
        for (std::size_t s : slots)
            f.push_back(tanh_map(add(dot(v[s], w), b)));
        Var alpha = softmax(concat(f));
        for (std::size_t k = 0; k < slots.size(); ++k) {
            out[slots[k]] = scale(v[slots[k]], element(alpha, k));
            if (alphas)
                (*alphas)[slots[k]] = alpha.value()[k];
        }
    };
    if (scores_pairs(method)) {
        static constexpr std::array<std::size_t, 2> context{kLeft, kRight};
        static constexpr std::array<std::size_t, 2> target{kTargetLeft, kTargetRight};
        rescale_group(p.groups[0], context);
        rescale_group(p.groups[1], target);
    } else {
        static constexpr std::array<std::size_t, 4> all{kLeft, kRight, kTargetLeft, kTargetRight};
        rescale_group(p.groups[0], all);
    }
    return out;
}

/// Repeats the rotatory hop `hops` times. The first hop queries both
/// contexts with the mean-pooled target; later hops use the previous hop's
/// context2target vectors. Methods 2 and 4 rescale inside the loop, methods
/// 1 and 3 once at the end.
inline FourVectors multi_hop(Tape& t, const EncodedSentence& enc, const LcrRotModel& model,
                             AttentionTrace* trace = nullptr) {
    const ModelConfig& cfg = model.config;
    const Var pooled_target = mean_pool(enc.target);
    Var query_left = pooled_target;
    Var query_right = pooled_target;
    FourVectors v{};
    if (trace)
        trace->hops.assign(cfg.hops, HopTrace{});
    for (std::size_t hop = 0; hop < cfg.hops; ++hop) {
        HopTrace* ht = trace ? &trace->hops[hop] : nullptr;
        v = rotatory_hop(t, enc, query_left, query_right, model.rotatory, ht);
        if (rescales_each_hop(cfg.method))
            v = hierarchical_rescale(t, v, cfg.method, model.hierarchical, ht ? &ht->hierarchical : nullptr);
        query_left = v[kTargetLeft];
        query_right = v[kTargetRight];
    }
    if (cfg.method == HierarchyMethod::FinalAll || cfg.method == HierarchyMethod::FinalPairs)
        v = hierarchical_rescale(t, v, cfg.method, model.hierarchical, trace ? &trace->final_hierarchical : nullptr);
    return v;
}

/// Class probabilities (negative, neutral, positive) for one split sentence.
inline Var forward(Tape& t, const SplitSentence& split, const Embedder& embedder, const LcrRotModel& model,
                   const ForwardOptions& opts = {}) {
    const EncodedSentence enc = encode(t, split, embedder, model, opts);
    const FourVectors v = multi_hop(t, enc, model, opts.trace);
    Var features = concat(v);
    if (opts.mode == Mode::Train && model.config.dropout > 0.0)
        features = dropout(features, model.config.dropout, *opts.rng, true);
    Var logits = add(matvec(t.param(model.head.weight), features), t.param(model.head.bias));
    return softmax(logits);
}

inline Tensor predict_proba(const SplitSentence& split, const Embedder& embedder, const LcrRotModel& model) {
    Tape t;
    return forward(t, split, embedder, model).value();
}

/// Predicted class index; ties go to the lowest index.
inline std::size_t predict(const SplitSentence& split, const Embedder& embedder, const LcrRotModel& model) {
    return argmax(predict_proba(split, embedder, model));
}

inline AttentionTrace attention_trace(const SplitSentence& split, const Embedder& embedder, const LcrRotModel& model) {
    AttentionTrace trace;
    Tape t;
    ForwardOptions opts;
    opts.trace = &trace;
    forward(t, split, embedder, model, opts);
    return trace;
}

} // namespace haabsa

#endif
