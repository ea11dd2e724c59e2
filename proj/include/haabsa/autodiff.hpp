#ifndef HAABSA_AUTODIFF_HPP
#define HAABSA_AUTODIFF_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "haabsa/errors.hpp"
#include "haabsa/tensor.hpp"

namespace haabsa {

/// A learnable tensor together with its accumulated gradient.
struct Parameter {
    Parameter() = default;
    Parameter(std::string name_, Tensor value_, bool regularized_ = false)
        : name(std::move(name_)), value(std::move(value_)), grad(Tensor::zeros_like(value)),
          regularized(regularized_) {}

    std::string name;
    Tensor value;
    // Written by Tape::backward; forward passes only read the value.
    mutable Tensor grad;
    bool trainable = true;
    // Weight matrices carry the L2 penalty; biases and mixing weights do not.
    bool regularized = false;

    void zero_grad() { grad.set_zero(); }
};

using ParameterList = std::vector<Parameter*>;

inline void zero_grads(std::span<Parameter* const> params) {
    for (Parameter* p : params)
        p->zero_grad();
}

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    std::size_t size() const { return value().size(); }
};

/// Append-only record of primitive operations for reverse-mode differentiation.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value) { return push(std::move(value), nullptr); }

    /// Leaf bound to a parameter. Repeated uses within one tape share a node.
    Var param(const Parameter& p) {
        if (auto it = param_nodes_.find(&p); it != param_nodes_.end())
            return Var{this, it->second};
        Var v = push(p.value, nullptr);
        nodes_[v.id].param = &p;
        param_nodes_.emplace(&p, v.id);
        return v;
    }

    Var push(Tensor value, BackwardFn backward) {
        Node n;
        n.grad = Tensor::zeros_like(value);
        n.value = std::move(value);
        n.backward = std::move(backward);
        nodes_.push_back(std::move(n));
        return Var{this, nodes_.size() - 1};
    }

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    Tensor& grad(std::size_t id) { return nodes_[id].grad; }
    const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Propagates d(loss)/d(node) to every node, visiting them in reverse
    /// execution order, then adds leaf gradients into their parameters.
    void backward(Var loss) {
        if (loss.tape != this)
            throw ContractError("backward: loss node belongs to another tape");
        if (value(loss.id).size() != 1)
            throw ContractError("backward: loss must be scalar, got shape " + value(loss.id).shape_string());
        for (Node& n : nodes_)
            n.grad.set_zero();
        nodes_[loss.id].grad[0] = 1.0;
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            if (nodes_[i].backward)
                nodes_[i].backward(*this, i);
        }
        for (Node& n : nodes_) {
            if (n.param != nullptr && n.param->trainable)
                n.param->grad += n.grad;
        }
    }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        BackwardFn backward;
        const Parameter* param = nullptr;
    };

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

namespace detail {

inline Tape& same_tape(Var a, Var b) {
    if (a.tape != b.tape)
        throw ContractError("operands recorded on different tapes");
    return *a.tape;
}

} // namespace detail

inline Var matvec(Var m, Var v) {
    Tape& t = detail::same_tape(m, v);
    Tensor out = matvec(m.value(), v.value());
    return t.push(std::move(out), [mi = m.id, vi = v.id](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& mv = tp.value(mi);
        const Tensor& vv = tp.value(vi);
        Tensor& gm = tp.grad(mi);
        Tensor& gv = tp.grad(vi);
        for (std::size_t r = 0; r < mv.rows(); ++r) {
            const double gr = g[r];
            for (std::size_t c = 0; c < mv.cols(); ++c) {
                gm(r, c) += gr * vv[c];
                gv[c] += gr * mv(r, c);
            }
        }
    });
}

inline Var add(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    Tensor::require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    out += b.value();
    return t.push(std::move(out), [ai = a.id, bi = b.id](Tape& tp, std::size_t self) {
        tp.grad(ai) += tp.grad(self);
        tp.grad(bi) += tp.grad(self);
    });
}

/// Elementwise product.
inline Var mul(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    Tensor::require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] *= b.value()[i];
    return t.push(std::move(out), [ai = a.id, bi = b.id](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& av = tp.value(ai);
        const Tensor& bv = tp.value(bi);
        Tensor& ga = tp.grad(ai);
        Tensor& gb = tp.grad(bi);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * bv[i];
            gb[i] += g[i] * av[i];
        }
    });
}

inline Var scale(Var v, double s) {
    Tensor out = v.value();
    out *= s;
    return v.tape->push(std::move(out), [vi = v.id, s](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gv = tp.grad(vi);
        for (std::size_t i = 0; i < g.size(); ++i)
            gv[i] += s * g[i];
    });
}

/// Vector times a taped scalar (a size-1 tensor).
inline Var scale(Var v, Var s) {
    Tape& t = detail::same_tape(v, s);
    if (s.value().size() != 1)
        throw DimensionError("scale: factor must be scalar, got " + s.value().shape_string());
    Tensor out = v.value();
    out *= s.value()[0];
    return t.push(std::move(out), [vi = v.id, si = s.id](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& vv = tp.value(vi);
        const double sv = tp.value(si)[0];
        Tensor& gv = tp.grad(vi);
        double gs = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            gv[i] += sv * g[i];
            gs += vv[i] * g[i];
        }
        tp.grad(si)[0] += gs;
    });
}

inline Var tanh_map(Var v) {
    return v.tape->push(tanh_map(v.value()), [vi = v.id](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& y = tp.value(self);
        Tensor& gv = tp.grad(vi);
        for (std::size_t i = 0; i < g.size(); ++i)
            gv[i] += g[i] * (1.0 - y[i] * y[i]);
    });
}

inline Var sigmoid_map(Var v) {
    return v.tape->push(sigmoid_map(v.value()), [vi = v.id](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& y = tp.value(self);
        Tensor& gv = tp.grad(vi);
        for (std::size_t i = 0; i < g.size(); ++i)
            gv[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

inline Var softmax(Var v) {
    return v.tape->push(softmax(v.value()), [vi = v.id](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& y = tp.value(self);
        double inner = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            inner += g[i] * y[i];
        Tensor& gv = tp.grad(vi);
        for (std::size_t i = 0; i < g.size(); ++i)
            gv[i] += y[i] * (g[i] - inner);
    });
}

inline Var mean_pool(std::span<const Var> rows) {
    if (rows.empty())
        throw EmptyTargetError("mean_pool: empty sequence");
    std::vector<Tensor> values;
    values.reserve(rows.size());
    std::vector<std::size_t> ids;
    for (Var r : rows) {
        detail::same_tape(rows.front(), r);
        values.push_back(r.value());
        ids.push_back(r.id);
    }
    for (const Tensor& v : values)
        Tensor::require_same_shape(values.front(), v, "mean_pool");
    return rows.front().tape->push(mean_pool(values), [ids = std::move(ids)](Tape& tp, std::size_t self) {
        const double w = 1.0 / static_cast<double>(ids.size());
        const Tensor& g = tp.grad(self);
        for (std::size_t id : ids) {
            Tensor& gi = tp.grad(id);
            for (std::size_t k = 0; k < g.size(); ++k)
                gi[k] += w * g[k];
        }
    });
}

inline Var concat(std::span<const Var> parts) {
    if (parts.empty())
        throw DimensionError("concat: no parts");
    std::vector<Tensor> values;
    std::vector<std::size_t> ids;
    for (Var p : parts) {
        detail::same_tape(parts.front(), p);
        values.push_back(p.value());
        ids.push_back(p.id);
    }
    return parts.front().tape->push(concat(values), [ids = std::move(ids)](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        std::size_t offset = 0;
        for (std::size_t id : ids) {
            Tensor& gi = tp.grad(id);
            for (std::size_t k = 0; k < gi.size(); ++k)
                gi[k] += g[offset + k];
            offset += gi.size();
        }
    });
}

/// Inner product of two equally sized tensors; yields a scalar.
inline Var dot(Var a, Var b) {
    Tape& t = detail::same_tape(a, b);
    return t.push(Tensor::vector({dot(a.value(), b.value())}), [ai = a.id, bi = b.id](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        const Tensor& av = tp.value(ai);
        const Tensor& bv = tp.value(bi);
        Tensor& ga = tp.grad(ai);
        Tensor& gb = tp.grad(bi);
        for (std::size_t i = 0; i < av.size(); ++i) {
            ga[i] += g * bv[i];
            gb[i] += g * av[i];
        }
    });
}

/// Sum of rows weighted by the entries of a weight vector.
inline Var weighted_sum(std::span<const Var> rows, Var weights) {
    if (rows.empty())
        throw DimensionError("weighted_sum: no rows");
    if (weights.value().size() != rows.size())
        throw DimensionError("weighted_sum: " + std::to_string(rows.size()) + " rows but " +
                             std::to_string(weights.value().size()) + " weights");
    Tensor out = Tensor::zeros_like(rows.front().value());
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        detail::same_tape(rows[i], weights);
        const Tensor& r = rows[i].value();
        Tensor::require_same_shape(out, r, "weighted_sum");
        for (std::size_t k = 0; k < r.size(); ++k)
            out[k] += weights.value()[i] * r[k];
        ids.push_back(rows[i].id);
    }
    return weights.tape->push(std::move(out), [ids = std::move(ids), wi = weights.id](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& w = tp.value(wi);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const Tensor& r = tp.value(ids[i]);
            Tensor& gr = tp.grad(ids[i]);
            double gw = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) {
                gr[k] += w[i] * g[k];
                gw += r[k] * g[k];
            }
            tp.grad(wi)[i] += gw;
        }
    });
}

/// Sum of scalar nodes.
inline Var sum(std::span<const Var> scalars) {
    if (scalars.empty())
        throw DimensionError("sum: no terms");
    double total = 0.0;
    std::vector<std::size_t> ids;
    for (Var s : scalars) {
        detail::same_tape(scalars.front(), s);
        if (s.value().size() != 1)
            throw DimensionError("sum: term is not scalar " + s.value().shape_string());
        total += s.value()[0];
        ids.push_back(s.id);
    }
    return scalars.front().tape->push(Tensor::vector({total}), [ids = std::move(ids)](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        for (std::size_t id : ids)
            tp.grad(id)[0] += g;
    });
}

/// Entry `index` of a vector as a scalar node.
inline Var element(Var v, std::size_t index) {
    if (index >= v.value().size())
        throw DimensionError("element: index " + std::to_string(index) + " out of range for " + v.value().shape_string());
    return v.tape->push(Tensor::vector({v.value()[index]}), [vi = v.id, index](Tape& tp, std::size_t self) {
        tp.grad(vi)[index] += tp.grad(self)[0];
    });
}

inline Var squared_norm(Var v) {
    return v.tape->push(Tensor::vector({squared_norm(v.value())}), [vi = v.id](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        const Tensor& x = tp.value(vi);
        Tensor& gx = tp.grad(vi);
        for (std::size_t i = 0; i < x.size(); ++i)
            gx[i] += 2.0 * g * x[i];
    });
}

/// -log(probs[index]) with the probability floored at `floor`.
inline Var neg_log_at(Var probs, std::size_t index, double floor = 1e-12) {
    if (index >= probs.value().size())
        throw ContractError("neg_log_at: index " + std::to_string(index) + " out of range");
    double p = probs.value()[index];
    const bool clamped = p < floor;
    if (clamped) {
        std::clog << "warning: probability " << p << " clamped to " << floor << " in cross-entropy\n";
        p = floor;
    }
    return probs.tape->push(Tensor::vector({-std::log(p)}), [pi = probs.id, index, p, clamped](Tape& tp, std::size_t self) {
        if (!clamped)
            tp.grad(pi)[index] += -tp.grad(self)[0] / p;
    });
}

/// Inverted dropout. In training mode every entry is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); otherwise the input is returned.
inline Var dropout(Var v, double rate, Rng& rng, bool training) {
    if (!(rate >= 0.0 && rate < 1.0))
        throw ConfigError("dropout rate must lie in [0,1), got " + std::to_string(rate));
    if (!training || rate == 0.0)
        return v;
    std::bernoulli_distribution keep(1.0 - rate);
    const double inv = 1.0 / (1.0 - rate);
    Tensor mask = Tensor::zeros_like(v.value());
    Tensor out = v.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        mask[i] = keep(rng) ? inv : 0.0;
        out[i] *= mask[i];
    }
    return v.tape->push(std::move(out), [vi = v.id, mask = std::move(mask)](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gv = tp.grad(vi);
        for (std::size_t i = 0; i < g.size(); ++i)
            gv[i] += mask[i] * g[i];
    });
}

inline Tensor dropout(const Tensor& v, double rate, Rng& rng, bool training) {
    Tape t;
    return dropout(t.constant(v), rate, rng, training).value();
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check

struct ParameterGradientError {
    std::string name;
    double max_relative_error = 0.0;
};

struct GradientCheckReport {
    double max_relative_error = 0.0;
    std::vector<ParameterGradientError> parameters;
};

/// Builds a scalar loss on the supplied tape. Must be deterministic.
using LossBuilder = std::function<Var(Tape&)>;

/// Relative error |a-n| / max(|a|, |n|, floor). The floor keeps gradients
/// that are zero up to roundoff from dominating the report.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

inline GradientCheckReport gradient_check(const LossBuilder& build, std::span<Parameter* const> params,
                                          double step = 1e-5, double floor = 1e-6) {
    zero_grads(params);
    {
        Tape tape;
        Var loss = build(tape);
        tape.backward(loss);
    }
    auto evaluate = [&build] {
        Tape tape;
        return build(tape).value()[0];
    };

    GradientCheckReport report;
    for (Parameter* p : params) {
        if (!p->trainable)
            continue;
        ParameterGradientError entry{p->name, 0.0};
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + step;
            const double up = evaluate();
            p->value[i] = saved - step;
            const double down = evaluate();
            p->value[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            entry.max_relative_error =
                std::max(entry.max_relative_error, relative_error(p->grad[i], numeric, floor));
        }
        report.max_relative_error = std::max(report.max_relative_error, entry.max_relative_error);
        report.parameters.push_back(std::move(entry));
    }
    zero_grads(params);
    return report;
}

} // namespace haabsa

#endif
