#ifndef HAABSA_TPE_HPP
#define HAABSA_TPE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "haabsa/errors.hpp"
#include "haabsa/tensor.hpp"

namespace haabsa {

enum class Scale { Linear, Log };

struct Dimension {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    Scale scale = Scale::Linear;

    void validate() const {
        if (!(lower < upper))
            throw ConfigError("dimension '" + name + "': lower bound must be below upper bound");
        if (scale == Scale::Log && !(lower > 0.0))
            throw ConfigError("dimension '" + name + "': log scale needs a positive lower bound");
    }

    // Sampling and density estimation happen in these coordinates.
    double to_internal(double x) const { return scale == Scale::Log ? std::log(x) : x; }
    double from_internal(double u) const {
        const double x = scale == Scale::Log ? std::exp(u) : u;
        return std::clamp(x, lower, upper);
    }
    double internal_lower() const { return to_internal(lower); }
    double internal_upper() const { return to_internal(upper); }
};

using Point = std::vector<double>;

struct SearchSpace {
    std::vector<Dimension> dims;

    void validate() const {
        if (dims.empty())
            throw ConfigError("search space has no dimensions");
        for (const Dimension& d : dims)
            d.validate();
    }

    bool contains(const Point& p) const {
        if (p.size() != dims.size())
            return false;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (!(p[i] >= dims[i].lower && p[i] <= dims[i].upper))
                return false;
        return true;
    }

    /// Learning rate, momentum, L2 coefficient and dropout rate.
    static SearchSpace training_defaults() {
        return {{{"learning_rate", 1e-4, 1e-1, Scale::Log},
                 {"momentum", 0.5, 0.99, Scale::Linear},
                 {"l2", 1e-6, 1e-2, Scale::Log},
                 {"dropout", 0.0, 0.7, Scale::Linear}}};
    }
};

enum class TrialStatus { Ok, Failed };

struct Trial {
    Point point;
    double objective = 0.0; // higher is better; meaningless for failed trials
    TrialStatus status = TrialStatus::Ok;
};

using History = std::vector<Trial>;

struct TpeConfig {
    double gamma = 0.25;
    std::size_t startup_trials = 10;
    std::size_t candidates = 24;
    double bandwidth_floor = 0.01; // fraction of the (internal) range

    void validate() const {
        if (!(gamma > 0.0 && gamma < 1.0))
            throw ConfigError("TPE gamma must lie in (0,1)");
        if (startup_trials < 2)
            throw ConfigError("TPE needs at least 2 startup trials");
        if (candidates < 1)
            throw ConfigError("TPE needs at least 1 candidate per suggestion");
    }
};

inline void observe(History& history, const SearchSpace& space, Trial trial) {
    if (!space.contains(trial.point))
        throw ContractError("observed point lies outside the search space");
    history.push_back(std::move(trial));
}

/// Index of the best successful trial (first one on ties).
inline std::optional<std::size_t> best_trial(const History& history) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (history[i].status != TrialStatus::Ok)
            continue;
        if (!best || history[i].objective > history[*best].objective)
            best = i;
    }
    return best;
}

/// One-dimensional mixture of Gaussians truncated to [lower, upper], one
/// equally weighted component per observation. With no observations it is
/// the uniform density.
class ParzenEstimator {
public:
    ParzenEstimator(std::vector<double> centers, double lower, double upper, double floor_fraction)
        : lower_(lower), upper_(upper) {
        std::sort(centers.begin(), centers.end());
        const double range = upper - lower;
        for (std::size_t i = 0; i < centers.size(); ++i) {
            const double left = i == 0 ? centers[i] - lower : centers[i] - centers[i - 1];
            const double right = i + 1 == centers.size() ? upper - centers[i] : centers[i + 1] - centers[i];
            const double sigma = std::clamp(std::max(left, right), floor_fraction * range, range);
            const double mass = normal_cdf((upper - centers[i]) / sigma) - normal_cdf((lower - centers[i]) / sigma);
            components_.push_back({centers[i], sigma, mass});
        }
    }

    double pdf(double x) const {
        if (x < lower_ || x > upper_)
            return 0.0;
        if (components_.empty())
            return 1.0 / (upper_ - lower_);
        double total = 0.0;
        for (const Component& c : components_) {
            const double z = (x - c.mu) / c.sigma;
            total += std::exp(-0.5 * z * z) / (c.sigma * std::sqrt(2.0 * std::numbers::pi) * c.mass);
        }
        return total / static_cast<double>(components_.size());
    }

    double sample(Rng& rng) const {
        if (components_.empty())
            return std::uniform_real_distribution<double>(lower_, upper_)(rng);
        std::uniform_int_distribution<std::size_t> pick(0, components_.size() - 1);
        const Component& c = components_[pick(rng)];
        std::normal_distribution<double> gauss(c.mu, c.sigma);
        for (int attempt = 0; attempt < 1000; ++attempt) {
            const double x = gauss(rng);
            if (x >= lower_ && x <= upper_)
                return x;
        }
        return std::clamp(c.mu, lower_, upper_);
    }

    std::size_t components() const noexcept { return components_.size(); }
    double bandwidth(std::size_t i) const { return components_.at(i).sigma; }

private:
    struct Component {
        double mu;
        double sigma;
        double mass; // probability of the untruncated Gaussian inside the bounds
    };

    static double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

    double lower_;
    double upper_;
    std::vector<Component> components_;
};

/// Successful trials split into the best ceil(gamma * N) and the rest.
struct HistorySplit {
    std::vector<const Trial*> good;
    std::vector<const Trial*> bad;
};

inline HistorySplit split_history(const History& history, double gamma) {
    std::vector<const Trial*> ok;
    for (const Trial& t : history)
        if (t.status == TrialStatus::Ok)
            ok.push_back(&t);
    // Minimize the negated objective; stable so ties keep observation order.
    std::stable_sort(ok.begin(), ok.end(), [](const Trial* a, const Trial* b) { return -a->objective < -b->objective; });
    // The tolerance keeps products like 0.1 * 30 from rounding up past 3.
    const auto n_good = static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(ok.size()) - 1e-9));
    HistorySplit split;
    split.good.assign(ok.begin(), ok.begin() + static_cast<std::ptrdiff_t>(std::min(n_good, ok.size())));
    split.bad.assign(ok.begin() + static_cast<std::ptrdiff_t>(split.good.size()), ok.end());
    return split;
}

inline ParzenEstimator fit_parzen(std::span<const Trial* const> trials, const Dimension& dim, std::size_t index,
                                  double floor_fraction) {
    std::vector<double> centers;
    for (const Trial* t : trials)
        centers.push_back(dim.to_internal(t->point[index]));
    return ParzenEstimator(std::move(centers), dim.internal_lower(), dim.internal_upper(), floor_fraction);
}

inline Point sample_uniform(const SearchSpace& space, Rng& rng) {
    Point p;
    for (const Dimension& d : space.dims) {
        std::uniform_real_distribution<double> u(d.internal_lower(), d.internal_upper());
        p.push_back(d.from_internal(u(rng)));
    }
    return p;
}

/// Next configuration to evaluate: uniform during startup, afterwards the
/// candidate drawn from the good-trial density l(x) that maximizes l(x)/g(x).
inline Point suggest(const SearchSpace& space, const History& history, const TpeConfig& cfg, Rng& rng) {
    space.validate();
    cfg.validate();
    const HistorySplit split = split_history(history, cfg.gamma);
    const std::size_t completed = split.good.size() + split.bad.size();
    if (completed < cfg.startup_trials)
        return sample_uniform(space, rng);

    std::vector<ParzenEstimator> good;
    std::vector<ParzenEstimator> bad;
    for (std::size_t d = 0; d < space.dims.size(); ++d) {
        good.push_back(fit_parzen(split.good, space.dims[d], d, cfg.bandwidth_floor));
        bad.push_back(fit_parzen(split.bad, space.dims[d], d, cfg.bandwidth_floor));
    }
    std::vector<double> best_internal;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cfg.candidates; ++c) {
        std::vector<double> u;
        double score = 0.0;
        for (std::size_t d = 0; d < space.dims.size(); ++d) {
            u.push_back(good[d].sample(rng));
            score += std::log(std::max(good[d].pdf(u.back()), 1e-300)) - std::log(std::max(bad[d].pdf(u.back()), 1e-300));
        }
        if (best_internal.empty() || score > best_score) {
            best_score = score;
            best_internal = std::move(u);
        }
    }
    Point p;
    for (std::size_t d = 0; d < space.dims.size(); ++d)
        p.push_back(space.dims[d].from_internal(best_internal[d]));
    return p;
}

// History persistence: one JSON object per trial,
//   {"trial": n, "point": {"<dim>": value, ...}, "objective": v|null, "status": "ok"|"failed"}
inline nlohmann::json trial_to_json(const SearchSpace& space, const Trial& t, std::size_t index) {
    nlohmann::json point = nlohmann::json::object();
    for (std::size_t d = 0; d < space.dims.size(); ++d)
        point[space.dims[d].name] = t.point[d];
    nlohmann::json objective = t.status == TrialStatus::Ok ? nlohmann::json(t.objective) : nlohmann::json(nullptr);
    return {{"trial", index}, {"point", point}, {"objective", objective},
            {"status", t.status == TrialStatus::Ok ? "ok" : "failed"}};
}

inline History load_history(std::istream& in, const SearchSpace& space, const std::string& source = "<stream>") {
    History history;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Trial t;
            for (const Dimension& d : space.dims)
                t.point.push_back(j.at("point").at(d.name).get<double>());
            t.status = j.at("status").get<std::string>() == "ok" ? TrialStatus::Ok : TrialStatus::Failed;
            if (t.status == TrialStatus::Ok)
                t.objective = j.at("objective").get<double>();
            if (!space.contains(t.point))
                throw ParseError(source, lineno, "trial point outside the search space");
            history.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    return history;
}

struct TuneResult {
    History history;
    std::optional<std::size_t> best;
};

using Objective = std::function<double(const Point&)>;
using TrialCallback = std::function<void(const Trial&, std::size_t index)>;

/// Runs suggest -> objective -> observe until the history holds `budget`
/// trials. Each trial draws from its own generator derived from (seed, index),
/// so resuming from a saved history replays the same sequence. A throwing or
/// non-finite objective records a failed trial.
inline TuneResult tune(const SearchSpace& space, const Objective& objective, std::size_t budget,
                       const TpeConfig& cfg, std::uint64_t seed, History history = {},
                       const TrialCallback& on_trial = {}) {
    if (budget < 1)
        throw ConfigError("tuning budget must be at least 1");
    space.validate();
    cfg.validate();
    while (history.size() < budget) {
        const std::size_t index = history.size();
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index)};
        Rng rng(seq);
        Trial trial;
        trial.point = suggest(space, history, cfg, rng);
        try {
            trial.objective = objective(trial.point);
            if (!std::isfinite(trial.objective))
                trial.status = TrialStatus::Failed;
        } catch (const std::exception&) {
            trial.status = TrialStatus::Failed;
        }
        observe(history, space, trial);
        if (on_trial)
            on_trial(history.back(), index);
    }
    TuneResult r{std::move(history), std::nullopt};
    r.best = best_trial(r.history);
    return r;
}

} // namespace haabsa

#endif
