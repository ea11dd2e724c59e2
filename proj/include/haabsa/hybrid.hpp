#ifndef HAABSA_HYBRID_HPP
#define HAABSA_HYBRID_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "haabsa/dataset.hpp"
#include "haabsa/embedder.hpp"
#include "haabsa/lcr_rot.hpp"
#include "haabsa/ontology.hpp"

namespace haabsa {

enum class BackupStrategy { Model, Majority };

inline BackupStrategy parse_backup(std::string_view s) {
    if (s == "model") return BackupStrategy::Model;
    if (s == "majority") return BackupStrategy::Majority;
    throw ConfigError("unknown backup strategy '" + std::string(s) + "' (expected model or majority)");
}

struct HybridConfig {
    std::string ontology_path;
    BackupStrategy backup = BackupStrategy::Model;
    std::string checkpoint_path;
    std::string embeddings_path;
    std::optional<Combiner> combiner; // set for contextual embeddings

    void validate() const {
        if (ontology_path.empty())
            throw ConfigError("hybrid classification needs an ontology");
        if (backup == BackupStrategy::Model && checkpoint_path.empty())
            throw ConfigError("backup=model needs a checkpoint");
        if (backup == BackupStrategy::Model && embeddings_path.empty())
            throw ConfigError("backup=model needs embeddings");
    }
};

enum class Stage { Ontology, Backup };

struct BackupPrediction {
    Polarity polarity = Polarity::Neutral;
    std::optional<Tensor> probabilities;
};

using Backup = std::function<BackupPrediction(const Sentence&)>;

struct PredictionRecord {
    std::string sid;
    Span target;
    Stage stage = Stage::Ontology;
    Polarity predicted = Polarity::Neutral;
    OntologyVerdict verdict;
    std::optional<Tensor> probabilities;
};

inline Backup majority_backup(Polarity majority) {
    return [majority](const Sentence&) { return BackupPrediction{majority, std::nullopt}; };
}

inline Backup model_backup(std::shared_ptr<const LcrRotModel> model, std::shared_ptr<const Embedder> embedder) {
    return [model = std::move(model), embedder = std::move(embedder)](const Sentence& s) {
        Tensor probs = predict_proba(split_around_target(s), *embedder, *model);
        const Polarity p = index_to_label(argmax(probs));
        return BackupPrediction{p, std::move(probs)};
    };
}

/// Ontology first; the backup only sees sentences the ontology leaves inconclusive.
inline PredictionRecord classify_hybrid(const Sentence& s, const Ontology& onto, const Backup& backup) {
    PredictionRecord r;
    r.sid = s.sid;
    r.target = s.target;
    r.verdict = classify(onto, s);
    if (auto p = r.verdict.polarity()) {
        r.stage = Stage::Ontology;
        r.predicted = *p;
        return r;
    }
    r.stage = Stage::Backup;
    BackupPrediction b = backup(s);
    r.predicted = b.polarity;
    r.probabilities = std::move(b.probabilities);
    return r;
}

inline nlohmann::json to_json(const PredictionRecord& r) {
    nlohmann::json j{{"sid", r.sid},
                     {"target", {r.target.start, r.target.end}},
                     {"stage", r.stage == Stage::Ontology ? "ontology" : "backup"},
                     {"prediction", to_string(r.predicted)}};
    nlohmann::json hits = nlohmann::json::array();
    for (const RuleHit& h : r.verdict.trace)
        hits.push_back({{"rule", h.rule}, {"form", h.form}, {"polarity", to_string(h.polarity)}});
    j["ontology"] = {{"hits", hits}, {"inconclusive", to_string(r.verdict.reason)}};
    if (r.probabilities)
        j["probabilities"] = r.probabilities->storage();
    return j;
}

} // namespace haabsa

#endif
