#ifndef HAABSA_TOOLS_CLI_HPP
#define HAABSA_TOOLS_CLI_HPP

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "haabsa/haabsa.hpp"

namespace haabsa::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kDivergence = 3 };

/// Every knob any subcommand understands. Flags override the --config file,
/// which overrides these defaults.
struct Settings {
    std::string config;
    std::uint64_t seed = 1;
    std::string corpus;
    std::string test_corpus;
    std::string train_corpus;
    std::string embeddings;
    std::string combiner = "bert";
    std::string oov = "zero";
    std::string ontology;
    std::string checkpoint;
    int method = 0;
    std::size_t hops = 3;
    std::size_t hidden = 50;
    std::string backup = "model";
    std::string out;
    std::string history;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double l2 = 1e-5;
    double dropout = 0.0;
    double init_bound = 0.01;
    std::size_t epochs = 20;
    std::size_t batch = 1;
    std::size_t budget = 20;
};

namespace detail {

inline std::string flag_for(const std::string& key) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    return flag;
}

inline bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
        return a == flag || a.rfind(flag + "=", 0) == 0;
    });
}

inline std::string scalar_text(const nlohmann::json& v) {
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_boolean())
        return v.get<bool>() ? "true" : "false";
    return v.dump();
}

/// Appends `--key value` for config-file entries the command line leaves unset.
inline std::vector<std::string> merge_config(std::vector<std::string> args, const CLI::App& sub) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            path = args[i].substr(9);
    }
    if (!path)
        return args;
    std::ifstream in(*path);
    if (!in)
        throw ConfigError("cannot open config file '" + *path + "'");
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(*path + ": " + e.what());
    }
    if (!cfg.is_object())
        throw ConfigError(*path + ": config must be a JSON object");
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = flag_for(key);
        if (key == "config" || has_flag(args, flag) || sub.get_option_no_throw(flag) == nullptr)
            continue;
        args.push_back(flag);
        args.push_back(scalar_text(value));
    }
    return args;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write '" + path + "'");
    return out;
}

inline Corpus require_corpus(const std::string& path, const char* what) {
    if (path.empty())
        throw ConfigError(std::string("missing ") + what);
    return parse_corpus(path);
}

inline bool is_contextual_path(const std::string& path) {
    return path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0;
}

struct LoadedEmbeddings {
    std::shared_ptr<const Embedder> embedder;
    nlohmann::json descriptor;
};

inline LoadedEmbeddings load_embeddings(const Settings& s, const std::vector<const Corpus*>& corpora) {
    if (s.embeddings.empty())
        throw ConfigError("missing --embeddings");
    LoadedEmbeddings r;
    if (is_contextual_path(s.embeddings)) {
        auto store = std::make_shared<const ContextualStore>(load_contextual(s.embeddings));
        for (const Corpus* c : corpora)
            store->validate_against(*c);
        const Combiner comb = parse_combiner(s.combiner);
        r.descriptor = {{"kind", "contextual"},
                        {"combiner", s.combiner},
                        {"layers", store->layer_count()},
                        {"dim", store->layer_dim()}};
        r.embedder = std::make_shared<const Embedder>(Embedder::contextual(store, comb));
    } else {
        auto store = load_noncontextual(s.embeddings, std::nullopt, parse_oov_policy(s.oov));
        store.set_oov_policy(parse_oov_policy(s.oov), s.seed);
        r.descriptor = {{"kind", "noncontextual"}, {"dim", store.dim()}, {"oov", s.oov}};
        r.embedder = std::make_shared<const Embedder>(
            Embedder::noncontextual(std::make_shared<const NonContextualStore>(std::move(store))));
    }
    return r;
}

inline ModelConfig model_config(const Settings& s, const Embedder& e) {
    ModelConfig c;
    c.embedding_dim = e.dim();
    c.hidden_dim = s.hidden;
    c.hops = s.hops;
    c.method = hierarchy_method(s.method);
    c.dropout = s.dropout;
    c.elmo_layers = e.is_contextual() && e.combiner() == Combiner::Elmo ? e.layer_count() : 0;
    c.validate();
    return c;
}

inline Hyperparams hyperparams(const Settings& s) {
    Hyperparams h;
    h.learning_rate = s.learning_rate;
    h.momentum = s.momentum;
    h.l2 = s.l2;
    h.dropout = s.dropout;
    h.epochs = s.epochs;
    h.seed = s.seed;
    h.batch_size = s.batch;
    h.init_bound = s.init_bound;
    h.validate();
    return h;
}

inline void require_compatible(const LcrRotModel& model, const Embedder& e) {
    if (model.config.embedding_dim != e.dim())
        throw ConfigError("checkpoint expects " + std::to_string(model.config.embedding_dim) +
                          "-dimensional embeddings, got " + std::to_string(e.dim()));
    const std::size_t elmo = model.elmo ? model.elmo->logits.value.size() : 0;
    if (elmo != 0 && (!e.is_contextual() || e.combiner() != Combiner::Elmo || e.layer_count() != elmo))
        throw ConfigError("checkpoint mixes " + std::to_string(elmo) + " ELMo layers; embeddings do not match");
}

inline nlohmann::json evaluation_json(const Evaluation& e) {
    nlohmann::json conf = nlohmann::json::array();
    for (const auto& row : e.confusion)
        conf.push_back(row);
    return {{"accuracy", e.accuracy}, {"correct", e.correct}, {"total", e.total}, {"confusion", conf}};
}

// ---------------------------------------------------------------------------

inline int cmd_stats(const Settings& s, std::ostream& out) {
    const Corpus corpus = require_corpus(s.corpus, "--corpus");
    const ClassDistribution d = class_distribution(corpus);
    out << std::fixed << std::setprecision(1);
    out << "polarity\tcount\tpercent\n";
    for (Polarity p : {Polarity::Positive, Polarity::Neutral, Polarity::Negative})
        out << to_string(p) << '\t' << d.count(p) << '\t' << d.percent(p) << '\n';
    out << "total\t" << d.total << '\t' << 100.0 << '\n';
    return kOk;
}

inline int cmd_train(const Settings& s, std::ostream& out) {
    const Corpus corpus = require_corpus(s.corpus, "--corpus");
    if (s.checkpoint.empty())
        throw ConfigError("missing --checkpoint (output path)");
    const auto emb = load_embeddings(s, {&corpus});
    const ModelConfig cfg = model_config(s, *emb.embedder);
    const Hyperparams hyper = hyperparams(s);
    std::optional<std::ofstream> file;
    if (!s.out.empty())
        file.emplace(open_output(s.out));
    std::ostream& trace_out = file ? *file : out;
    TrainResult r = train(corpus, *emb.embedder, cfg, hyper,
                          [&](const EpochStats& e) { trace_out << to_json(e).dump() << '\n'; });
    save_checkpoint(s.checkpoint, r.model, emb.descriptor);
    return kOk;
}

inline int cmd_evaluate(const Settings& s, std::ostream& out) {
    const Corpus corpus = require_corpus(s.corpus, "--corpus");
    if (s.checkpoint.empty())
        throw ConfigError("missing --checkpoint");
    const LcrRotModel model = load_checkpoint(s.checkpoint);
    const auto emb = load_embeddings(s, {&corpus});
    require_compatible(model, *emb.embedder);
    out << evaluation_json(evaluate(corpus, *emb.embedder, model)).dump() << '\n';
    return kOk;
}

inline int cmd_tune(const Settings& s, std::ostream& out) {
    const Corpus train_set = require_corpus(s.corpus, "--corpus");
    const Corpus valid = require_corpus(s.test_corpus, "--test-corpus (validation split)");
    const auto emb = load_embeddings(s, {&train_set, &valid});
    const ModelConfig cfg = model_config(s, *emb.embedder);
    const Hyperparams base = hyperparams(s);
    const SearchSpace space = SearchSpace::training_defaults();

    History history;
    if (!s.history.empty()) {
        std::ifstream in(s.history);
        if (in)
            history = load_history(in, space, s.history);
    }
    std::optional<std::ofstream> hist_out;
    if (!s.history.empty()) {
        hist_out.emplace(s.history, std::ios::app);
        if (!*hist_out)
            throw ConfigError("cannot write history '" + s.history + "'");
    }
    auto objective = [&](const Point& p) {
        Hyperparams h = base;
        h.learning_rate = p[0];
        h.momentum = p[1];
        h.l2 = p[2];
        h.dropout = p[3];
        const TrainResult r = train(train_set, *emb.embedder, cfg, h);
        return evaluate(valid, *emb.embedder, r.model).accuracy;
    };
    const TuneResult result =
        tune(space, objective, std::max(s.budget, history.size()), TpeConfig{}, s.seed, std::move(history),
             [&](const Trial& t, std::size_t i) {
                 if (hist_out)
                     *hist_out << trial_to_json(space, t, i).dump() << '\n' << std::flush;
             });
    nlohmann::json summary{{"trials", result.history.size()}};
    if (result.best)
        summary["best"] = trial_to_json(space, result.history[*result.best], *result.best);
    if (!s.out.empty())
        open_output(s.out) << summary.dump(2) << '\n';
    out << summary.dump() << '\n';
    return kOk;
}

inline int cmd_classify(const Settings& s, std::ostream& out) {
    const Corpus corpus = require_corpus(s.corpus, "--corpus");
    HybridConfig hc;
    hc.ontology_path = s.ontology;
    hc.backup = parse_backup(s.backup);
    hc.checkpoint_path = s.checkpoint;
    hc.embeddings_path = s.embeddings;
    hc.validate();
    const Ontology onto = load_ontology(hc.ontology_path);

    Backup backup;
    if (hc.backup == BackupStrategy::Majority) {
        const Corpus train_set = require_corpus(s.train_corpus, "--train-corpus (majority class source)");
        backup = majority_backup(majority_label(train_set));
    } else {
        auto model = std::make_shared<const LcrRotModel>(load_checkpoint(hc.checkpoint_path));
        const auto emb = load_embeddings(s, {&corpus});
        require_compatible(*model, *emb.embedder);
        backup = model_backup(model, emb.embedder);
    }

    std::optional<std::ofstream> file;
    if (!s.out.empty())
        file.emplace(open_output(s.out));
    std::size_t correct = 0;
    std::size_t by_ontology = 0;
    std::size_t ontology_correct = 0;
    for (const Sentence& sent : corpus.sentences) {
        const PredictionRecord r = classify_hybrid(sent, onto, backup);
        const bool hit = r.predicted == sent.polarity;
        correct += hit;
        if (r.stage == Stage::Ontology) {
            ++by_ontology;
            ontology_correct += hit;
        }
        if (file)
            *file << to_json(r).dump() << '\n';
    }
    const auto n = static_cast<double>(corpus.size());
    nlohmann::json summary{{"total", corpus.size()},
                           {"accuracy", corpus.empty() ? 0.0 : static_cast<double>(correct) / n},
                           {"ontology_decided", by_ontology},
                           {"ontology_correct", ontology_correct},
                           {"backup_decided", corpus.size() - by_ontology}};
    out << summary.dump() << '\n';
    return kOk;
}

inline int cmd_dump_attention(const Settings& s, std::ostream& out) {
    const Corpus corpus = require_corpus(s.corpus, "--corpus");
    if (s.checkpoint.empty())
        throw ConfigError("missing --checkpoint");
    const LcrRotModel model = load_checkpoint(s.checkpoint);
    const auto emb = load_embeddings(s, {&corpus});
    require_compatible(model, *emb.embedder);

    std::optional<std::ofstream> file;
    if (!s.out.empty())
        file.emplace(open_output(s.out));
    std::ostream& sink = file ? *file : out;
    const bool hierarchical = model.config.method != HierarchyMethod::None;
    const bool per_hop = rescales_each_hop(model.config.method);
    for (const Sentence& sent : corpus.sentences) {
        const SplitSentence split = split_around_target(sent);
        const AttentionTrace trace = attention_trace(split, *emb.embedder, model);
        for (std::size_t hop = 0; hop < trace.hops.size(); ++hop) {
            const HopTrace& h = trace.hops[hop];
            auto emit = [&](const char* side, const std::vector<std::string>& tokens, const std::vector<double>& scores) {
                if (tokens.empty())
                    return;
                nlohmann::json rec{{"sid", sent.sid},
                                   {"target", {sent.target.start, sent.target.end}},
                                   {"hop", hop + 1},
                                   {"side", side},
                                   {"tokens", tokens},
                                   {"scores", scores}};
                if (hierarchical) {
                    rec["hierarchical"] = per_hop ? h.hierarchical : trace.final_hierarchical;
                    rec["hierarchical_scope"] = per_hop ? "hop" : "final";
                }
                sink << rec.dump() << '\n';
            };
            emit("left", split.left, h.left);
            emit("right", split.right, h.right);
            emit("target_left", split.target, h.target_left);
            emit("target_right", split.target, h.target_right);
        }
    }
    return kOk;
}

} // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    Settings s;
    CLI::App app{"Hybrid ontology + multi-hop rotatory-attention aspect sentiment classifier", "haabsa"};
    app.require_subcommand(1);

    auto add_common = [&s](CLI::App* sub) {
        sub->add_option("--config", s.config, "JSON file with default values for any flag");
        sub->add_option("--seed", s.seed, "Random seed");
        sub->add_option("--corpus", s.corpus, "Corpus in JSON-lines format");
    };
    auto add_embedding = [&s](CLI::App* sub) {
        sub->add_option("--embeddings", s.embeddings, "Word vectors (.txt) or contextual layers (.jsonl)");
        sub->add_option("--combiner", s.combiner, "Contextual layer combination: bert or elmo");
        sub->add_option("--oov", s.oov, "Out-of-vocabulary policy: zero or hashed");
    };
    auto add_model = [&s](CLI::App* sub) {
        sub->add_option("--method", s.method, "Hierarchical attention method 0..4")->check(CLI::Range(0, 4));
        sub->add_option("--hops", s.hops, "Rotatory attention hops");
        sub->add_option("--hidden", s.hidden, "LSTM hidden size per direction");
    };
    auto add_training = [&s](CLI::App* sub) {
        sub->add_option("--learning-rate", s.learning_rate);
        sub->add_option("--momentum", s.momentum);
        sub->add_option("--l2", s.l2);
        sub->add_option("--dropout", s.dropout);
        sub->add_option("--init-bound", s.init_bound);
        sub->add_option("--epochs", s.epochs);
        sub->add_option("--batch", s.batch);
    };

    CLI::App* stats = app.add_subcommand("stats", "Polarity distribution of a corpus");
    add_common(stats);

    CLI::App* train_cmd = app.add_subcommand("train", "Train the backup network and write a checkpoint");
    add_common(train_cmd);
    add_embedding(train_cmd);
    add_model(train_cmd);
    add_training(train_cmd);
    train_cmd->add_option("--checkpoint", s.checkpoint, "Output checkpoint path");
    train_cmd->add_option("--out", s.out, "Epoch trace (JSON lines); stdout when omitted");

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "Accuracy and confusion matrix of a checkpoint");
    add_common(eval_cmd);
    add_embedding(eval_cmd);
    eval_cmd->add_option("--checkpoint", s.checkpoint);

    CLI::App* tune_cmd = app.add_subcommand("tune", "TPE search over learning rate, momentum, L2 and dropout");
    add_common(tune_cmd);
    add_embedding(tune_cmd);
    add_model(tune_cmd);
    add_training(tune_cmd);
    tune_cmd->add_option("--test-corpus", s.test_corpus, "Validation corpus");
    tune_cmd->add_option("--budget", s.budget, "Number of trials");
    tune_cmd->add_option("--history", s.history, "Trial history (JSON lines); resumed when present");
    tune_cmd->add_option("--out", s.out, "Summary output");

    CLI::App* classify_cmd = app.add_subcommand("classify", "Two-step ontology + backup classification");
    add_common(classify_cmd);
    add_embedding(classify_cmd);
    classify_cmd->add_option("--ontology", s.ontology);
    classify_cmd->add_option("--checkpoint", s.checkpoint);
    classify_cmd->add_option("--backup", s.backup, "model or majority")->check(CLI::IsMember({"model", "majority"}));
    classify_cmd->add_option("--train-corpus", s.train_corpus, "Training split for the majority label");
    classify_cmd->add_option("--out", s.out, "Per-sentence predictions (JSON lines)");

    CLI::App* dump_cmd = app.add_subcommand("dump-attention", "Token-aligned attention scores per hop and side");
    add_common(dump_cmd);
    add_embedding(dump_cmd);
    dump_cmd->add_option("--checkpoint", s.checkpoint);
    dump_cmd->add_option("--out", s.out, "Output (JSON lines); stdout when omitted");

    try {
        std::vector<std::string> args = raw_args;
        if (!args.empty()) {
            if (CLI::App* sub = app.get_subcommand_no_throw(args.front()))
                args = detail::merge_config(std::move(args), *sub);
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (stats->parsed()) return detail::cmd_stats(s, out);
        if (train_cmd->parsed()) return detail::cmd_train(s, out);
        if (eval_cmd->parsed()) return detail::cmd_evaluate(s, out);
        if (tune_cmd->parsed()) return detail::cmd_tune(s, out);
        if (classify_cmd->parsed()) return detail::cmd_classify(s, out);
        if (dump_cmd->parsed()) return detail::cmd_dump_attention(s, out);
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kDivergence;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

} // namespace haabsa::cli

#endif
