#ifndef HAABSA_CHECKPOINT_HPP
#define HAABSA_CHECKPOINT_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "haabsa/lcr_rot.hpp"

namespace haabsa {

// Checkpoint layout:
//   {"format": "haabsa-lcr-rot", "version": 1,
//    "config": {embedding_dim, hidden_dim, hops, method, classes, dropout, elmo_layers},
//    "embedding": {...free-form description of the input source...},
//    "parameters": {"<name>": {"shape": [rows(, cols)], "values": [...]}, ...}}
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"embedding_dim", c.embedding_dim}, {"hidden_dim", c.hidden_dim},
            {"hops", c.hops},                   {"method", static_cast<int>(c.method)},
            {"classes", c.classes},             {"dropout", c.dropout},
            {"elmo_layers", c.elmo_layers}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.hops = j.at("hops").get<std::size_t>();
    c.method = hierarchy_method(j.at("method").get<int>());
    c.classes = j.value("classes", kNumClasses);
    c.dropout = j.value("dropout", 0.0);
    c.elmo_layers = j.value("elmo_layers", std::size_t{0});
    c.validate();
    return c;
}

inline nlohmann::json tensor_to_json(const Tensor& t) {
    nlohmann::json shape = t.is_vector() ? nlohmann::json::array({t.rows()}) : nlohmann::json::array({t.rows(), t.cols()});
    return {{"shape", shape}, {"values", t.storage()}};
}

inline Tensor tensor_from_json(const nlohmann::json& j) {
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    auto values = j.at("values").get<std::vector<double>>();
    Tensor t;
    if (shape.size() == 1)
        t = Tensor(shape[0]);
    else if (shape.size() == 2)
        t = Tensor(shape[0], shape[1]);
    else
        throw ValidationError("tensor shape must have rank 1 or 2");
    if (values.size() != t.size())
        throw ValidationError("tensor has " + std::to_string(values.size()) + " values for shape " + t.shape_string());
    std::copy(values.begin(), values.end(), t.values().begin());
    return t;
}

inline nlohmann::json checkpoint_to_json(const LcrRotModel& model, const nlohmann::json& embedding = nlohmann::json::object()) {
    nlohmann::json params = nlohmann::json::object();
    for (const Parameter* p : model.parameters())
        params[p->name] = tensor_to_json(p->value);
    return {{"format", "haabsa-lcr-rot"},
            {"version", kCheckpointVersion},
            {"config", config_to_json(model.config)},
            {"embedding", embedding},
            {"parameters", params}};
}

inline LcrRotModel checkpoint_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != "haabsa-lcr-rot")
        throw ValidationError("not an LCR-Rot checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw ValidationError("unsupported checkpoint version " + j.at("version").dump());
    LcrRotModel model(config_from_json(j.at("config")));
    const auto& params = j.at("parameters");
    for (Parameter* p : model.parameters()) {
        if (!params.contains(p->name))
            throw ValidationError("checkpoint lacks parameter '" + p->name + "'");
        Tensor t = tensor_from_json(params.at(p->name));
        if (!t.same_shape(p->value))
            throw ValidationError("parameter '" + p->name + "' has shape " + t.shape_string() + ", expected " +
                                  p->value.shape_string());
        p->value = std::move(t);
        p->zero_grad();
    }
    return model;
}

inline void save_checkpoint(const std::string& path, const LcrRotModel& model,
                            const nlohmann::json& embedding = nlohmann::json::object()) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write checkpoint '" + path + "'");
    out << checkpoint_to_json(model, embedding).dump() << '\n';
}

inline nlohmann::json read_checkpoint_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open checkpoint '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline LcrRotModel load_checkpoint(const std::string& path) {
    try {
        return checkpoint_from_json(read_checkpoint_json(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

} // namespace haabsa

#endif
