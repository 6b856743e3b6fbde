#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hypermp/model.hpp"
#include "hypermp/train.hpp"

namespace hypermp {

// Flat "key = value" experiment configuration with section-prefixed keys
// (model.*, layer.*, train.*, data.*). '#' starts a comment. Every key can be
// overridden by an environment variable: HYPERMP_ + key upper-cased with '.'
// replaced by '_', e.g. HYPERMP_TRAIN_SEED.

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& field, const std::string& message)
        : std::runtime_error(field + ": " + message), field(field) {}
    std::string field;
};

using FlatConfig = std::map<std::string, std::string>;

inline FlatConfig parse_flat_config(std::istream& in) {
    FlatConfig out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no);
        out[key] = value;
    }
    return out;
}

inline FlatConfig parse_flat_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    return parse_flat_config(in);
}

inline std::string env_var_for_key(const std::string& key) {
    std::string v = "HYPERMP_";
    for (char c : key) v += c == '.' ? '_' : char(std::toupper(static_cast<unsigned char>(c)));
    return v;
}

// ---------------------------------------------------------------------------
// Enum <-> string
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
struct EnumNames;

template <>
struct EnumNames<FuncChoice> {
    static constexpr std::pair<FuncChoice, const char*> table[] = {
        {FuncChoice::identity, "identity"},   {FuncChoice::keep, "keep"},
        {FuncChoice::linear, "linear"},       {FuncChoice::linear_act, "linear+activation"},
        {FuncChoice::mlp, "mlp"},             {FuncChoice::allset, "allset"},
    };
};
template <>
struct EnumNames<AggKind> {
    static constexpr std::pair<AggKind, const char*> table[] = {
        {AggKind::sum, "sum"},
        {AggKind::mean, "mean"},
    };
};
template <>
struct EnumNames<SelfCombine> {
    static constexpr std::pair<SelfCombine, const char*> table[] = {
        {SelfCombine::none, "none"},
        {SelfCombine::sum, "sum"},
        {SelfCombine::concat, "concat"},
    };
};
template <>
struct EnumNames<UnaryOp> {
    static constexpr std::pair<UnaryOp, const char*> table[] = {
        {UnaryOp::identity, "identity"},
        {UnaryOp::sigmoid, "sigmoid"},
        {UnaryOp::relu, "relu"},
    };
};
template <>
struct EnumNames<AdjacencyDropoutMode> {
    static constexpr std::pair<AdjacencyDropoutMode, const char*> table[] = {
        {AdjacencyDropoutMode::hyperedge, "hyperedge"},
        {AdjacencyDropoutMode::incidence_entry, "incidence-entry"},
    };
};
template <>
struct EnumNames<DropoutScaling> {
    static constexpr std::pair<DropoutScaling, const char*> table[] = {
        {DropoutScaling::paper, "paper"},
        {DropoutScaling::inverted, "inverted"},
    };
};
template <>
struct EnumNames<ModelKind> {
    static constexpr std::pair<ModelKind, const char*> table[] = {
        {ModelKind::hmpnn, "hmpnn"},
        {ModelKind::hgnn, "hgnn"},
        {ModelKind::hmpnn_as_hgnn, "hmpnn-as-hgnn"},
        {ModelKind::allset_config, "allset-config"},
    };
};
template <>
struct EnumNames<OptimizerKind> {
    static constexpr std::pair<OptimizerKind, const char*> table[] = {
        {OptimizerKind::adam, "adam"},
        {OptimizerKind::sgd, "sgd"},
    };
};

}  // namespace detail

template <typename T>
std::string enum_name(T value) {
    for (const auto& [v, name] : detail::EnumNames<T>::table)
        if (v == value) return name;
    return "?";
}

template <typename T>
T parse_enum(const std::string& field, const std::string& text) {
    for (const auto& [v, name] : detail::EnumNames<T>::table)
        if (text == name) return v;
    std::string options;
    for (const auto& [v, name] : detail::EnumNames<T>::table)
        options += std::string(options.empty() ? "" : ", ") + name;
    throw ConfigError(field, "'" + text + "' is not one of {" + options + "}");
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    ModelConfig model;
    TrainConfig train;
    std::string data_dir = "data/cora";
};

/// Two message-passing layers with sigmoid activation, sum aggregations,
/// adjacency dropout 0.7 and representation dropout 0.5.
inline ExperimentConfig default_experiment() {
    ExperimentConfig e;
    e.model.kind = ModelKind::hmpnn;
    e.model.num_layers = 2;
    e.model.hidden_dim = 2;
    LayerConfig& l = e.model.layer;
    l.f_v = FuncChoice::linear;
    l.g_w = FuncChoice::linear_act;
    l.f_w = FuncChoice::identity;
    l.g_v = FuncChoice::linear_act;
    l.agg_in_edge = AggKind::sum;
    l.agg_out_edge = AggKind::sum;
    l.agg_in_vertex = AggKind::sum;
    l.activation = UnaryOp::sigmoid;
    l.vertex_dropout_rate = 0.5;
    l.edge_dropout_rate = 0.5;
    l.adjacency_dropout_rate = 0.7;
    l.adjacency_dropout_mode = AdjacencyDropoutMode::hyperedge;
    l.dropout_scaling = DropoutScaling::paper;
    l.batch_norm = false;
    return e;
}

namespace detail {

struct ConfigReader {
    const FlatConfig& flat;
    std::vector<std::string> consumed;

    const std::string* find(const std::string& key) {
        consumed.push_back(key);
        const std::string env = env_var_for_key(key);
        if (const char* v = std::getenv(env.c_str())) {
            static thread_local std::string hold;
            hold = v;
            return &hold;
        }
        auto it = flat.find(key);
        return it == flat.end() ? nullptr : &it->second;
    }

    void read(const std::string& key, std::string& out) {
        if (const auto* v = find(key)) out = *v;
    }
    void read(const std::string& key, bool& out) {
        if (const auto* v = find(key)) {
            if (*v == "true" || *v == "1")
                out = true;
            else if (*v == "false" || *v == "0")
                out = false;
            else
                throw ConfigError(key, "'" + *v + "' is not a boolean");
        }
    }
    void read(const std::string& key, int& out) {
        if (const auto* v = find(key)) {
            try {
                std::size_t pos = 0;
                out = std::stoi(*v, &pos);
                if (pos != v->size()) throw std::invalid_argument("");
            } catch (...) {
                throw ConfigError(key, "'" + *v + "' is not an integer");
            }
        }
    }
    void read(const std::string& key, std::uint64_t& out) {
        if (const auto* v = find(key)) {
            try {
                std::size_t pos = 0;
                out = std::stoull(*v, &pos);
                if (pos != v->size()) throw std::invalid_argument("");
            } catch (...) {
                throw ConfigError(key, "'" + *v + "' is not a non-negative integer");
            }
        }
    }
    void read(const std::string& key, double& out) {
        if (const auto* v = find(key)) {
            try {
                std::size_t pos = 0;
                out = std::stod(*v, &pos);
                if (pos != v->size()) throw std::invalid_argument("");
            } catch (...) {
                throw ConfigError(key, "'" + *v + "' is not a number");
            }
        }
    }
    template <typename E>
    void read_enum(const std::string& key, E& out) {
        if (const auto* v = find(key)) out = parse_enum<E>(key, *v);
    }
};

}  // namespace detail

/// Defaults merged with the flat config (file < environment). Unknown keys
/// and out-of-range values raise ConfigError with the offending field.
inline ExperimentConfig experiment_from_flat(const FlatConfig& flat) {
    ExperimentConfig e = default_experiment();
    detail::ConfigReader r{flat, {}};
    r.read_enum("model.kind", e.model.kind);
    r.read("model.num_layers", e.model.num_layers);
    r.read("model.hidden_dim", e.model.hidden_dim);
    LayerConfig& l = e.model.layer;
    r.read_enum("layer.f_v", l.f_v);
    r.read_enum("layer.f_w", l.f_w);
    r.read_enum("layer.g_v", l.g_v);
    r.read_enum("layer.g_w", l.g_w);
    r.read_enum("layer.f_w_self", l.f_w_self);
    r.read_enum("layer.g_v_self", l.g_v_self);
    r.read_enum("layer.g_w_self", l.g_w_self);
    r.read_enum("layer.agg_in_edge", l.agg_in_edge);
    r.read_enum("layer.agg_out_edge", l.agg_out_edge);
    r.read_enum("layer.agg_in_vertex", l.agg_in_vertex);
    r.read_enum("layer.activation", l.activation);
    r.read("layer.vertex_dropout_rate", l.vertex_dropout_rate);
    r.read("layer.edge_dropout_rate", l.edge_dropout_rate);
    r.read("layer.adjacency_dropout_rate", l.adjacency_dropout_rate);
    r.read_enum("layer.adjacency_dropout_mode", l.adjacency_dropout_mode);
    r.read_enum("layer.dropout_scaling", l.dropout_scaling);
    r.read("layer.batch_norm", l.batch_norm);
    r.read("layer.allset_heads", l.allset_heads);
    r.read_enum("train.optimizer", e.train.optimizer);
    r.read("train.learning_rate", e.train.learning_rate);
    r.read("train.weight_decay", e.train.weight_decay);
    r.read("train.epochs", e.train.epochs);
    r.read("train.adam_beta1", e.train.adam_beta1);
    r.read("train.adam_beta2", e.train.adam_beta2);
    r.read("train.adam_eps", e.train.adam_eps);
    r.read("train.early_stop_patience", e.train.early_stop_patience);
    r.read("train.eval_every", e.train.eval_every);
    r.read("train.seed", e.train.seed);
    r.read("data.dir", e.data_dir);

    for (const auto& [key, value] : flat) {
        bool known = false;
        for (const auto& k : r.consumed)
            if (k == key) {
                known = true;
                break;
            }
        if (!known) throw ConfigError(key, "unknown configuration key");
    }

    // range validation with field-level messages
    auto check = [](bool ok, const std::string& field, const std::string& msg) {
        if (!ok) throw ConfigError(field, msg);
    };
    check(e.model.num_layers >= 1, "model.num_layers", "must be >= 1");
    check(e.model.hidden_dim >= 1, "model.hidden_dim", "must be >= 1");
    check(l.vertex_dropout_rate >= 0 && l.vertex_dropout_rate < 1, "layer.vertex_dropout_rate",
          "must be in [0,1)");
    check(l.edge_dropout_rate >= 0 && l.edge_dropout_rate < 1, "layer.edge_dropout_rate",
          "must be in [0,1)");
    check(l.adjacency_dropout_rate >= 0 && l.adjacency_dropout_rate <= 1,
          "layer.adjacency_dropout_rate", "must be in [0,1]");
    check(l.allset_heads >= 1, "layer.allset_heads", "must be >= 1");
    check(e.train.learning_rate > 0, "train.learning_rate", "must be > 0");
    check(e.train.weight_decay >= 0, "train.weight_decay", "must be >= 0");
    check(e.train.epochs >= 1, "train.epochs", "must be >= 1");
    check(e.train.adam_beta1 >= 0 && e.train.adam_beta1 < 1, "train.adam_beta1", "must be in [0,1)");
    check(e.train.adam_beta2 >= 0 && e.train.adam_beta2 < 1, "train.adam_beta2", "must be in [0,1)");
    check(e.train.adam_eps > 0, "train.adam_eps", "must be > 0");
    check(e.train.early_stop_patience >= 1, "train.early_stop_patience", "must be >= 1");
    check(e.train.eval_every >= 1, "train.eval_every", "must be >= 1");
    return e;
}

/// The full effective configuration, suitable for echoing and re-loading.
inline FlatConfig experiment_to_flat(const ExperimentConfig& e) {
    FlatConfig f;
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    const LayerConfig& l = e.model.layer;
    f["model.kind"] = enum_name(e.model.kind);
    f["model.num_layers"] = std::to_string(e.model.num_layers);
    f["model.hidden_dim"] = std::to_string(e.model.hidden_dim);
    f["layer.f_v"] = enum_name(l.f_v);
    f["layer.f_w"] = enum_name(l.f_w);
    f["layer.g_v"] = enum_name(l.g_v);
    f["layer.g_w"] = enum_name(l.g_w);
    f["layer.f_w_self"] = enum_name(l.f_w_self);
    f["layer.g_v_self"] = enum_name(l.g_v_self);
    f["layer.g_w_self"] = enum_name(l.g_w_self);
    f["layer.agg_in_edge"] = enum_name(l.agg_in_edge);
    f["layer.agg_out_edge"] = enum_name(l.agg_out_edge);
    f["layer.agg_in_vertex"] = enum_name(l.agg_in_vertex);
    f["layer.activation"] = enum_name(l.activation);
    f["layer.vertex_dropout_rate"] = num(l.vertex_dropout_rate);
    f["layer.edge_dropout_rate"] = num(l.edge_dropout_rate);
    f["layer.adjacency_dropout_rate"] = num(l.adjacency_dropout_rate);
    f["layer.adjacency_dropout_mode"] = enum_name(l.adjacency_dropout_mode);
    f["layer.dropout_scaling"] = enum_name(l.dropout_scaling);
    f["layer.batch_norm"] = l.batch_norm ? "true" : "false";
    f["layer.allset_heads"] = std::to_string(l.allset_heads);
    f["train.optimizer"] = enum_name(e.train.optimizer);
    f["train.learning_rate"] = num(e.train.learning_rate);
    f["train.weight_decay"] = num(e.train.weight_decay);
    f["train.epochs"] = std::to_string(e.train.epochs);
    f["train.adam_beta1"] = num(e.train.adam_beta1);
    f["train.adam_beta2"] = num(e.train.adam_beta2);
    f["train.adam_eps"] = num(e.train.adam_eps);
    f["train.early_stop_patience"] = std::to_string(e.train.early_stop_patience);
    f["train.eval_every"] = std::to_string(e.train.eval_every);
    f["train.seed"] = std::to_string(e.train.seed);
    f["data.dir"] = e.data_dir;
    return f;
}

inline void write_flat_config(std::ostream& out, const FlatConfig& f) {
    for (const auto& [k, v] : f) out << k << " = " << v << '\n';
}

}  // namespace hypermp
