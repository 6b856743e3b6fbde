#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hypermp/baselines.hpp"
#include "hypermp/data.hpp"
#include "hypermp/layer.hpp"

namespace hypermp {

enum class ModelKind { hmpnn, hgnn, hmpnn_as_hgnn, allset_config };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::hmpnn: return "hmpnn";
        case ModelKind::hgnn: return "hgnn";
        case ModelKind::hmpnn_as_hgnn: return "hmpnn-as-hgnn";
        case ModelKind::allset_config: return "allset-config";
    }
    return "?";
}

struct ModelConfig {
    ModelKind kind = ModelKind::hmpnn;
    int num_layers = 2;
    int hidden_dim = 2;
    LayerConfig layer;  // slot/aggregation/dropout template; dims filled per layer
};

// A stack of layers over one hypergraph-structured dataset. Layer dims chain
// input width -> hidden -> num_classes; the last layer's vertex update drops
// its activation so the stack emits logits.
class Model {
public:
    static Model build(const ModelConfig& mc, const DatasetBundle& bundle, Rng& rng) {
        Model m;
        m.kind_ = mc.kind;
        const int in_dim = bundle.feature_dim();
        const int out_dim = bundle.num_classes;
        const int edge_feat_dim =
            bundle.hyperedge_features.defined() && bundle.hyperedge_features.cols() > 0
                ? bundle.hyperedge_features.cols()
                : 1;
        if (mc.num_layers < 1) throw ContractError("model: num_layers must be >= 1");
        if (mc.kind == ModelKind::hgnn || mc.kind == ModelKind::hmpnn_as_hgnn) {
            m.activation_ = mc.layer.activation;
            int d = in_dim;
            for (int l = 0; l < mc.num_layers; ++l) {
                const int d_out = l + 1 == mc.num_layers ? out_dim : mc.hidden_dim;
                HgnnLayerParams hp;
                hp.theta = glorot(d, d_out, rng);
                hp.edge_weights = bundle.hypergraph.hyperedge_weights();
                m.hgnn_.push_back(std::move(hp));
                d = d_out;
            }
            return m;
        }
        int d = in_dim;
        int edge_d = edge_feat_dim;
        for (int l = 0; l < mc.num_layers; ++l) {
            const bool last = l + 1 == mc.num_layers;
            LayerConfig cfg = mc.kind == ModelKind::allset_config
                                  ? allset_as_config(d, mc.hidden_dim, last ? out_dim : mc.hidden_dim,
                                                     mc.layer.allset_heads)
                                  : mc.layer;
            if (mc.kind == ModelKind::allset_config) {
                cfg.vertex_dropout_rate = mc.layer.vertex_dropout_rate;
                cfg.edge_dropout_rate = mc.layer.edge_dropout_rate;
                cfg.adjacency_dropout_rate = mc.layer.adjacency_dropout_rate;
                cfg.adjacency_dropout_mode = mc.layer.adjacency_dropout_mode;
                cfg.dropout_scaling = mc.layer.dropout_scaling;
                cfg.edge_in_dim = edge_d;
            } else {
                cfg.in_dim = d;
                cfg.edge_in_dim = edge_d;
                cfg.hidden_dim = mc.hidden_dim;
                cfg.out_dim = last ? out_dim : mc.hidden_dim;
                if (last && cfg.g_v == FuncChoice::linear_act) cfg.g_v = FuncChoice::linear;
            }
            const LayerShapes shapes = infer_shapes(cfg);
            m.layer_cfgs_.push_back(cfg);
            m.layer_params_.push_back(LayerParams::init(cfg, rng));
            m.layer_params_.back().edge_weights = bundle.hypergraph.hyperedge_weights();
            d = shapes.vertex_out_dim;
            edge_d = shapes.edge_state_dim;
        }
        return m;
    }

    ModelKind kind() const { return kind_; }
    const std::vector<LayerConfig>& layer_configs() const { return layer_cfgs_; }
    std::vector<LayerParams>& layer_params() { return layer_params_; }
    const std::vector<HgnnLayerParams>& hgnn_layers() const { return hgnn_; }

    /// Full-hypergraph forward pass; returns logits [V x num_classes].
    Tensor forward(Tape* tape, const DatasetBundle& bundle, Mode mode, Rng& rng) const {
        if (kind_ == ModelKind::hgnn) {
            Tensor x = bundle.features;
            for (std::size_t l = 0; l < hgnn_.size(); ++l) {
                const UnaryOp act = l + 1 == hgnn_.size() ? UnaryOp::identity : activation_;
                x = hgnn_conv(tape, x, bundle.hypergraph, hgnn_[l], act);
            }
            return x;
        }
        if (kind_ == ModelKind::hmpnn_as_hgnn) {
            Tensor x = bundle.features;
            const Tensor w = Tensor::zeros(bundle.hypergraph.num_hyperedges(), 1);
            for (std::size_t l = 0; l < hgnn_.size(); ++l) {
                const UnaryOp act = l + 1 == hgnn_.size() ? UnaryOp::identity : activation_;
                auto [cfg, lp] = hgnn_as_hmpnn(hgnn_[l], act);
                x = forward_layer(tape, x, w, bundle.hypergraph, cfg, lp, mode, rng).first;
            }
            return x;
        }
        Tensor w = initial_edge_state(bundle);
        Tensor x;
        for (std::size_t l = 0; l < layer_cfgs_.size(); ++l) {
            std::pair<Tensor, Tensor> next;
            if (l == 0 && layer_cfgs_[0].f_v != FuncChoice::identity &&
                bundle.features_sparse.rows == bundle.num_vertices()) {
                next = forward_layer(tape, bundle.features_sparse, w, bundle.hypergraph,
                                     layer_cfgs_[0], layer_params_[0], mode, rng);
            } else {
                next = forward_layer(tape, l == 0 ? bundle.features : x, w, bundle.hypergraph,
                                     layer_cfgs_[l], layer_params_[l], mode, rng);
            }
            x = next.first;
            w = next.second;
        }
        return x;
    }

    std::vector<std::pair<std::string, Tensor>> named_parameters() const {
        std::vector<std::pair<std::string, Tensor>> out;
        for (std::size_t l = 0; l < layer_params_.size(); ++l)
            for (auto& kv : layer_params_[l].named_parameters("layer" + std::to_string(l)))
                out.push_back(kv);
        for (std::size_t l = 0; l < hgnn_.size(); ++l)
            out.emplace_back("layer" + std::to_string(l) + ".theta", hgnn_[l].theta);
        return out;
    }

    /// Parameters plus non-learnable state (batch-norm running stats).
    std::vector<std::pair<std::string, Tensor>> named_state() const {
        auto out = named_parameters();
        for (std::size_t l = 0; l < layer_params_.size(); ++l)
            for (auto& kv : layer_params_[l].named_buffers("layer" + std::to_string(l)))
                out.push_back(kv);
        return out;
    }

    std::vector<Tensor> parameters() const {
        std::vector<Tensor> out;
        for (auto& [name, t] : named_parameters()) out.push_back(t);
        return out;
    }

private:
    Tensor initial_edge_state(const DatasetBundle& bundle) const {
        const int num_edges = bundle.hypergraph.num_hyperedges();
        const int want = layer_cfgs_.empty() ? 1 : layer_cfgs_[0].edge_in_dim;
        if (bundle.hyperedge_features.defined() && bundle.hyperedge_features.rows() == num_edges &&
            bundle.hyperedge_features.cols() == want)
            return bundle.hyperedge_features;
        return Tensor::zeros(num_edges, want);
    }

    ModelKind kind_ = ModelKind::hmpnn;
    std::vector<LayerConfig> layer_cfgs_;
    std::vector<LayerParams> layer_params_;
    std::vector<HgnnLayerParams> hgnn_;
    UnaryOp activation_ = UnaryOp::sigmoid;
};

}  // namespace hypermp
