#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "hypermp/layer.hpp"

namespace hypermp {

// Spectral hypergraph convolution
//
//   X' = act( Dv^-1/2 H W De^-1 H^T Dv^-1/2 X Theta )
//
// and its translation into an equivalent message-passing layer, making the
// subsumption executable: for any (Theta, W_e) the translated layer produces
// the same output as the direct evaluation.

enum class ZeroDegreePolicy { treat_as_zero, error };

struct HgnnLayerParams {
    Tensor theta;                      // [d_in x d_out], learnable
    std::vector<double> edge_weights;  // length |E|, positive
};

inline Tensor hgnn_conv(Tape* tape, const Tensor& x, const Hypergraph& h,
                        const HgnnLayerParams& params, UnaryOp activation,
                        ZeroDegreePolicy zero_degree = ZeroDegreePolicy::treat_as_zero) {
    if (x.rows() != h.num_vertices()) throw ShapeError("hgnn_conv: X rows must equal vertex count");
    if (static_cast<int>(params.edge_weights.size()) != h.num_hyperedges())
        throw ShapeError("hgnn_conv: edge_weights length must equal hyperedge count");
    const SparseIncidence inc(h);
    const auto dv = h.vertex_degrees();
    const auto de = h.hyperedge_degrees();
    std::vector<double> dv_inv_sqrt(dv.size());
    for (std::size_t v = 0; v < dv.size(); ++v) {
        if (dv[v] == 0) {
            if (zero_degree == ZeroDegreePolicy::error)
                throw ContractError("hgnn_conv: vertex " + std::to_string(v) + " has degree 0");
            dv_inv_sqrt[v] = 0.0;
        } else {
            dv_inv_sqrt[v] = 1.0 / std::sqrt(double(dv[v]));
        }
    }
    std::vector<double> de_inv(de.size());
    for (std::size_t e = 0; e < de.size(); ++e) de_inv[e] = 1.0 / de[e];  // hyperedges are non-empty

    Tensor t = row_scale(tape, x, dv_inv_sqrt);             // Dv^-1/2 X
    t = spmm(tape, inc, true, t);                           // H^T .
    t = row_scale(tape, t, de_inv);                         // De^-1 .
    t = row_scale(tape, t, params.edge_weights);            // W .
    t = spmm(tape, inc, false, t);                          // H .
    t = row_scale(tape, t, dv_inv_sqrt);                    // Dv^-1/2 .
    return elementwise(tape, activation, matmul(tape, t, params.theta));
}

/// Weight translation: builds a layer configuration and parameters whose
/// forward pass reproduces hgnn_conv exactly. Outgoing vertex messages are
/// scaled by deg(v)^-1/2, the hyperedge message is the member mean scaled by
/// the hyperedge weight, there is no hyperedge update, and the vertex update
/// is act(aggregate * Theta) with the aggregate rescaled by deg(v)^-1/2.
inline std::pair<LayerConfig, LayerParams> hgnn_as_hmpnn(const HgnnLayerParams& params,
                                                         UnaryOp activation) {
    LayerConfig cfg;
    cfg.f_v = FuncChoice::identity;
    cfg.scale_messages_by_inv_sqrt_degree = true;
    cfg.g_w = FuncChoice::keep;
    cfg.f_w = FuncChoice::identity;
    cfg.agg_out_edge = AggKind::mean;
    cfg.scale_edge_messages_by_weight = true;
    cfg.agg_in_vertex = AggKind::sum;
    cfg.scale_vertex_agg_by_inv_sqrt_degree = true;
    cfg.g_v = FuncChoice::linear_act;
    cfg.activation = activation;
    cfg.in_dim = params.theta.rows();
    cfg.edge_in_dim = 1;  // hyperedge state is never consumed
    cfg.hidden_dim = params.theta.rows();
    cfg.out_dim = params.theta.cols();

    LayerParams lp;
    lp.g_v.kind = FuncChoice::linear_act;
    lp.g_v.activation = activation;
    lp.g_v.w1 = params.theta;  // aliases the translated weights
    lp.g_v.b1 = Tensor::vec(std::vector<double>(params.theta.cols(), 0.0));
    lp.edge_weights = params.edge_weights;
    return {cfg, lp};
}

/// Configuration with identity messaging and attention-block updates over the
/// incident multisets.
inline LayerConfig allset_as_config(int in_dim, int hidden_dim, int out_dim, int heads = 1) {
    LayerConfig cfg;
    cfg.f_v = FuncChoice::identity;
    cfg.f_w = FuncChoice::identity;
    cfg.g_w = FuncChoice::allset;
    cfg.g_v = FuncChoice::allset;
    cfg.agg_in_edge = AggKind::sum;
    cfg.agg_out_edge = AggKind::sum;
    cfg.agg_in_vertex = AggKind::sum;
    cfg.in_dim = in_dim;
    cfg.edge_in_dim = in_dim;
    cfg.hidden_dim = hidden_dim;
    cfg.out_dim = out_dim;
    cfg.allset_heads = heads;
    cfg.activation = UnaryOp::relu;
    return cfg;
}

}  // namespace hypermp
