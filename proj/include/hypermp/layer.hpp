#pragma once

#include <cmath>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "hypermp/allset.hpp"
#include "hypermp/hypergraph.hpp"
#include "hypermp/random.hpp"
#include "hypermp/tensor.hpp"

namespace hypermp {

// One message-passing layer over a hypergraph, phase by phase:
//
//   M_v = f_v(X_v)                         vertex messages
//   W'  = g_w(W_e, agg_in_edge of M_v)     hyperedge update
//   M_e = f_w(W_e, agg_out_edge of M_v)    hyperedge messages (pre-update W_e)
//   X'  = g_v(X_v, agg_in_vertex of M_e)   vertex update
//
// Every slot is a configuration choice; LayerConfig is one point of the
// design space. Aggregations run over the incidence pattern, optionally
// thinned per forward pass by adjacency dropout.

enum class FuncChoice {
    identity,    // two-argument slots: return the aggregate unchanged
    keep,        // two-argument slots: return own state unchanged (no update)
    linear,
    linear_act,  // activation(linear(.))
    mlp,         // one hidden layer of width hidden_dim
    allset,      // attention block over the incident multiset (g_v / g_w only)
};

enum class AggKind { sum, mean };
enum class SelfCombine { none, sum, concat };  // how two-argument slots see their own state
enum class AdjacencyDropoutMode { hyperedge, incidence_entry };
enum class DropoutScaling { paper, inverted };  // survivors scaled (n+k)/n vs n/(n-k)
enum class Mode { train, eval };

struct LayerConfig {
    FuncChoice f_v = FuncChoice::identity;
    FuncChoice f_w = FuncChoice::identity;
    FuncChoice g_v = FuncChoice::identity;
    FuncChoice g_w = FuncChoice::identity;
    SelfCombine f_w_self = SelfCombine::none;
    SelfCombine g_v_self = SelfCombine::none;
    SelfCombine g_w_self = SelfCombine::none;

    AggKind agg_in_edge = AggKind::sum;    // members -> hyperedge, update path
    AggKind agg_out_edge = AggKind::sum;   // members -> hyperedge, message path
    AggKind agg_in_vertex = AggKind::sum;  // hyperedges -> vertex

    UnaryOp activation = UnaryOp::sigmoid;

    double vertex_dropout_rate = 0.0;  // inside g_v
    double edge_dropout_rate = 0.0;    // inside g_w
    double adjacency_dropout_rate = 0.0;
    AdjacencyDropoutMode adjacency_dropout_mode = AdjacencyDropoutMode::hyperedge;
    DropoutScaling dropout_scaling = DropoutScaling::paper;
    bool batch_norm = false;

    int in_dim = 0;       // vertex feature width in
    int edge_in_dim = 0;  // hyperedge feature width in
    int hidden_dim = 0;   // message width / mlp hidden width
    int out_dim = 0;      // vertex feature width out
    int allset_heads = 1;

    // Spectral-convolution hooks (see hgnn_as_hmpnn): scale outgoing vertex
    // messages and/or the incoming vertex aggregate by deg(v)^-1/2, and scale
    // hyperedge messages by the hyperedge weight.
    bool scale_messages_by_inv_sqrt_degree = false;
    bool scale_vertex_agg_by_inv_sqrt_degree = false;
    bool scale_edge_messages_by_weight = false;

    void validate() const {
        auto rate_ok = [](double r) { return r >= 0.0 && r < 1.0; };
        if (!rate_ok(vertex_dropout_rate)) throw ContractError("vertex_dropout_rate must be in [0,1)");
        if (!rate_ok(edge_dropout_rate)) throw ContractError("edge_dropout_rate must be in [0,1)");
        if (adjacency_dropout_rate < 0.0 || adjacency_dropout_rate > 1.0)
            throw ContractError("adjacency_dropout_rate must be in [0,1]");
        if (in_dim <= 0 || out_dim <= 0) throw ContractError("in_dim/out_dim must be positive");
        if (hidden_dim <= 0) throw ContractError("hidden_dim must be positive");
        if (edge_in_dim <= 0) throw ContractError("edge_in_dim must be positive");
        if (f_v == FuncChoice::keep || f_v == FuncChoice::allset)
            throw ContractError("f_v supports identity/linear/linear+activation/mlp");
        if (f_w == FuncChoice::allset) throw ContractError("f_w does not support allset");
        if (allset_heads < 1) throw ContractError("allset_heads must be >= 1");
    }
};

// Shapes that fall out of a LayerConfig.
struct LayerShapes {
    int msg_dim = 0;         // M_v width
    int edge_state_dim = 0;  // W' width
    int edge_msg_dim = 0;    // M_e width
    int vertex_out_dim = 0;  // X' width
};

namespace detail {

inline int combined_dim(SelfCombine mode, int self_dim, int agg_dim, const char* slot) {
    switch (mode) {
        case SelfCombine::none: return agg_dim;
        case SelfCombine::sum:
            if (self_dim != agg_dim)
                throw ShapeError(std::string(slot) + ": self=sum needs state width " +
                                 std::to_string(agg_dim) + ", have " + std::to_string(self_dim));
            return agg_dim;
        case SelfCombine::concat: return self_dim + agg_dim;
    }
    return agg_dim;
}

inline int slot_out_dim(FuncChoice kind, int input_dim, int self_dim, int configured_out) {
    switch (kind) {
        case FuncChoice::identity: return input_dim;
        case FuncChoice::keep: return self_dim;
        default: return configured_out;
    }
}

}  // namespace detail

inline LayerShapes infer_shapes(const LayerConfig& cfg) {
    cfg.validate();
    LayerShapes s;
    s.msg_dim = cfg.f_v == FuncChoice::identity ? cfg.in_dim : cfg.hidden_dim;

    const int gw_in = cfg.g_w == FuncChoice::allset
                          ? s.msg_dim
                          : detail::combined_dim(cfg.g_w_self, cfg.edge_in_dim, s.msg_dim, "g_w");
    s.edge_state_dim = detail::slot_out_dim(cfg.g_w, gw_in, cfg.edge_in_dim, cfg.hidden_dim);

    const int fw_in = detail::combined_dim(cfg.f_w_self, cfg.edge_in_dim, s.msg_dim, "f_w");
    s.edge_msg_dim = detail::slot_out_dim(cfg.f_w, fw_in, cfg.edge_in_dim, cfg.hidden_dim);

    const int gv_in = cfg.g_v == FuncChoice::allset
                          ? s.edge_msg_dim
                          : detail::combined_dim(cfg.g_v_self, cfg.in_dim, s.edge_msg_dim, "g_v");
    s.vertex_out_dim = detail::slot_out_dim(cfg.g_v, gv_in, cfg.in_dim, cfg.out_dim);
    if (s.vertex_out_dim != cfg.out_dim)
        throw ShapeError("layer output width " + std::to_string(s.vertex_out_dim) +
                         " does not match out_dim " + std::to_string(cfg.out_dim) +
                         " (pick matching dims or a learnable g_v)");
    return s;
}

// Learnable weights for one function slot.
struct SlotParams {
    FuncChoice kind = FuncChoice::identity;
    UnaryOp activation = UnaryOp::identity;
    Tensor w1, b1, w2, b2;  // linear: w1/b1 only; mlp: both layers

    static SlotParams init(FuncChoice kind, UnaryOp act, int in_dim, int hidden_dim, int out_dim,
                           Rng& rng) {
        SlotParams p;
        p.kind = kind;
        p.activation = act;
        if (kind == FuncChoice::linear || kind == FuncChoice::linear_act) {
            p.w1 = glorot(in_dim, out_dim, rng);
            p.b1 = Tensor::vec(std::vector<double>(out_dim, 0.0));
        } else if (kind == FuncChoice::mlp) {
            p.w1 = glorot(in_dim, hidden_dim, rng);
            p.b1 = Tensor::vec(std::vector<double>(hidden_dim, 0.0));
            p.w2 = glorot(hidden_dim, out_dim, rng);
            p.b2 = Tensor::vec(std::vector<double>(out_dim, 0.0));
        }
        return p;
    }

    Tensor apply(Tape* tape, const Tensor& in) const {
        switch (kind) {
            case FuncChoice::identity: return in;
            case FuncChoice::linear: return add_row_bias(tape, matmul(tape, in, w1), b1);
            case FuncChoice::linear_act:
                return elementwise(tape, activation,
                                   add_row_bias(tape, matmul(tape, in, w1), b1));
            case FuncChoice::mlp: {
                Tensor h = elementwise(tape, activation,
                                       add_row_bias(tape, matmul(tape, in, w1), b1));
                return add_row_bias(tape, matmul(tape, h, w2), b2);
            }
            default: throw ContractError("SlotParams::apply: unsupported choice");
        }
    }

    // Same map with a sparse constant input (first matmul replaced).
    Tensor apply(Tape* tape, const CsrMatrix& in) const {
        switch (kind) {
            case FuncChoice::identity: return in.to_dense();
            case FuncChoice::linear: return add_row_bias(tape, spmm_csr(tape, in, false, w1), b1);
            case FuncChoice::linear_act:
                return elementwise(tape, activation,
                                   add_row_bias(tape, spmm_csr(tape, in, false, w1), b1));
            case FuncChoice::mlp: {
                Tensor h = elementwise(tape, activation,
                                       add_row_bias(tape, spmm_csr(tape, in, false, w1), b1));
                return add_row_bias(tape, matmul(tape, h, w2), b2);
            }
            default: throw ContractError("SlotParams::apply: unsupported choice");
        }
    }

    void append_named(std::vector<std::pair<std::string, Tensor>>& out,
                      const std::string& prefix) const {
        if (w1.defined()) {
            out.emplace_back(prefix + ".w1", w1);
            out.emplace_back(prefix + ".b1", b1);
        }
        if (w2.defined()) {
            out.emplace_back(prefix + ".w2", w2);
            out.emplace_back(prefix + ".b2", b2);
        }
    }
};

// Per-feature normalization state. Train mode normalizes over the row
// dimension with biased variance and folds the batch statistics into the
// running ones (momentum 0.9); eval mode applies the running statistics.
// Running buffers are Tensor handles so a shared LayerParams sees updates.
struct BatchNormState {
    Tensor gamma, beta;              // learnable
    Tensor running_mean, running_var;  // state, not learnable
    double momentum = 0.9;
    double eps = 1e-5;

    static BatchNormState init(int dim) {
        BatchNormState s;
        s.gamma = Tensor::vec(std::vector<double>(dim, 1.0));
        s.beta = Tensor::vec(std::vector<double>(dim, 0.0));
        s.running_mean = Tensor::vec(std::vector<double>(dim, 0.0));
        s.running_var = Tensor::vec(std::vector<double>(dim, 1.0));
        return s;
    }

    bool defined() const { return gamma.defined(); }
};

inline Tensor batch_norm(Tape* tape, const Tensor& x, const BatchNormState& bn, Mode mode) {
    detail::require_rank2(x, "batch_norm");
    const int n = x.cols();
    const int rows = x.rows();
    if (bn.gamma.rows() != n) throw ShapeError("batch_norm: feature width mismatch");
    Tensor out = Tensor::zeros(rows, n);
    if (mode == Mode::eval) {
        std::vector<double> inv_std(n);
        for (int j = 0; j < n; ++j) inv_std[j] = 1.0 / std::sqrt(bn.running_var[j] + bn.eps);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < n; ++j)
                out(i, j) = bn.gamma[j] * (x(i, j) - bn.running_mean[j]) * inv_std[j] + bn.beta[j];
        if (tape) {
            Tensor gamma = bn.gamma, beta = bn.beta;
            Tensor rm = bn.running_mean;
            tape->record([x, out, gamma, beta, rm, inv_std]() {
                if (!out.has_grad()) return;
                const auto& g = out.grad();
                auto& gx = x.grad();
                auto& ggamma = gamma.grad();
                auto& gbeta = beta.grad();
                const int n = x.cols();
                for (int i = 0; i < x.rows(); ++i)
                    for (int j = 0; j < n; ++j) {
                        const double gij = g[std::size_t(i) * n + j];
                        gx[std::size_t(i) * n + j] += gij * gamma[j] * inv_std[j];
                        ggamma[j] += gij * (x(i, j) - rm[j]) * inv_std[j];
                        gbeta[j] += gij;
                    }
            });
        }
        return out;
    }

    // train mode
    std::vector<double> mean(n, 0.0), var(n, 0.0), inv_std(n);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < n; ++j) mean[j] += x(i, j);
    for (int j = 0; j < n; ++j) mean[j] /= rows;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = x(i, j) - mean[j];
            var[j] += d * d;
        }
    for (int j = 0; j < n; ++j) var[j] /= rows;
    for (int j = 0; j < n; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + bn.eps);
    Tensor xhat = Tensor::zeros(rows, n);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < n; ++j) {
            xhat(i, j) = (x(i, j) - mean[j]) * inv_std[j];
            out(i, j) = bn.gamma[j] * xhat(i, j) + bn.beta[j];
        }
    {  // fold batch statistics into the running ones
        Tensor rm = bn.running_mean, rv = bn.running_var;
        for (int j = 0; j < n; ++j) {
            rm[j] = bn.momentum * rm[j] + (1.0 - bn.momentum) * mean[j];
            rv[j] = bn.momentum * rv[j] + (1.0 - bn.momentum) * var[j];
        }
    }
    if (tape) {
        Tensor gamma = bn.gamma, beta = bn.beta;
        tape->record([x, out, xhat, gamma, beta, inv_std, rows, n]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& gx = x.grad();
            auto& ggamma = gamma.grad();
            auto& gbeta = beta.grad();
            for (int j = 0; j < n; ++j) {
                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                for (int i = 0; i < rows; ++i) {
                    const double gij = g[std::size_t(i) * n + j];
                    ggamma[j] += gij * xhat(i, j);
                    gbeta[j] += gij;
                    const double dxhat = gij * gamma[j];
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat(i, j);
                }
                for (int i = 0; i < rows; ++i) {
                    const double dxhat = g[std::size_t(i) * n + j] * gamma[j];
                    gx[std::size_t(i) * n + j] +=
                        inv_std[j] / rows * (rows * dxhat - sum_dxhat - xhat(i, j) * sum_dxhat_xhat);
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

/// Applies a precomputed keep/zero pattern row-vector-wise. `keep` has one
/// flag per cell; survivors in each row vector are scaled by (n+k)/n (paper
/// scaling) or n/(n-k) (inverted), where n is the row width and k the number
/// of cells actually zeroed in that row.
inline Tensor apply_dropout_mask(Tape* tape, const Tensor& x, const std::vector<std::uint8_t>& keep,
                                 DropoutScaling scaling) {
    if (keep.size() != x.size()) throw ShapeError("apply_dropout_mask: mask length mismatch");
    const int n = x.rank() == 2 ? x.cols() : x.rows();
    const int rows = static_cast<int>(x.size()) / n;
    std::vector<double> mask(x.size(), 0.0);
    for (int i = 0; i < rows; ++i) {
        int zeroed = 0;
        for (int j = 0; j < n; ++j)
            if (!keep[std::size_t(i) * n + j]) ++zeroed;
        double s;
        if (scaling == DropoutScaling::paper)
            s = double(n + zeroed) / n;
        else
            s = zeroed < n ? double(n) / (n - zeroed) : 0.0;
        for (int j = 0; j < n; ++j)
            if (keep[std::size_t(i) * n + j]) mask[std::size_t(i) * n + j] = s;
    }
    return hadamard_const(tape, x, std::move(mask));
}

/// Zeroes each cell independently with probability `rate`; survivors are
/// rescaled per row vector. rate 0 returns the input unchanged.
inline Tensor regular_dropout(Tape* tape, const Tensor& x, double rate, DropoutScaling scaling,
                              Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw ContractError("regular_dropout: rate must be in [0,1)");
    if (rate == 0.0) return x;
    std::vector<std::uint8_t> keep(x.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = rng.bernoulli(rate) ? 0 : 1;
    return apply_dropout_mask(tape, x, keep, scaling);
}

/// Removes hyperedges (whole columns) or single incidence entries, each
/// independently with probability `rate`. Survivors are not rescaled. Drawn
/// fresh per training forward pass; never applied in eval mode.
inline SparseIncidence adjacency_dropout(const SparseIncidence& inc, double rate,
                                         AdjacencyDropoutMode mode, Rng& rng) {
    if (rate < 0.0 || rate > 1.0) throw ContractError("adjacency_dropout: rate must be in [0,1]");
    if (rate == 0.0) return inc;
    std::vector<std::pair<int, int>> kept;
    if (mode == AdjacencyDropoutMode::hyperedge) {
        for (int e = 0; e < inc.cols(); ++e) {
            if (rng.bernoulli(rate)) continue;
            for (int v : inc.members_of(e)) kept.emplace_back(v, e);
        }
    } else {
        for (int e = 0; e < inc.cols(); ++e)
            for (int v : inc.members_of(e))
                if (!rng.bernoulli(rate)) kept.emplace_back(v, e);
    }
    return SparseIncidence(inc.rows(), inc.cols(), std::move(kept));
}

// ---------------------------------------------------------------------------
// Layer parameters and the four phases
// ---------------------------------------------------------------------------

struct LayerParams {
    SlotParams f_v, f_w, g_v, g_w;
    AllSetBlockParams g_w_allset, g_v_allset;
    BatchNormState bn_w, bn_v;
    std::vector<double> edge_weights;  // used by scale_edge_messages_by_weight

    static LayerParams init(const LayerConfig& cfg, Rng& rng) {
        const LayerShapes s = infer_shapes(cfg);
        LayerParams p;
        p.f_v = SlotParams::init(cfg.f_v, cfg.activation, cfg.in_dim, cfg.hidden_dim, s.msg_dim, rng);
        if (cfg.g_w == FuncChoice::allset) {
            p.g_w_allset = AllSetBlockParams::init(s.msg_dim, cfg.hidden_dim, rng, cfg.allset_heads);
            p.g_w.kind = FuncChoice::allset;
        } else {
            const int in = detail::combined_dim(cfg.g_w_self, cfg.edge_in_dim, s.msg_dim, "g_w");
            p.g_w = SlotParams::init(cfg.g_w, cfg.activation, in, cfg.hidden_dim, s.edge_state_dim, rng);
        }
        {
            const int in = detail::combined_dim(cfg.f_w_self, cfg.edge_in_dim, s.msg_dim, "f_w");
            p.f_w = SlotParams::init(cfg.f_w, cfg.activation, in, cfg.hidden_dim, s.edge_msg_dim, rng);
        }
        if (cfg.g_v == FuncChoice::allset) {
            p.g_v_allset = AllSetBlockParams::init(s.edge_msg_dim, cfg.out_dim, rng, cfg.allset_heads);
            p.g_v.kind = FuncChoice::allset;
        } else {
            const int in = detail::combined_dim(cfg.g_v_self, cfg.in_dim, s.edge_msg_dim, "g_v");
            p.g_v = SlotParams::init(cfg.g_v, cfg.activation, in, cfg.hidden_dim, cfg.out_dim, rng);
        }
        if (cfg.batch_norm) {
            if (cfg.g_w != FuncChoice::allset && cfg.g_w != FuncChoice::keep)
                p.bn_w = BatchNormState::init(
                    detail::combined_dim(cfg.g_w_self, cfg.edge_in_dim, s.msg_dim, "g_w"));
            if (cfg.g_v != FuncChoice::allset && cfg.g_v != FuncChoice::keep)
                p.bn_v = BatchNormState::init(
                    detail::combined_dim(cfg.g_v_self, cfg.in_dim, s.edge_msg_dim, "g_v"));
        }
        return p;
    }

    std::vector<std::pair<std::string, Tensor>> named_parameters(const std::string& prefix) const {
        std::vector<std::pair<std::string, Tensor>> out;
        f_v.append_named(out, prefix + ".f_v");
        g_w.append_named(out, prefix + ".g_w");
        f_w.append_named(out, prefix + ".f_w");
        g_v.append_named(out, prefix + ".g_v");
        if (g_w.kind == FuncChoice::allset)
            for (auto& kv : g_w_allset.named_parameters(prefix + ".g_w_allset")) out.push_back(kv);
        if (g_v.kind == FuncChoice::allset)
            for (auto& kv : g_v_allset.named_parameters(prefix + ".g_v_allset")) out.push_back(kv);
        if (bn_w.defined()) {
            out.emplace_back(prefix + ".bn_w.gamma", bn_w.gamma);
            out.emplace_back(prefix + ".bn_w.beta", bn_w.beta);
        }
        if (bn_v.defined()) {
            out.emplace_back(prefix + ".bn_v.gamma", bn_v.gamma);
            out.emplace_back(prefix + ".bn_v.beta", bn_v.beta);
        }
        return out;
    }

    // Non-learnable state that still belongs in a checkpoint.
    std::vector<std::pair<std::string, Tensor>> named_buffers(const std::string& prefix) const {
        std::vector<std::pair<std::string, Tensor>> out;
        if (bn_w.defined()) {
            out.emplace_back(prefix + ".bn_w.running_mean", bn_w.running_mean);
            out.emplace_back(prefix + ".bn_w.running_var", bn_w.running_var);
        }
        if (bn_v.defined()) {
            out.emplace_back(prefix + ".bn_v.running_mean", bn_v.running_mean);
            out.emplace_back(prefix + ".bn_v.running_var", bn_v.running_var);
        }
        return out;
    }
};

namespace detail {

inline std::vector<double> inverse_or_zero(const std::vector<int>& counts) {
    std::vector<double> f(counts.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = counts[i] > 0 ? 1.0 / counts[i] : 0.0;
    return f;
}

inline std::vector<double> inv_sqrt_or_zero(const std::vector<int>& counts) {
    std::vector<double> f(counts.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = counts[i] > 0 ? 1.0 / std::sqrt(double(counts[i])) : 0.0;
    return f;
}

// Sum or mean of `m`'s rows over the incidence pattern. Mean divides by the
// post-dropout neighborhood size; empty neighborhoods aggregate to zero.
inline Tensor aggregate(Tape* tape, const SparseIncidence& inc, bool members_to_edges,
                        const Tensor& m, AggKind kind) {
    Tensor s = spmm(tape, inc, members_to_edges, m);
    if (kind == AggKind::mean) {
        const auto counts = members_to_edges ? inc.column_counts() : inc.row_counts();
        s = row_scale(tape, s, inverse_or_zero(counts));
    }
    return s;
}

inline Tensor combine_self(Tape* tape, const Tensor& self, const Tensor& agg, SelfCombine mode,
                           const char* slot) {
    switch (mode) {
        case SelfCombine::none: return agg;
        case SelfCombine::sum:
            if (!self.same_shape(agg)) throw ShapeError(std::string(slot) + ": self=sum shape mismatch");
            return add(tape, self, agg);
        case SelfCombine::concat: return concat_cols(tape, self, agg);
    }
    return agg;
}

// Runs the attention block once per neighborhood; empty neighborhoods (a
// possibility under adjacency dropout) contribute a zero row.
inline Tensor allset_over_neighborhoods(Tape* tape, const Tensor& elements,
                                        const SparseIncidence& inc, bool members_to_edges,
                                        const AllSetBlockParams& p) {
    const int n_out = members_to_edges ? inc.cols() : inc.rows();
    std::vector<Tensor> rows;
    rows.reserve(n_out);
    for (int i = 0; i < n_out; ++i) {
        auto ids = members_to_edges ? inc.members_of(i) : inc.hyperedges_of(i);
        if (ids.empty()) {
            rows.push_back(Tensor::zeros(1, p.attn_dim));
            continue;
        }
        Tensor set_rows = gather_rows(tape, elements, std::vector<int>(ids.begin(), ids.end()));
        rows.push_back(allset_block(tape, set_rows, p));
    }
    return stack_rows(tape, rows);
}

}  // namespace detail

/// Eq. phase 1: per-vertex messages M_v = f_v(X).
inline Tensor vertex_messages(Tape* tape, const Tensor& x, const LayerConfig& cfg,
                              const LayerParams& params) {
    if (cfg.f_v == FuncChoice::identity) return x;
    return params.f_v.apply(tape, x);
}

/// Sparse fast path for constant 0/1 feature inputs.
inline Tensor vertex_messages(Tape* tape, const CsrMatrix& x, const LayerConfig& cfg,
                              const LayerParams& params) {
    return params.f_v.apply(tape, x);
}

/// Phase 2: hyperedge update W' = g_w(W, agg of member messages).
/// `inc` is the (possibly dropout-masked) incidence for this pass.
inline Tensor update_hyperedges(Tape* tape, const Tensor& w, const Tensor& m_v,
                                const SparseIncidence& inc, const LayerConfig& cfg,
                                const LayerParams& params, Mode mode, Rng& rng) {
    if (cfg.g_w == FuncChoice::keep) return w;
    if (cfg.g_w == FuncChoice::allset)
        return detail::allset_over_neighborhoods(tape, m_v, inc, true, params.g_w_allset);
    Tensor agg = detail::aggregate(tape, inc, true, m_v, cfg.agg_in_edge);
    Tensor in = detail::combine_self(tape, w, agg, cfg.g_w_self, "g_w");
    if (cfg.batch_norm && params.bn_w.defined()) in = batch_norm(tape, in, params.bn_w, mode);
    if (mode == Mode::train && cfg.edge_dropout_rate > 0.0)
        in = regular_dropout(tape, in, cfg.edge_dropout_rate, cfg.dropout_scaling, rng);
    return params.g_w.apply(tape, in);
}

/// Phase 3: outgoing hyperedge messages M_e = f_w(W, agg of member messages),
/// evaluated on the pre-update hyperedge state.
inline Tensor hyperedge_messages(Tape* tape, const Tensor& w, const Tensor& m_v,
                                 const SparseIncidence& inc, const LayerConfig& cfg,
                                 const LayerParams& params) {
    Tensor out;
    if (cfg.f_w == FuncChoice::keep) {
        out = w;
    } else {
        Tensor agg = detail::aggregate(tape, inc, true, m_v, cfg.agg_out_edge);
        Tensor in = detail::combine_self(tape, w, agg, cfg.f_w_self, "f_w");
        out = params.f_w.apply(tape, in);
    }
    if (cfg.scale_edge_messages_by_weight) {
        if (static_cast<int>(params.edge_weights.size()) != out.rows())
            throw ShapeError("hyperedge_messages: edge_weights length mismatch");
        out = row_scale(tape, out, params.edge_weights);
    }
    return out;
}

/// Phase 4: vertex update X' = g_v(X, agg of incident hyperedge messages).
inline Tensor update_vertices(Tape* tape, const Tensor& x, const Tensor& m_e,
                              const SparseIncidence& inc, const LayerConfig& cfg,
                              const LayerParams& params, Mode mode, Rng& rng) {
    if (cfg.g_v == FuncChoice::keep) return x;
    if (cfg.g_v == FuncChoice::allset)
        return detail::allset_over_neighborhoods(tape, m_e, inc, false, params.g_v_allset);
    Tensor agg = detail::aggregate(tape, inc, false, m_e, cfg.agg_in_vertex);
    if (cfg.scale_vertex_agg_by_inv_sqrt_degree)
        agg = row_scale(tape, agg, detail::inv_sqrt_or_zero(inc.row_counts()));
    Tensor in = detail::combine_self(tape, x, agg, cfg.g_v_self, "g_v");
    if (cfg.batch_norm && params.bn_v.defined()) in = batch_norm(tape, in, params.bn_v, mode);
    if (mode == Mode::train && cfg.vertex_dropout_rate > 0.0)
        in = regular_dropout(tape, in, cfg.vertex_dropout_rate, cfg.dropout_scaling, rng);
    return params.g_v.apply(tape, in);
}

/// One full layer: phases 1-4 in order, with one adjacency-dropout draw per
/// pass shared by every aggregation. Returns (X', W').
template <typename VertexInput>
std::pair<Tensor, Tensor> forward_layer(Tape* tape, const VertexInput& x, const Tensor& w,
                                        const Hypergraph& h, const LayerConfig& cfg,
                                        const LayerParams& params, Mode mode, Rng& rng) {
    if (w.rows() != h.num_hyperedges())
        throw ShapeError("forward_layer: W rows must equal hyperedge count");
    SparseIncidence inc(h);
    if (mode == Mode::train && cfg.adjacency_dropout_rate > 0.0)
        inc = adjacency_dropout(inc, cfg.adjacency_dropout_rate, cfg.adjacency_dropout_mode, rng);
    Tensor m_v = vertex_messages(tape, x, cfg, params);
    if (m_v.rows() != h.num_vertices())
        throw ShapeError("forward_layer: X rows must equal vertex count");
    if (cfg.scale_messages_by_inv_sqrt_degree)
        m_v = row_scale(tape, m_v, detail::inv_sqrt_or_zero(inc.row_counts()));
    Tensor w_next = update_hyperedges(tape, w, m_v, inc, cfg, params, mode, rng);
    Tensor m_e = hyperedge_messages(tape, w, m_v, inc, cfg, params);
    Tensor x_next;
    if constexpr (std::is_same_v<VertexInput, Tensor>) {
        x_next = update_vertices(tape, x, m_e, inc, cfg, params, mode, rng);
    } else {
        // sparse vertex input: densify the self state only when g_v consumes it
        const bool needs_self = cfg.g_v == FuncChoice::keep || cfg.g_v_self != SelfCombine::none;
        Tensor self = needs_self ? x.to_dense() : Tensor::zeros(h.num_vertices(), cfg.in_dim);
        x_next = update_vertices(tape, self, m_e, inc, cfg, params, mode, rng);
    }
    return {x_next, w_next};
}

}  // namespace hypermp
