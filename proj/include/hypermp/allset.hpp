#pragma once

#include <vector>

#include "hypermp/tensor.hpp"

namespace hypermp {

// Multiset attention block: a learnable seed attends over the elements of an
// input set, followed by two residual layer norms. Output is one row per set,
// invariant to any permutation of the input rows.
//
//   O_i = softmax(seed_i K_i^T) V_i          K_i = mlp_K_i(S), V_i = mlp_V_i(S)
//   Y   = LN(seed + concat_i O_i)
//   out = LN(Y + mlp_out(Y))
//
// The K/V/output MLPs have one hidden layer of width mlp_hidden, or collapse
// to a single linear map when mlp_hidden == 0.
struct AllSetBlockParams {
    int heads = 1;
    int in_dim = 0;
    int attn_dim = 0;    // output width; divisible by heads
    int mlp_hidden = 0;  // 0 = plain linear K/V/output maps

    Tensor seed;  // [1 x attn_dim]
    std::vector<Tensor> key_w1, key_b1, key_w2, key_b2;      // per head
    std::vector<Tensor> value_w1, value_b1, value_w2, value_b2;
    Tensor out_w1, out_b1, out_w2, out_b2;
    Tensor ln1_gain, ln1_shift, ln2_gain, ln2_shift;

    static AllSetBlockParams init(int in_dim, int attn_dim, Rng& rng, int heads = 1,
                                  int mlp_hidden = -1) {
        if (heads < 1 || attn_dim % heads != 0)
            throw ShapeError("allset: attn_dim must be divisible by heads");
        AllSetBlockParams p;
        p.heads = heads;
        p.in_dim = in_dim;
        p.attn_dim = attn_dim;
        p.mlp_hidden = mlp_hidden < 0 ? attn_dim : mlp_hidden;
        const int head_dim = attn_dim / heads;
        p.seed = Tensor::zeros(1, attn_dim);
        for (std::size_t i = 0; i < p.seed.size(); ++i) p.seed[i] = rng.uniform(-0.1, 0.1);
        auto make_mlp = [&](int in, int out, Tensor& w1, Tensor& b1, Tensor& w2, Tensor& b2) {
            if (p.mlp_hidden == 0) {
                w1 = glorot(in, out, rng);
                b1 = Tensor::vec(std::vector<double>(out, 0.0));
            } else {
                w1 = glorot(in, p.mlp_hidden, rng);
                b1 = Tensor::vec(std::vector<double>(p.mlp_hidden, 0.0));
                w2 = glorot(p.mlp_hidden, out, rng);
                b2 = Tensor::vec(std::vector<double>(out, 0.0));
            }
        };
        for (int i = 0; i < heads; ++i) {
            p.key_w1.emplace_back();
            p.key_b1.emplace_back();
            p.key_w2.emplace_back();
            p.key_b2.emplace_back();
            make_mlp(in_dim, head_dim, p.key_w1[i], p.key_b1[i], p.key_w2[i], p.key_b2[i]);
            p.value_w1.emplace_back();
            p.value_b1.emplace_back();
            p.value_w2.emplace_back();
            p.value_b2.emplace_back();
            make_mlp(in_dim, head_dim, p.value_w1[i], p.value_b1[i], p.value_w2[i], p.value_b2[i]);
        }
        make_mlp(attn_dim, attn_dim, p.out_w1, p.out_b1, p.out_w2, p.out_b2);
        p.ln1_gain = Tensor::vec(std::vector<double>(attn_dim, 1.0));
        p.ln1_shift = Tensor::vec(std::vector<double>(attn_dim, 0.0));
        p.ln2_gain = Tensor::vec(std::vector<double>(attn_dim, 1.0));
        p.ln2_shift = Tensor::vec(std::vector<double>(attn_dim, 0.0));
        return p;
    }

    std::vector<std::pair<std::string, Tensor>> named_parameters(const std::string& prefix) const {
        std::vector<std::pair<std::string, Tensor>> out;
        out.emplace_back(prefix + ".seed", seed);
        auto push_mlp = [&](const std::string& name, const Tensor& w1, const Tensor& b1,
                            const Tensor& w2, const Tensor& b2) {
            out.emplace_back(name + ".w1", w1);
            out.emplace_back(name + ".b1", b1);
            if (w2.defined()) {
                out.emplace_back(name + ".w2", w2);
                out.emplace_back(name + ".b2", b2);
            }
        };
        for (int i = 0; i < heads; ++i) {
            const std::string h = prefix + ".head" + std::to_string(i);
            push_mlp(h + ".key", key_w1[i], key_b1[i], key_w2[i], key_b2[i]);
            push_mlp(h + ".value", value_w1[i], value_b1[i], value_w2[i], value_b2[i]);
        }
        push_mlp(prefix + ".out", out_w1, out_b1, out_w2, out_b2);
        out.emplace_back(prefix + ".ln1_gain", ln1_gain);
        out.emplace_back(prefix + ".ln1_shift", ln1_shift);
        out.emplace_back(prefix + ".ln2_gain", ln2_gain);
        out.emplace_back(prefix + ".ln2_shift", ln2_shift);
        return out;
    }
};

namespace detail {
inline Tensor allset_mlp(Tape* tape, const Tensor& s, const Tensor& w1, const Tensor& b1,
                         const Tensor& w2, const Tensor& b2) {
    Tensor h = add_row_bias(tape, matmul(tape, s, w1), b1);
    if (!w2.defined()) return h;
    h = elementwise(tape, UnaryOp::relu, h);
    return add_row_bias(tape, matmul(tape, h, w2), b2);
}
}  // namespace detail

/// Attention pooling of a non-empty multiset: rows of `set_rows` are the
/// elements. Returns a [1 x attn_dim] summary.
inline Tensor allset_block(Tape* tape, const Tensor& set_rows, const AllSetBlockParams& p) {
    if (!set_rows.defined() || set_rows.rows() == 0)
        throw ContractError("allset_block: empty input set");
    if (set_rows.cols() != p.in_dim) throw ShapeError("allset_block: element width mismatch");
    const int head_dim = p.attn_dim / p.heads;
    Tensor multi_head;
    for (int i = 0; i < p.heads; ++i) {
        Tensor keys = detail::allset_mlp(tape, set_rows, p.key_w1[i], p.key_b1[i], p.key_w2[i],
                                         p.key_b2[i]);
        Tensor vals = detail::allset_mlp(tape, set_rows, p.value_w1[i], p.value_b1[i], p.value_w2[i],
                                         p.value_b2[i]);
        Tensor query = p.heads == 1 ? p.seed : slice_cols(tape, p.seed, i * head_dim, (i + 1) * head_dim);
        Tensor attn = row_softmax(tape, matmul(tape, query, keys, false, true));  // [1 x s]
        Tensor head = matmul(tape, attn, vals);                                   // [1 x head_dim]
        multi_head = i == 0 ? head : concat_cols(tape, multi_head, head);
    }
    Tensor y = layer_norm(tape, add(tape, p.seed, multi_head), p.ln1_gain, p.ln1_shift);
    Tensor out = detail::allset_mlp(tape, y, p.out_w1, p.out_b1, p.out_w2, p.out_b2);
    return layer_norm(tape, add(tape, y, out), p.ln2_gain, p.ln2_shift);
}

}  // namespace hypermp
