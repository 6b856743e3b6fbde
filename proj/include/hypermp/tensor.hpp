#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hypermp/common.hpp"
#include "hypermp/hypergraph.hpp"
#include "hypermp/random.hpp"

namespace hypermp {

// Dense 64-bit tensor, rank 1 (len) or rank 2 (rows x cols), row-major.
// Tensor is a cheap handle onto shared storage: ops return new tensors and
// record their backward rule on a Tape; backward() fills the grad buffer of
// every tensor that reaches the loss. Copying a Tensor aliases storage, so a
// parameter held by the caller and by a tape node accumulate into the same
// grad buffer.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(int rows, int cols) {
        return Tensor(rows, cols, 2, std::vector<double>(std::size_t(rows) * cols, 0.0));
    }
    static Tensor full(int rows, int cols, double value) {
        return Tensor(rows, cols, 2, std::vector<double>(std::size_t(rows) * cols, value));
    }
    static Tensor mat(int rows, int cols, std::vector<double> values) {
        if (values.size() != std::size_t(rows) * cols)
            throw ShapeError("mat: values length does not match rows*cols");
        return Tensor(rows, cols, 2, std::move(values));
    }
    static Tensor vec(std::vector<double> values) {
        const int n = static_cast<int>(values.size());
        return Tensor(n, 1, 1, std::move(values));
    }
    static Tensor scalar(double value) { return vec({value}); }
    static Tensor from_rows(const std::vector<std::vector<double>>& rows) {
        const int r = static_cast<int>(rows.size());
        const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
        std::vector<double> v;
        v.reserve(std::size_t(r) * c);
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != c) throw ShapeError("from_rows: ragged rows");
            v.insert(v.end(), row.begin(), row.end());
        }
        return Tensor(r, c, 2, std::move(v));
    }

    // A Tensor is a handle: const protects the handle, not the shared
    // storage, so accessors are const and hand out mutable references.
    bool defined() const { return static_cast<bool>(s_); }
    int rank() const { return s_->rank; }
    int rows() const { return s_->rows; }
    int cols() const { return s_->cols; }
    std::size_t size() const { return s_->values.size(); }

    double* data() const { return s_->values.data(); }
    std::vector<double>& values() const { return s_->values; }

    double& operator()(int r, int c) const { return s_->values[std::size_t(r) * s_->cols + c]; }
    double& operator[](std::size_t i) const { return s_->values[i]; }

    bool has_grad() const { return !s_->grad.empty(); }
    std::vector<double>& grad() const {
        if (s_->grad.empty()) s_->grad.assign(s_->values.size(), 0.0);
        return s_->grad;
    }
    void zero_grad() const { s_->grad.clear(); }

    /// Deep copy of the values; grad not copied.
    Tensor clone() const { return Tensor(rows(), cols(), rank(), s_->values); }

    bool same_storage(const Tensor& other) const { return s_ == other.s_; }

    bool same_shape(const Tensor& other) const {
        return rank() == other.rank() && rows() == other.rows() && cols() == other.cols();
    }

private:
    struct Storage {
        int rows = 0, cols = 0, rank = 2;
        std::vector<double> values;
        std::vector<double> grad;
    };

    Tensor(int rows, int cols, int rank, std::vector<double> values)
        : s_(std::make_shared<Storage>(Storage{rows, cols, rank, std::move(values), {}})) {}

    std::shared_ptr<Storage> s_;
};

// Reverse-mode tape. Ops append one closure each while the forward pass runs,
// so the node order is a topological order by construction; backward() walks
// it in reverse. A new tape is built for every forward pass (dropout changes
// the sparsity pattern between passes).
class Tape {
public:
    void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

    std::size_t size() const { return nodes_.size(); }

    void backward(Tensor loss) {
        if (!loss.defined() || loss.size() != 1)
            throw ContractError("backward: loss must be a scalar tensor");
        loss.grad()[0] += 1.0;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

    void clear() { nodes_.clear(); }

private:
    std::vector<std::function<void()>> nodes_;
};

// ---------------------------------------------------------------------------
// Dense kernels
// ---------------------------------------------------------------------------

namespace detail {

// c[m x n] (+)= op(a) * op(b)
inline void gemm_into(double* c, bool accumulate, const double* a, int ar, int ac, bool ta,
                      const double* b, int br, int bc, bool tb) {
    const int m = ta ? ac : ar;
    const int k = ta ? ar : ac;
    const int kb = tb ? bc : br;
    const int n = tb ? br : bc;
    if (k != kb) throw ShapeError("matmul: inner dimensions disagree (" + std::to_string(k) +
                                  " vs " + std::to_string(kb) + ")");
    if (!accumulate) std::fill(c, c + std::size_t(m) * n, 0.0);
    if (!ta && !tb) {
        for (int i = 0; i < m; ++i) {
            double* ci = c + std::size_t(i) * n;
            const double* airow = a + std::size_t(i) * ac;
            for (int p = 0; p < k; ++p) {
                const double av = airow[p];
                if (av == 0.0) continue;
                const double* bp = b + std::size_t(p) * bc;
                for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
            }
        }
    } else if (!ta && tb) {
        for (int i = 0; i < m; ++i) {
            double* ci = c + std::size_t(i) * n;
            const double* airow = a + std::size_t(i) * ac;
            for (int j = 0; j < n; ++j) {
                const double* bj = b + std::size_t(j) * bc;
                double acc = 0.0;
                for (int p = 0; p < k; ++p) acc += airow[p] * bj[p];
                ci[j] += acc;
            }
        }
    } else if (ta && !tb) {
        for (int p = 0; p < k; ++p) {
            const double* ap = a + std::size_t(p) * ac;
            const double* bp = b + std::size_t(p) * bc;
            for (int i = 0; i < m; ++i) {
                const double av = ap[i];
                if (av == 0.0) continue;
                double* ci = c + std::size_t(i) * n;
                for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
            }
        }
    } else {
        for (int i = 0; i < m; ++i) {
            double* ci = c + std::size_t(i) * n;
            for (int j = 0; j < n; ++j) {
                const double* bj = b + std::size_t(j) * bc;
                double acc = 0.0;
                for (int p = 0; p < k; ++p) acc += a[std::size_t(p) * ac + i] * bj[p];
                ci[j] += acc;
            }
        }
    }
}

inline void require_rank2(const Tensor& t, const char* who) {
    if (t.rank() != 2) throw ShapeError(std::string(who) + ": rank-2 tensor required");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Differentiable ops. `tape == nullptr` runs forward-only (eval mode).
// ---------------------------------------------------------------------------

/// out = op(a) * op(b). Backward: dA += dC*B^T, dB += A^T*dC (transpose flags
/// folded in).
inline Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b, bool trans_a = false,
                     bool trans_b = false) {
    detail::require_rank2(a, "matmul");
    detail::require_rank2(b, "matmul");
    const int m = trans_a ? a.cols() : a.rows();
    const int n = trans_b ? b.rows() : b.cols();
    Tensor out = Tensor::zeros(m, n);
    detail::gemm_into(out.data(), false, a.data(), a.rows(), a.cols(), trans_a, b.data(), b.rows(),
                      b.cols(), trans_b);
    if (tape) {
        tape->record([a, b, out, trans_a, trans_b]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            // dA' = dY * B'^T, transposed back into a's layout when needed
            if (!trans_a)
                detail::gemm_into(a.grad().data(), true, g.data(), out.rows(), out.cols(), false,
                                  b.data(), b.rows(), b.cols(), !trans_b);
            else
                detail::gemm_into(a.grad().data(), true, b.data(), b.rows(), b.cols(), trans_b,
                                  g.data(), out.rows(), out.cols(), true);
            if (!trans_b)
                detail::gemm_into(b.grad().data(), true, a.data(), a.rows(), a.cols(), !trans_a,
                                  g.data(), out.rows(), out.cols(), false);
            else
                detail::gemm_into(b.grad().data(), true, g.data(), out.rows(), out.cols(), true,
                                  a.data(), a.rows(), a.cols(), trans_a);
        });
    }
    return out;
}

/// Incidence-pattern aggregation.
///   transposed=false: out[v,:] = sum over hyperedges e containing v of d[e,:]
///   transposed=true:  out[e,:] = sum over members v of e of d[v,:]
inline Tensor spmm(Tape* tape, const SparseIncidence& s, bool transposed, const Tensor& d) {
    detail::require_rank2(d, "spmm");
    const int expected = transposed ? s.rows() : s.cols();
    if (d.rows() != expected)
        throw ShapeError("spmm: dense rows " + std::to_string(d.rows()) + ", expected " +
                         std::to_string(expected));
    const int out_rows = transposed ? s.cols() : s.rows();
    const int n = d.cols();
    Tensor out = Tensor::zeros(out_rows, n);
    for (int i = 0; i < out_rows; ++i) {
        auto ids = transposed ? s.members_of(i) : s.hyperedges_of(i);
        double* oi = out.data() + std::size_t(i) * n;
        for (int src : ids) {
            const double* di = d.data() + std::size_t(src) * n;
            for (int j = 0; j < n; ++j) oi[j] += di[j];
        }
    }
    if (tape) {
        tape->record([s, transposed, d, out]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& dg = d.grad();
            const int n = d.cols();
            // gradient flows along the same entries in the opposite direction
            for (int i = 0; i < d.rows(); ++i) {
                auto ids = transposed ? s.hyperedges_of(i) : s.members_of(i);
                double* di = dg.data() + std::size_t(i) * n;
                for (int src : ids) {
                    const double* gi = g.data() + std::size_t(src) * n;
                    for (int j = 0; j < n; ++j) di[j] += gi[j];
                }
            }
        });
    }
    return out;
}

/// Constant sparse matrix (CSR). Used for fixed inputs such as bag-of-words
/// feature matrices; no gradient is tracked for the matrix itself.
struct CsrMatrix {
    int rows = 0, cols = 0;
    std::vector<int> row_ptr{0};
    std::vector<int> col_idx;
    std::vector<double> values;

    int nnz() const { return static_cast<int>(col_idx.size()); }

    static CsrMatrix from_dense(const Tensor& t) {
        detail::require_rank2(t, "CsrMatrix::from_dense");
        CsrMatrix m;
        m.rows = t.rows();
        m.cols = t.cols();
        m.row_ptr.assign(1, 0);
        for (int i = 0; i < t.rows(); ++i) {
            for (int j = 0; j < t.cols(); ++j) {
                const double v = t(i, j);
                if (v != 0.0) {
                    m.col_idx.push_back(j);
                    m.values.push_back(v);
                }
            }
            m.row_ptr.push_back(m.nnz());
        }
        return m;
    }

    Tensor to_dense() const {
        Tensor t = Tensor::zeros(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) t(i, col_idx[k]) += values[k];
        return t;
    }
};

/// out = op(a) * d with a constant sparse. Differentiable in d only.
inline Tensor spmm_csr(Tape* tape, const CsrMatrix& a, bool trans_a, const Tensor& d) {
    detail::require_rank2(d, "spmm_csr");
    const int expected = trans_a ? a.rows : a.cols;
    if (d.rows() != expected)
        throw ShapeError("spmm_csr: dense rows " + std::to_string(d.rows()) + ", expected " +
                         std::to_string(expected));
    const int m = trans_a ? a.cols : a.rows;
    const int n = d.cols();
    Tensor out = Tensor::zeros(m, n);
    if (!trans_a) {
        for (int i = 0; i < a.rows; ++i) {
            double* oi = out.data() + std::size_t(i) * n;
            for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
                const double v = a.values[k];
                const double* dj = d.data() + std::size_t(a.col_idx[k]) * n;
                for (int j = 0; j < n; ++j) oi[j] += v * dj[j];
            }
        }
    } else {
        for (int i = 0; i < a.rows; ++i) {
            const double* di = d.data() + std::size_t(i) * n;
            for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
                const double v = a.values[k];
                double* oj = out.data() + std::size_t(a.col_idx[k]) * n;
                for (int j = 0; j < n; ++j) oj[j] += v * di[j];
            }
        }
    }
    if (tape) {
        tape->record([&a, trans_a, d, out]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& dg = d.grad();
            const int n = d.cols();
            if (!trans_a) {  // dd += a^T * g
                for (int i = 0; i < a.rows; ++i) {
                    const double* gi = g.data() + std::size_t(i) * n;
                    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
                        const double v = a.values[k];
                        double* dj = dg.data() + std::size_t(a.col_idx[k]) * n;
                        for (int j = 0; j < n; ++j) dj[j] += v * gi[j];
                    }
                }
            } else {  // dd += a * g
                for (int i = 0; i < a.rows; ++i) {
                    double* di = dg.data() + std::size_t(i) * n;
                    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
                        const double v = a.values[k];
                        const double* gj = g.data() + std::size_t(a.col_idx[k]) * n;
                        for (int j = 0; j < n; ++j) di[j] += v * gj[j];
                    }
                }
            }
        });
    }
    return out;
}

inline Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("add: shape mismatch");
    Tensor out = a.clone();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    if (tape) {
        tape->record([a, b, out]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& ga = a.grad();
            auto& gb = b.grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
        });
    }
    return out;
}

/// out[i,j] = a[i,j] + bias[j]; bias gradient is the column sum of dOut.
inline Tensor add_row_bias(Tape* tape, const Tensor& a, const Tensor& bias) {
    detail::require_rank2(a, "add_row_bias");
    if (bias.rank() != 1 || bias.rows() != a.cols())
        throw ShapeError("add_row_bias: bias length must equal cols");
    Tensor out = a.clone();
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(i, j) += bias[j];
    if (tape) {
        tape->record([a, bias, out]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& ga = a.grad();
            auto& gb = bias.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            const int n = a.cols();
            for (int i = 0; i < a.rows(); ++i)
                for (int j = 0; j < n; ++j) gb[j] += g[std::size_t(i) * n + j];
        });
    }
    return out;
}

inline Tensor scale(Tape* tape, const Tensor& a, double c) {
    Tensor out = a.clone();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
    if (tape) {
        tape->record([a, out, c]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
        });
    }
    return out;
}

/// Per-row scaling by a constant factor vector (degree scaling, mean division).
inline Tensor row_scale(Tape* tape, const Tensor& a, std::vector<double> factors) {
    detail::require_rank2(a, "row_scale");
    if (static_cast<int>(factors.size()) != a.rows())
        throw ShapeError("row_scale: factor length must equal rows");
    Tensor out = a.clone();
    for (int i = 0; i < a.rows(); ++i) {
        double* oi = out.data() + std::size_t(i) * a.cols();
        for (int j = 0; j < a.cols(); ++j) oi[j] *= factors[i];
    }
    if (tape) {
        tape->record([a, out, factors = std::move(factors)]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& ga = a.grad();
            const int n = a.cols();
            for (int i = 0; i < a.rows(); ++i) {
                const double f = factors[i];
                for (int j = 0; j < n; ++j) ga[std::size_t(i) * n + j] += f * g[std::size_t(i) * n + j];
            }
        });
    }
    return out;
}

/// Elementwise product with a constant mask/scale buffer (dropout).
inline Tensor hadamard_const(Tape* tape, const Tensor& a, std::vector<double> mask) {
    if (mask.size() != a.size()) throw ShapeError("hadamard_const: mask length mismatch");
    Tensor out = a.clone();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    if (tape) {
        tape->record([a, out, mask = std::move(mask)]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += mask[i] * g[i];
        });
    }
    return out;
}

enum class UnaryOp { identity, sigmoid, relu };

inline const char* to_string(UnaryOp op) {
    switch (op) {
        case UnaryOp::identity: return "identity";
        case UnaryOp::sigmoid: return "sigmoid";
        case UnaryOp::relu: return "relu";
    }
    return "?";
}

inline double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Tensor elementwise(Tape* tape, UnaryOp op, const Tensor& x) {
    if (op == UnaryOp::identity) return x;
    Tensor out = x.clone();
    if (op == UnaryOp::sigmoid) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(out[i]);
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    }
    if (tape) {
        tape->record([x, out, op]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& gx = x.grad();
            if (op == UnaryOp::sigmoid) {
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double y = out[i];
                    gx[i] += g[i] * y * (1.0 - y);
                }
            } else {
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (x[i] > 0.0) gx[i] += g[i];
            }
        });
    }
    return out;
}

/// Row-wise softmax, stabilized by max subtraction.
inline Tensor row_softmax(Tape* tape, const Tensor& x) {
    detail::require_rank2(x, "row_softmax");
    Tensor out = Tensor::zeros(x.rows(), x.cols());
    const int n = x.cols();
    for (int i = 0; i < x.rows(); ++i) {
        const double* xi = x.data() + std::size_t(i) * n;
        double* oi = out.data() + std::size_t(i) * n;
        double m = xi[0];
        for (int j = 1; j < n; ++j) m = std::max(m, xi[j]);
        double z = 0.0;
        for (int j = 0; j < n; ++j) {
            oi[j] = std::exp(xi[j] - m);
            z += oi[j];
        }
        for (int j = 0; j < n; ++j) oi[j] /= z;
    }
    if (tape) {
        tape->record([x, out]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& gx = x.grad();
            const int n = x.cols();
            for (int i = 0; i < x.rows(); ++i) {
                const double* yi = out.data() + std::size_t(i) * n;
                const double* gi = g.data() + std::size_t(i) * n;
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += gi[j] * yi[j];
                for (int j = 0; j < n; ++j) gx[std::size_t(i) * n + j] += yi[j] * (gi[j] - dot);
            }
        });
    }
    return out;
}

/// Row-wise layer normalization with learnable gain/shift (length = cols).
inline Tensor layer_norm(Tape* tape, const Tensor& x, const Tensor& gain, const Tensor& shift,
                         double eps = 1e-5) {
    detail::require_rank2(x, "layer_norm");
    if (gain.rank() != 1 || gain.rows() != x.cols() || shift.rank() != 1 || shift.rows() != x.cols())
        throw ShapeError("layer_norm: gain/shift length must equal cols");
    const int n = x.cols();
    Tensor out = Tensor::zeros(x.rows(), n);
    Tensor xhat = Tensor::zeros(x.rows(), n);
    std::vector<double> inv_std(x.rows());
    for (int i = 0; i < x.rows(); ++i) {
        const double* xi = x.data() + std::size_t(i) * n;
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += xi[j];
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) var += (xi[j] - mean) * (xi[j] - mean);
        var /= n;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        for (int j = 0; j < n; ++j) {
            xhat(i, j) = (xi[j] - mean) * is;
            out(i, j) = gain[j] * xhat(i, j) + shift[j];
        }
    }
    if (tape) {
        tape->record([x, gain, shift, out, xhat, inv_std = std::move(inv_std), n]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& gx = x.grad();
            auto& ggain = gain.grad();
            auto& gshift = shift.grad();
            for (int i = 0; i < x.rows(); ++i) {
                const double* gi = g.data() + std::size_t(i) * n;
                const double* xh = xhat.data() + std::size_t(i) * n;
                double sum_dg = 0.0, sum_dg_xhat = 0.0;
                for (int j = 0; j < n; ++j) {
                    ggain[j] += gi[j] * xh[j];
                    gshift[j] += gi[j];
                    const double dxhat = gi[j] * gain[j];
                    sum_dg += dxhat;
                    sum_dg_xhat += dxhat * xh[j];
                }
                const double is = inv_std[i];
                for (int j = 0; j < n; ++j) {
                    const double dxhat = gi[j] * gain[j];
                    gx[std::size_t(i) * n + j] +=
                        is * (dxhat - sum_dg / n - xh[j] * sum_dg_xhat / n);
                }
            }
        });
    }
    return out;
}

inline Tensor concat_cols(Tape* tape, const Tensor& a, const Tensor& b) {
    detail::require_rank2(a, "concat_cols");
    detail::require_rank2(b, "concat_cols");
    if (a.rows() != b.rows()) throw ShapeError("concat_cols: row counts differ");
    const int n1 = a.cols(), n2 = b.cols();
    Tensor out = Tensor::zeros(a.rows(), n1 + n2);
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < n1; ++j) out(i, j) = a(i, j);
        for (int j = 0; j < n2; ++j) out(i, n1 + j) = b(i, j);
    }
    if (tape) {
        tape->record([a, b, out, n1, n2]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& ga = a.grad();
            auto& gb = b.grad();
            const int n = n1 + n2;
            for (int i = 0; i < a.rows(); ++i) {
                for (int j = 0; j < n1; ++j) ga[std::size_t(i) * n1 + j] += g[std::size_t(i) * n + j];
                for (int j = 0; j < n2; ++j)
                    gb[std::size_t(i) * n2 + j] += g[std::size_t(i) * n + n1 + j];
            }
        });
    }
    return out;
}

inline Tensor slice_cols(Tape* tape, const Tensor& a, int c0, int c1) {
    detail::require_rank2(a, "slice_cols");
    if (c0 < 0 || c1 > a.cols() || c0 >= c1) throw ShapeError("slice_cols: bad column range");
    const int n = c1 - c0;
    Tensor out = Tensor::zeros(a.rows(), n);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < n; ++j) out(i, j) = a(i, c0 + j);
    if (tape) {
        tape->record([a, out, c0, n]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& ga = a.grad();
            for (int i = 0; i < a.rows(); ++i)
                for (int j = 0; j < n; ++j)
                    ga[std::size_t(i) * a.cols() + c0 + j] += g[std::size_t(i) * n + j];
        });
    }
    return out;
}

/// out[k,:] = a[ids[k],:]. Backward scatter-adds into the selected rows.
inline Tensor gather_rows(Tape* tape, const Tensor& a, std::vector<int> ids) {
    detail::require_rank2(a, "gather_rows");
    const int n = a.cols();
    Tensor out = Tensor::zeros(static_cast<int>(ids.size()), n);
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (ids[k] < 0 || ids[k] >= a.rows()) throw ShapeError("gather_rows: row id out of range");
        const double* src = a.data() + std::size_t(ids[k]) * n;
        std::copy(src, src + n, out.data() + k * n);
    }
    if (tape) {
        tape->record([a, out, ids = std::move(ids)]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            auto& ga = a.grad();
            const int n = a.cols();
            for (std::size_t k = 0; k < ids.size(); ++k) {
                double* dst = ga.data() + std::size_t(ids[k]) * n;
                const double* src = g.data() + k * n;
                for (int j = 0; j < n; ++j) dst[j] += src[j];
            }
        });
    }
    return out;
}

/// Vertically stacks single-row tensors (all with equal width).
inline Tensor stack_rows(Tape* tape, const std::vector<Tensor>& rows) {
    if (rows.empty()) throw ShapeError("stack_rows: empty input");
    const int n = rows[0].cols();
    Tensor out = Tensor::zeros(static_cast<int>(rows.size()), n);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].rank() != 2 || rows[k].rows() != 1 || rows[k].cols() != n)
            throw ShapeError("stack_rows: every piece must be 1 x cols");
        std::copy(rows[k].data(), rows[k].data() + n, out.data() + k * n);
    }
    if (tape) {
        tape->record([rows, out]() {
            if (!out.has_grad()) return;
            const auto& g = out.grad();
            const int n = out.cols();
            for (std::size_t k = 0; k < rows.size(); ++k) {
                auto& gr = rows[k].grad();
                const double* src = g.data() + k * n;
                for (int j = 0; j < n; ++j) gr[j] += src[j];
            }
        });
    }
    return out;
}

inline Tensor sum(Tape* tape, const Tensor& a) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += a[i];
    Tensor out = Tensor::scalar(total);
    if (tape) {
        tape->record([a, out]() {
            if (!out.has_grad()) return;
            const double g = out.grad()[0];
            auto& ga = a.grad();
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
        });
    }
    return out;
}

/// Glorot-style uniform init in +-sqrt(6/(fan_in+fan_out)).
inline Tensor glorot(int fan_in, int fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor w = Tensor::zeros(fan_in, fan_out);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
    return w;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace hypermp
