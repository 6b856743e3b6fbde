#pragma once

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hypermp/model.hpp"

namespace hypermp {

enum class OptimizerKind { adam, sgd };

struct TrainConfig {
    int epochs = 300;
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    OptimizerKind optimizer = OptimizerKind::adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int early_stop_patience = 100;
    std::uint64_t seed = 1;
    int eval_every = 1;

    void validate() const {
        if (epochs < 1) throw ContractError("epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw ContractError("learning_rate must be > 0");
        if (weight_decay < 0.0) throw ContractError("weight_decay must be >= 0");
        if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0)
            throw ContractError("adam betas must be in [0,1)");
        if (adam_eps <= 0.0) throw ContractError("adam_eps must be > 0");
        if (early_stop_patience < 1) throw ContractError("early_stop_patience must be >= 1");
        if (eval_every < 1) throw ContractError("eval_every must be >= 1");
    }
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    double seconds = 0.0;  // wall clock; excluded from deterministic artifacts
};

struct Metrics {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_acc = 0.0;
    double final_test_acc = 0.0;
};

struct TrainingDiverged : std::runtime_error {
    TrainingDiverged(int epoch, double lr)
        : std::runtime_error("loss became non-finite at epoch " + std::to_string(epoch) +
                             " (learning_rate=" + std::to_string(lr) + ")") {}
};

/// Mean over masked rows of -log softmax(logits)[label]. Fused forward +
/// backward for numerical stability.
inline Tensor masked_cross_entropy(Tape* tape, const Tensor& logits, const std::vector<int>& labels,
                                   const std::vector<std::uint8_t>& mask) {
    detail::require_rank2(logits, "masked_cross_entropy");
    const int n = logits.rows(), c = logits.cols();
    if (static_cast<int>(labels.size()) != n || static_cast<int>(mask.size()) != n)
        throw ShapeError("masked_cross_entropy: labels/mask length must equal rows");
    int count = 0;
    for (int i = 0; i < n; ++i)
        if (mask[i]) ++count;
    if (count == 0) throw ContractError("masked_cross_entropy: mask selects no vertices");
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        if (labels[i] < 0 || labels[i] >= c)
            throw ContractError("masked_cross_entropy: label out of range");
        const double* zi = logits.data() + std::size_t(i) * c;
        double m = zi[0];
        for (int j = 1; j < c; ++j) m = std::max(m, zi[j]);
        double lse = 0.0;
        for (int j = 0; j < c; ++j) lse += std::exp(zi[j] - m);
        total += std::log(lse) - (zi[labels[i]] - m);
    }
    Tensor out = Tensor::scalar(total / count);
    if (tape) {
        tape->record([logits, labels, mask, out, count]() {
            if (!out.has_grad()) return;
            const double g0 = out.grad()[0];
            auto& gz = logits.grad();
            const int c = logits.cols();
            for (int i = 0; i < logits.rows(); ++i) {
                if (!mask[i]) continue;
                const double* zi = logits.data() + std::size_t(i) * c;
                double m = zi[0];
                for (int j = 1; j < c; ++j) m = std::max(m, zi[j]);
                double lse = 0.0;
                for (int j = 0; j < c; ++j) lse += std::exp(zi[j] - m);
                for (int j = 0; j < c; ++j) {
                    const double p = std::exp(zi[j] - m) / lse;
                    gz[std::size_t(i) * c + j] +=
                        g0 * (p - (j == labels[i] ? 1.0 : 0.0)) / count;
                }
            }
        });
    }
    return out;
}

/// Fraction of masked vertices whose argmax logit hits the label. Ties break
/// to the lowest class index.
inline double accuracy(const Tensor& logits, const std::vector<int>& labels,
                       const std::vector<std::uint8_t>& mask) {
    detail::require_rank2(logits, "accuracy");
    const int n = logits.rows(), c = logits.cols();
    if (static_cast<int>(labels.size()) != n || static_cast<int>(mask.size()) != n)
        throw ShapeError("accuracy: labels/mask length must equal rows");
    int count = 0, hit = 0;
    for (int i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        ++count;
        const double* zi = logits.data() + std::size_t(i) * c;
        int best = 0;
        for (int j = 1; j < c; ++j)
            if (zi[j] > zi[best]) best = j;
        if (best == labels[i]) ++hit;
    }
    if (count == 0) throw ContractError("accuracy: mask selects no vertices");
    return double(hit) / count;
}

// Adam (bias-corrected) or plain SGD, with decoupled weight decay applied as
// param *= (1 - lr*wd) before the gradient step.
class Optimizer {
public:
    Optimizer(std::vector<Tensor> params, const TrainConfig& cfg) : params_(std::move(params)), cfg_(cfg) {
        if (cfg_.optimizer == OptimizerKind::adam) {
            m_.resize(params_.size());
            v_.resize(params_.size());
            for (std::size_t i = 0; i < params_.size(); ++i) {
                m_[i].assign(params_[i].size(), 0.0);
                v_[i].assign(params_[i].size(), 0.0);
            }
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    void step() {
        ++t_;
        const double lr = cfg_.learning_rate;
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor& p = params_[i];
            if (!p.has_grad()) continue;
            const auto& g = p.grad();
            if (cfg_.weight_decay > 0.0)
                for (std::size_t k = 0; k < p.size(); ++k) p[k] *= 1.0 - lr * cfg_.weight_decay;
            if (cfg_.optimizer == OptimizerKind::sgd) {
                for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * g[k];
            } else {
                const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
                const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
                auto& m = m_[i];
                auto& v = v_[i];
                for (std::size_t k = 0; k < p.size(); ++k) {
                    m[k] = cfg_.adam_beta1 * m[k] + (1.0 - cfg_.adam_beta1) * g[k];
                    v[k] = cfg_.adam_beta2 * v[k] + (1.0 - cfg_.adam_beta2) * g[k] * g[k];
                    p[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg_.adam_eps);
                }
            }
        }
    }

private:
    std::vector<Tensor> params_;
    TrainConfig cfg_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// Eval-mode accuracy on one mask (no dropout, running batch-norm stats).
inline double evaluate(const Model& model, const DatasetBundle& bundle,
                       const std::vector<std::uint8_t>& mask) {
    Rng unused(0);
    Tensor logits = model.forward(nullptr, bundle, Mode::eval, unused);
    return accuracy(logits, bundle.labels, mask);
}

/// Full-hypergraph training with early stopping on validation accuracy.
/// Fresh dropout masks per epoch; the best-validation parameter state is
/// restored into the model before returning.
inline Metrics fit(Model& model, const DatasetBundle& bundle, const TrainConfig& tcfg) {
    tcfg.validate();
    Rng dropout_rng = Rng(tcfg.seed).spawn(1);
    Optimizer opt(model.parameters(), tcfg);
    Metrics metrics;
    auto state = model.named_state();
    std::vector<std::vector<double>> best_state;
    int epochs_since_best = 0;
    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        opt.zero_grad();
        Tape tape;
        Tensor logits = model.forward(&tape, bundle, Mode::train, dropout_rng);
        Tensor loss = masked_cross_entropy(&tape, logits, bundle.labels, bundle.train_mask);
        if (!std::isfinite(loss[0])) throw TrainingDiverged(epoch, tcfg.learning_rate);
        tape.backward(loss);
        opt.step();

        EpochStats es;
        es.epoch = epoch;
        es.train_loss = loss[0];
        if (epoch % tcfg.eval_every == 0 || epoch + 1 == tcfg.epochs) {
            Rng unused(0);
            Tensor eval_logits = model.forward(nullptr, bundle, Mode::eval, unused);
            es.train_acc = accuracy(eval_logits, bundle.labels, bundle.train_mask);
            es.val_acc = accuracy(eval_logits, bundle.labels, bundle.val_mask);
            es.test_acc = accuracy(eval_logits, bundle.labels, bundle.test_mask);
            if (metrics.best_epoch < 0 || es.val_acc > metrics.best_val_acc) {
                metrics.best_epoch = epoch;
                metrics.best_val_acc = es.val_acc;
                best_state.clear();
                for (auto& [name, t] : state) best_state.push_back(t.values());
                epochs_since_best = 0;
            }
        }
        es.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        metrics.epochs.push_back(es);
        ++epochs_since_best;
        if (epochs_since_best > tcfg.early_stop_patience) break;
    }
    if (!best_state.empty())
        for (std::size_t i = 0; i < state.size(); ++i) state[i].second.values() = best_state[i];
    metrics.final_test_acc = evaluate(model, bundle, bundle.test_mask);
    return metrics;
}

// ---------------------------------------------------------------------------
// Metrics CSV + checkpoint
// ---------------------------------------------------------------------------

/// Deterministic columns only; wall-clock goes to a separate timing file.
inline void write_metrics_csv(std::ostream& out, const Metrics& m) {
    out << "epoch,train_loss,train_acc,val_acc,test_acc\n";
    char buf[160];
    for (const auto& e : m.epochs) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss,
                      e.train_acc, e.val_acc, e.test_acc);
        out << buf;
    }
}

inline void write_timing_csv(std::ostream& out, const Metrics& m) {
    out << "epoch,seconds\n";
    char buf[64];
    for (const auto& e : m.epochs) {
        std::snprintf(buf, sizeof buf, "%d,%.6f\n", e.epoch, e.seconds);
        out << buf;
    }
}

// Versioned text container; values are hexfloats, so a load reproduces every
// parameter bit for bit.
inline void save_checkpoint(std::ostream& out, const Model& model,
                            const std::map<std::string, std::string>& config) {
    out << "hypermp-checkpoint v1\n";
    out << "config " << config.size() << '\n';
    for (const auto& [k, v] : config) out << k << " = " << v << '\n';
    const auto state = model.named_state();
    out << "tensors " << state.size() << '\n';
    char buf[48];
    for (const auto& [name, t] : state) {
        out << name << ' ' << t.rank() << ' ' << t.rows() << ' ' << t.cols() << '\n';
        for (std::size_t i = 0; i < t.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%a%c", t[i], i + 1 == t.size() ? '\n' : ' ');
            out << buf;
        }
    }
}

inline void save_checkpoint(const std::string& path, const Model& model,
                            const std::map<std::string, std::string>& config) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path);
    save_checkpoint(out, model, config);
}

struct Checkpoint {
    std::map<std::string, std::string> config;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

inline Checkpoint read_checkpoint(std::istream& in) {
    Checkpoint ck;
    std::string line;
    long line_no = 1;
    if (!std::getline(in, line) || line != "hypermp-checkpoint v1")
        throw ParseError("not a hypermp-checkpoint v1 file", line_no);
    std::string word;
    std::size_t n = 0;
    in >> word >> n;
    if (word != "config") throw ParseError("expected config section", ++line_no);
    std::getline(in, line);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw ParseError("truncated config section", ++line_no);
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw ParseError("bad config line", ++line_no);
        ck.config[line.substr(0, eq)] = line.substr(eq + 3);
    }
    in >> word >> n;
    if (word != "tensors") throw ParseError("expected tensors section", ++line_no);
    for (std::size_t i = 0; i < n; ++i) {
        std::string name;
        int rank = 0, rows = 0, cols = 0;
        if (!(in >> name >> rank >> rows >> cols)) throw ParseError("bad tensor header", ++line_no);
        const std::size_t count = std::size_t(rows) * (rank == 2 ? cols : 1);
        std::vector<double> values(count);
        for (std::size_t k = 0; k < count; ++k) {
            std::string tok;
            if (!(in >> tok)) throw ParseError("truncated tensor values", ++line_no);
            values[k] = std::strtod(tok.c_str(), nullptr);
        }
        Tensor t = rank == 1 ? Tensor::vec(std::move(values)) : Tensor::mat(rows, cols, std::move(values));
        ck.tensors.emplace_back(name, t);
    }
    return ck;
}

inline Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint " + path);
    return read_checkpoint(in);
}

/// Copies checkpoint tensors into an already-built model (shapes must match).
inline void load_state(Model& model, const Checkpoint& ck) {
    auto state = model.named_state();
    std::map<std::string, Tensor> by_name;
    for (auto& [name, t] : state) by_name.emplace(name, t);
    if (ck.tensors.size() != state.size())
        throw ContractError("checkpoint holds " + std::to_string(ck.tensors.size()) +
                            " tensors, model expects " + std::to_string(state.size()));
    for (const auto& [name, src] : ck.tensors) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw ContractError("checkpoint tensor '" + name + "' is unknown");
        if (!it->second.same_shape(src))
            throw ContractError("checkpoint tensor '" + name + "' has mismatched shape");
        it->second.values() = src.values();
    }
}

}  // namespace hypermp
