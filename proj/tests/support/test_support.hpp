#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hypermp/data.hpp"
#include "hypermp/hypergraph.hpp"
#include "hypermp/random.hpp"
#include "hypermp/tensor.hpp"

namespace hypermp::testing {

// ---------------------------------------------------------------------------
// Finite-difference oracle. Independent of the backward pass: it only re-runs
// the forward computation at displaced parameter values.
// ---------------------------------------------------------------------------

template <typename LossFn>
std::vector<double> central_differences(Tensor param, LossFn loss, double step = 1e-5) {
    std::vector<double> grad(param.size());
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = param[i];
        param[i] = saved + step;
        const double up = loss();
        param[i] = saved - step;
        const double down = loss();
        param[i] = saved;
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

inline double rel_err(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

template <typename LossFn>
double max_grad_rel_err(Tensor param, const std::vector<double>& analytic, LossFn loss,
                        double step = 1e-5) {
    const auto numeric = central_differences(param, loss, step);
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i)
        worst = std::max(worst, rel_err(analytic[i], numeric[i]));
    return worst;
}

// ---------------------------------------------------------------------------
// Random structures
// ---------------------------------------------------------------------------

inline Hypergraph random_hypergraph(Rng& rng, int num_vertices, int num_hyperedges,
                                    int max_size = 4) {
    std::vector<std::vector<int>> hyperedges;
    for (int e = 0; e < num_hyperedges; ++e) {
        const int size = 1 + static_cast<int>(rng.below(std::min(max_size, num_vertices)));
        std::vector<int> ids(num_vertices);
        for (int v = 0; v < num_vertices; ++v) ids[v] = v;
        rng.shuffle(ids);
        hyperedges.push_back({ids.begin(), ids.begin() + size});
    }
    return Hypergraph::build(num_vertices, std::move(hyperedges));
}

inline Tensor random_tensor(Rng& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Location of the real corpus, when the user supplied one.
inline std::string cora_dir() {
    if (const char* env = std::getenv("HYPERMP_DATA_DIR")) return env;
#ifdef HYPERMP_SOURCE_DIR
    return std::string(HYPERMP_SOURCE_DIR) + "/data/cora";
#else
    return "data/cora";
#endif
}

inline bool cora_present() {
    namespace fs = std::filesystem;
    const fs::path dir = cora_dir();
    return fs::exists(dir / "cora.content") && fs::exists(dir / "cora.cites");
}

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("hypermp_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter_++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

}  // namespace hypermp::testing
