#pragma once
// Dense building blocks shared by the encoder and the fusion head.
//
// Conventions: token sequences are row-major in the sense of "one row per
// token" (n x d).  A Linear map stores W as (out x in) and is applied to a
// column vector as W x + b, or to a token matrix as X W^T + 1 b^T.
// Every forward helper has a matching *_backward that accumulates parameter
// gradients into a same-shaped gradient object.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace imac {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

using Rng = std::mt19937_64;

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Derives an independent stream seed from a master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Exact GELU: x * Phi(x).
double gelu(double x);
double gelu_grad(double x);
double sigmoid(double x);

Matrix gelu(const Matrix& x);

struct Linear {
    Matrix w;  // out x in
    Vector b;  // out

    Index in_dim() const { return w.cols(); }
    Index out_dim() const { return w.rows(); }

    static Linear zeros(Index in, Index out);
    // Uniform(-1/sqrt(in), 1/sqrt(in)) for weights and bias.
    static Linear init(Index in, Index out, Rng& rng);

    Vector apply(const Vector& x) const { return w * x + b; }
    Matrix apply_rows(const Matrix& x) const;
};

// grad += d(out)/d(params) given the forward input x and upstream dy.
// Returns dx.
Vector linear_backward(const Linear& lin, const Vector& x, const Vector& dy, Linear& grad);
Matrix linear_rows_backward(const Linear& lin, const Matrix& x, const Matrix& dy, Linear& grad);

struct LayerNorm {
    Vector gain;
    Vector bias;
    double eps = 1e-5;

    static LayerNorm identity(Index d, double eps = 1e-5);
};

struct LayerNormCache {
    Matrix xhat;      // normalized rows
    Vector inv_std;   // one per row
};

// Normalizes each row independently.
Matrix layer_norm_rows(const LayerNorm& ln, const Matrix& x, LayerNormCache* cache);
Matrix layer_norm_rows_backward(const LayerNorm& ln, const LayerNormCache& cache,
                                const Matrix& dy, LayerNorm& grad);

Vector layer_norm(const LayerNorm& ln, const Vector& x, LayerNormCache* cache);
Vector layer_norm_backward(const LayerNorm& ln, const LayerNormCache& cache,
                           const Vector& dy, LayerNorm& grad);

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);
Matrix softmax_rows_backward(const Matrix& probs, const Matrix& dprobs);
Vector softmax(const Vector& logits);

// Inverted dropout: kept units are scaled by 1/(1-rate).  An empty mask
// means dropout was not applied.
struct DropoutMask {
    Vector scale;
    bool active() const { return scale.size() > 0; }
};

Vector dropout(const Vector& x, double rate, Rng& rng, DropoutMask* mask);

// A named, contiguous view of one parameter tensor.
struct ParamView {
    std::string name;
    double* data = nullptr;
    Index rows = 0;
    Index cols = 0;

    Index size() const { return rows * cols; }
    Eigen::Map<Matrix> map() const { return {data, rows, cols}; }
};

inline ParamView view(std::string name, Matrix& m) {
    return {std::move(name), m.data(), m.rows(), m.cols()};
}
inline ParamView view(std::string name, Vector& v) {
    return {std::move(name), v.data(), v.size(), 1};
}

void append_views(std::vector<ParamView>& out, const std::string& prefix, Linear& lin);
void append_views(std::vector<ParamView>& out, const std::string& prefix, LayerNorm& ln);

}  // namespace imac
