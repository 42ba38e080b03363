#include "imac/nn.hpp"

#include <cmath>
#include <numbers>

namespace imac {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
}

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix gelu(const Matrix& x) {
    return x.unaryExpr([](double v) { return gelu(v); });
}

Linear Linear::zeros(Index in, Index out) {
    return {Matrix::Zero(out, in), Vector::Zero(out)};
}

Linear Linear::init(Index in, Index out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Linear lin = zeros(in, out);
    for (Index i = 0; i < lin.w.size(); ++i) {
        lin.w.data()[i] = uniform(rng, -bound, bound);
    }
    for (Index i = 0; i < lin.b.size(); ++i) {
        lin.b[i] = uniform(rng, -bound, bound);
    }
    return lin;
}

Matrix Linear::apply_rows(const Matrix& x) const {
    Matrix y = x * w.transpose();
    y.rowwise() += b.transpose();
    return y;
}

Vector linear_backward(const Linear& lin, const Vector& x, const Vector& dy, Linear& grad) {
    grad.w.noalias() += dy * x.transpose();
    grad.b += dy;
    return lin.w.transpose() * dy;
}

Matrix linear_rows_backward(const Linear& lin, const Matrix& x, const Matrix& dy, Linear& grad) {
    grad.w.noalias() += dy.transpose() * x;
    grad.b += dy.colwise().sum().transpose();
    return dy * lin.w;
}

LayerNorm LayerNorm::identity(Index d, double eps) {
    return {Vector::Ones(d), Vector::Zero(d), eps};
}

Matrix layer_norm_rows(const LayerNorm& ln, const Matrix& x, LayerNormCache* cache) {
    const Index n = x.rows();
    const Index d = x.cols();
    Matrix xhat(n, d);
    Vector inv_std(n);
    for (Index r = 0; r < n; ++r) {
        const double mean = x.row(r).mean();
        const RowVector centered = x.row(r).array() - mean;
        const double var = centered.squaredNorm() / static_cast<double>(d);
        inv_std[r] = 1.0 / std::sqrt(var + ln.eps);
        xhat.row(r) = centered * inv_std[r];
    }
    Matrix y = (xhat.array().rowwise() * ln.gain.transpose().array()).matrix();
    y.rowwise() += ln.bias.transpose();
    if (cache != nullptr) {
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return y;
}

Matrix layer_norm_rows_backward(const LayerNorm& ln, const LayerNormCache& cache,
                                const Matrix& dy, LayerNorm& grad) {
    const Index n = dy.rows();
    const double d = static_cast<double>(dy.cols());
    grad.gain += (dy.array() * cache.xhat.array()).colwise().sum().transpose().matrix();
    grad.bias += dy.colwise().sum().transpose();
    Matrix dx(n, dy.cols());
    for (Index r = 0; r < n; ++r) {
        const RowVector dxhat = dy.row(r).cwiseProduct(ln.gain.transpose());
        const double mean_dxhat = dxhat.sum() / d;
        const double mean_dxhat_xhat = dxhat.dot(cache.xhat.row(r)) / d;
        dx.row(r) = cache.inv_std[r] *
                    (dxhat.array() - mean_dxhat - cache.xhat.row(r).array() * mean_dxhat_xhat).matrix();
    }
    return dx;
}

Vector layer_norm(const LayerNorm& ln, const Vector& x, LayerNormCache* cache) {
    return layer_norm_rows(ln, x.transpose(), cache).transpose();
}

Vector layer_norm_backward(const LayerNorm& ln, const LayerNormCache& cache,
                           const Vector& dy, LayerNorm& grad) {
    return layer_norm_rows_backward(ln, cache, dy.transpose(), grad).transpose();
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        p.row(r) = (logits.row(r).array() - m).exp().matrix();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

Matrix softmax_rows_backward(const Matrix& probs, const Matrix& dprobs) {
    Matrix dz(probs.rows(), probs.cols());
    for (Index r = 0; r < probs.rows(); ++r) {
        const double inner = probs.row(r).dot(dprobs.row(r));
        dz.row(r) = probs.row(r).cwiseProduct((dprobs.row(r).array() - inner).matrix());
    }
    return dz;
}

Vector softmax(const Vector& logits) {
    return softmax_rows(logits.transpose()).transpose();
}

Vector dropout(const Vector& x, double rate, Rng& rng, DropoutMask* mask) {
    if (rate <= 0.0) {
        if (mask != nullptr) {
            mask->scale.resize(0);
        }
        return x;
    }
    Vector scale(x.size());
    const double keep = 1.0 - rate;
    for (Index i = 0; i < x.size(); ++i) {
        scale[i] = uniform01(rng) < keep ? 1.0 / keep : 0.0;
    }
    Vector y = x.cwiseProduct(scale);
    if (mask != nullptr) {
        mask->scale = std::move(scale);
    }
    return y;
}

void append_views(std::vector<ParamView>& out, const std::string& prefix, Linear& lin) {
    out.push_back(view(prefix + ".w", lin.w));
    out.push_back(view(prefix + ".b", lin.b));
}

void append_views(std::vector<ParamView>& out, const std::string& prefix, LayerNorm& ln) {
    out.push_back(view(prefix + ".gain", ln.gain));
    out.push_back(view(prefix + ".bias", ln.bias));
}

}  // namespace imac
