#include "imac/nn.hpp"
#include "imac/tensor_io.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

namespace imac {
namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

TEST(Gelu, ExactNormalCdfForm) {
    for (double x : {-3.0, -1.0, -0.1, 0.0, 0.5, 1.0, 2.5, 10.0}) EXPECT_NEAR(gelu(x), x * phi(x), 1e-15);
    EXPECT_NEAR(gelu(1.0), 0.841345, 1e-6);
    EXPECT_NEAR(gelu(10.0), 10.0, 1e-6);
    EXPECT_EQ(gelu(0.0), 0.0);
}

TEST(Gelu, MonotoneOnNonnegatives) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        double a = uniform(rng, 0, 8), b = uniform(rng, 0, 8);
        if (a > b) std::swap(a, b);
        EXPECT_LE(gelu(a), gelu(b));
    }
}

TEST(Gelu, DerivativeMatchesDifference) {
    for (double x = -4.0; x <= 4.0; x += 0.37) {
        EXPECT_NEAR(gelu_grad(x), (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6, 1e-8);
    }
}

TEST(Softmax, ShiftInvariantAndNormalized) {
    Matrix m(2, 3);
    m << 1, 2, 3, -5, 0, 700;
    const Matrix p = softmax_rows(m);
    const Matrix q = softmax_rows((m.array() + 42.0).matrix());
    EXPECT_TRUE(p.allFinite());
    EXPECT_NEAR(p.row(0).sum(), 1.0, 1e-12);
    EXPECT_NEAR(p.row(1).sum(), 1.0, 1e-12);
    EXPECT_LT((p - q).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LayerNorm, BackwardMatchesFiniteDifferences) {
    Rng rng(2);
    LayerNorm ln = LayerNorm::identity(5);
    for (Index i = 0; i < 5; ++i) {
        ln.gain[i] = uniform(rng, 0.5, 1.5);
        ln.bias[i] = uniform(rng, -1, 1);
    }
    Matrix x(3, 5), w(3, 5);
    for (Index i = 0; i < x.size(); ++i) {
        x.data()[i] = uniform(rng, -2, 2);
        w.data()[i] = uniform(rng, -1, 1);
    }
    auto loss = [&](const Matrix& in) { return (layer_norm_rows(ln, in, nullptr).array() * w.array()).sum(); };
    LayerNormCache cache;
    layer_norm_rows(ln, x, &cache);
    LayerNorm grad{Vector::Zero(5), Vector::Zero(5), ln.eps};
    const Matrix dx = layer_norm_rows_backward(ln, cache, w, grad);
    for (Index i = 0; i < x.size(); ++i) {
        Matrix up = x, down = x;
        up.data()[i] += 1e-6;
        down.data()[i] -= 1e-6;
        EXPECT_NEAR(dx.data()[i], (loss(up) - loss(down)) / 2e-6, 1e-7);
    }
}

TEST(Dropout, InvertedScalingPreservesMean) {
    Rng rng(3);
    const Vector x = Vector::Ones(20000);
    DropoutMask mask;
    const Vector y = dropout(x, 0.1, rng, &mask);
    EXPECT_TRUE(mask.active());
    EXPECT_NEAR(y.mean(), 1.0, 0.02);
    for (Index i = 0; i < y.size(); ++i) EXPECT_TRUE(y[i] == 0.0 || std::abs(y[i] - 1.0 / 0.9) < 1e-12);
}

TEST(Seeds, DerivedStreamsDiffer) {
    EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
    EXPECT_NE(derive_seed(0, 1), derive_seed(1, 1));
    EXPECT_EQ(derive_seed(5, 2), derive_seed(5, 2));
}

TEST(TensorIo, RoundTripAndShapeChecks) {
    Rng rng(4);
    Matrix a(3, 4);
    Vector b(5);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = uniform(rng, -1, 1);
    for (Index i = 0; i < b.size(); ++i) b[i] = uniform(rng, -1, 1);
    const auto dir = testing::scratch_dir("tensors");
    {
        std::vector<ParamView> views{view("a", a), view("b", b)};
        save_tensors(dir / "t.bin", views);
    }
    Matrix a2 = Matrix::Zero(3, 4);
    Vector b2 = Vector::Zero(5);
    std::vector<ParamView> views{view("a", a2), view("b", b2)};
    load_tensors(dir / "t.bin", views);
    EXPECT_EQ(a, a2);
    EXPECT_EQ(b, b2);

    Matrix wrong = Matrix::Zero(4, 3);
    std::vector<ParamView> bad{view("a", wrong), view("b", b2)};
    EXPECT_THROW(load_tensors(dir / "t.bin", bad), std::exception);

    std::ofstream(dir / "junk.bin") << "nope";
    EXPECT_THROW(load_tensors(dir / "junk.bin", views), std::exception);
}

}  // namespace
}  // namespace imac
