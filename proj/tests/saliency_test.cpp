#include <gtest/gtest.h>

#include <cmath>

#include "holosub/dataset_gen.hpp"
#include "holosub/saliency.hpp"
#include "oracles.hpp"

using holosub::CounterRng;
namespace nn = holosub::nn;
namespace data = holosub::data;
namespace sal = holosub::saliency;
namespace hrr = holosub::hrr;
using nn::Model;
using nn::ModelSpec;
using nn::Tensor;

namespace {

ModelSpec small_spec(nn::HeadKind head, int head_width, int side = 16) {
    ModelSpec spec;
    spec.kind = nn::ModelKind::Cnn;
    spec.input_h = side;
    spec.input_w = side;
    spec.input_c = 1;
    spec.head = head;
    spec.head_width = head_width;
    spec.dropout = 0.0;
    spec.cnn.stages = {{4, 3, 1, true, 2}};
    spec.cnn.dense_widths = {16};
    return spec;
}

data::ImageGray random_image(int side, CounterRng& rng) {
    data::ImageGray img;
    img.height = side;
    img.width = side;
    img.pixels.resize(static_cast<std::size_t>(side) * side);
    for (double& v : img.pixels) v = rng.next_unit() > 0.8 ? 1.0 : 0.0;
    return img;
}

}  // namespace

TEST(SimilarityGradient, MatchesFiniteDifferences) {
    const auto book = hrr::make_codebook(6, 64, 5);
    CounterRng rng(6);
    for (int inst = 0; inst < 10; ++inst) {
        std::vector<double> yhat(64);
        for (double& v : yhat) v = 0.8 * (rng.next_unit() * 2.0 - 1.0);
        const int c = static_cast<int>(rng.next_below(6));
        const auto analytic =
            sal::similarity_gradient(hrr::HrrVector(yhat), book, c).values();
        const auto f = [&](const std::vector<double>& params) {
            const auto u = hrr::bind(hrr::HrrVector(params), book.inv_keys[c]);
            return hrr::cosine_similarity(book.values[c], u);
        };
        const auto numeric = oracles::finite_diff(f, yhat, 1e-6);
        EXPECT_LT(oracles::max_rel_error(analytic, numeric, 1e-6), 1e-4);
    }
}

TEST(Saliency, ZeroModelGivesAllZeroMap) {
    Model model(small_spec(nn::HeadKind::Ce, 6), 1);
    for (auto& p : model.params())
        for (double& v : p.value->data) v = 0.0;
    CounterRng rng(2);
    const auto result = sal::saliency_map(model, random_image(16, rng), nullptr);
    for (double v : result.map.pixels) EXPECT_EQ(v, 0.0);
}

TEST(Saliency, NormalizationContract) {
    const auto book = hrr::make_codebook(6, 8, 3);
    Model model(small_spec(nn::HeadKind::Hrr, 8), 7);
    CounterRng rng(8);
    for (int t = 0; t < 5; ++t) {
        const auto result = sal::saliency_map(model, random_image(16, rng), &book);
        double mx = 0.0;
        for (double v : result.map.pixels) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            mx = std::max(mx, v);
        }
        EXPECT_NEAR(mx, 1.0, 1e-12);
    }
}

TEST(Saliency, DeterministicPerInput) {
    const auto book = hrr::make_codebook(6, 8, 9);
    Model model(small_spec(nn::HeadKind::Hrr, 8), 11);
    CounterRng rng(12);
    const auto img = random_image(16, rng);
    const auto a = sal::saliency_map(model, img, &book);
    const auto b = sal::saliency_map(model, img, &book);
    EXPECT_EQ(a.map.pixels, b.map.pixels);
    EXPECT_EQ(a.predicted, b.predicted);
}

TEST(Saliency, CeMapInvariantToPositiveScoreScaling) {
    // Scaling the head weights (and bias) scales every logit by the same
    // positive factor; the winning class and normalized map are unchanged.
    Model base(small_spec(nn::HeadKind::Ce, 6), 13);
    Model scaled(small_spec(nn::HeadKind::Ce, 6), 13);
    for (auto& p : scaled.params())
        if (p.name.rfind("head.", 0) == 0)
            for (double& v : p.value->data) v *= 3.7;
    CounterRng rng(14);
    const auto img = random_image(16, rng);
    const auto a = sal::saliency_map(base, img, nullptr);
    const auto b = sal::saliency_map(scaled, img, nullptr);
    EXPECT_EQ(a.predicted, b.predicted);
    for (std::size_t i = 0; i < a.map.pixels.size(); ++i)
        EXPECT_NEAR(a.map.pixels[i], b.map.pixels[i], 1e-9);
}

TEST(Saliency, PerturbationOracle) {
    // Nudging the most salient pixel must move the score more than nudging
    // the least salient pixel on >= 90% of seeded (model, image) pairs.
    int wins = 0;
    const int trials = 50;
    for (int t = 0; t < trials; ++t) {
        const auto book = hrr::make_codebook(4, 8, 100 + t);
        Model model(small_spec(nn::HeadKind::Hrr, 8), 200 + t);
        CounterRng rng(300 + t);
        data::ImageGray img;
        img.height = 16;
        img.width = 16;
        img.pixels.resize(256);
        for (double& v : img.pixels) v = 0.25 + 0.5 * rng.next_unit();
        const auto result = sal::saliency_map(model, img, &book);

        std::size_t hi = 0, lo = 0;
        for (std::size_t i = 0; i < result.raw_grad.pixels.size(); ++i) {
            if (result.raw_grad.pixels[i] > result.raw_grad.pixels[hi]) hi = i;
            if (result.raw_grad.pixels[i] < result.raw_grad.pixels[lo]) lo = i;
        }
        const auto score_at = [&](const data::ImageGray& im) {
            Tensor batch = Tensor::zeros({1, 16, 16, 1});
            batch.data = im.pixels;
            const Tensor out = model.forward(batch, false, nullptr, nullptr);
            const auto dec = hrr::decode(hrr::BatchPrediction{out}, book);
            return dec.scores.at(0, static_cast<std::size_t>(result.predicted));
        };
        const auto probe = [&](std::size_t idx) {
            data::ImageGray plus = img, minus = img;
            plus.pixels[idx] += 1e-3;
            minus.pixels[idx] -= 1e-3;
            return std::abs(score_at(plus) - score_at(minus));
        };
        if (probe(hi) > probe(lo)) ++wins;
    }
    EXPECT_GE(wins, 45);
}

TEST(Saliency, BoundaryMassRatio) {
    // A map concentrated exactly on the circle boundary scores ~1; a
    // uniform map scores the band's area fraction.
    data::SceneSpec scene;
    scene.count = 1;
    scene.canvas = 64;
    data::ObjectSpec o;
    o.cx = 32;
    o.cy = 32;
    o.radius = 12;
    scene.objects.push_back(o);

    data::ImageGray ring;
    ring.height = 64;
    ring.width = 64;
    ring.pixels.assign(64 * 64, 0.0);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (data::geom::boundary_distance(o, x + 0.5, y + 0.5) <= 1.0)
                ring.pixels[static_cast<std::size_t>(y) * 64 + x] = 1.0;
    EXPECT_NEAR(sal::boundary_mass_ratio(ring, scene), 1.0, 1e-12);

    data::ImageGray uniform = ring;
    uniform.pixels.assign(64 * 64, 1.0);
    const double band_area = std::numbers::pi * (15.0 * 15.0 - 9.0 * 9.0);
    EXPECT_NEAR(sal::boundary_mass_ratio(uniform, scene), band_area / 4096.0, 0.02);
}
