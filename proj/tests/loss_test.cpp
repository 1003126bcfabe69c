#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "holosub/codebook.hpp"
#include "holosub/loss.hpp"
#include "oracles.hpp"

using holosub::CounterRng;
using holosub::ValidationError;
namespace hrr = holosub::hrr;
using holosub::nn::Tensor;
using hrr::BatchPrediction;
using hrr::Codebook;
using hrr::HrrVector;

namespace {

// Predictions equal to codebook targets, one row per listed class.
BatchPrediction prediction_of_targets(const Codebook& book,
                                      const std::vector<int>& classes) {
    Tensor t = Tensor::zeros({classes.size(),
                              static_cast<std::size_t>(book.feature_dim)});
    for (std::size_t i = 0; i < classes.size(); ++i)
        for (int j = 0; j < book.feature_dim; ++j)
            t[i * static_cast<std::size_t>(book.feature_dim) +
              static_cast<std::size_t>(j)] =
                book.targets[static_cast<std::size_t>(classes[i])][static_cast<std::size_t>(j)];
    return BatchPrediction{std::move(t)};
}

}  // namespace

TEST(Codebook, DeterministicPerSeed) {
    const Codebook a = hrr::make_codebook(6, 64, 7);
    const Codebook b = hrr::make_codebook(6, 64, 7);
    for (int c = 0; c < 6; ++c)
        for (int j = 0; j < 64; ++j) {
            EXPECT_EQ(a.keys[c][j], b.keys[c][j]);
            EXPECT_EQ(a.values[c][j], b.values[c][j]);
        }
}

TEST(Codebook, InvariantsHold) {
    const Codebook book = hrr::make_codebook(6, 64, 3);
    for (int c = 0; c < 6; ++c) {
        EXPECT_TRUE(hrr::is_projected(book.keys[c]));
        EXPECT_TRUE(hrr::is_projected(book.values[c]));
        const HrrVector bound = hrr::bind(book.keys[c], book.values[c]);
        for (int j = 0; j < 64; ++j) {
            EXPECT_NEAR(book.targets[c][j], bound[j], 1e-9);
            EXPECT_LE(std::abs(book.targets[c][j]), 1.0);
        }
    }
    for (int a = 0; a < 6; ++a)
        for (int b = a + 1; b < 6; ++b)
            EXPECT_LT(std::abs(hrr::cosine_similarity(book.keys[a], book.keys[b])),
                      0.5);
}

TEST(Codebook, BoundRangeHighProbabilityBound) {
    // max |target entry| <= 4*sqrt(2)/sqrt(H) over 1,000 seeds at C=6, H=64.
    const double limit = 4.0 * std::sqrt(2.0) / 8.0;  // 0.70710...
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const Codebook book = hrr::make_codebook(6, 64, seed);
        for (const auto& t : book.targets)
            for (std::size_t j = 0; j < t.dim(); ++j)
                worst = std::max(worst, std::abs(t[j]));
    }
    EXPECT_LE(worst, limit);
}

TEST(Codebook, TargetsUnbindToValues) {
    const Codebook book = hrr::make_codebook(6, 64, 11);
    for (int c = 0; c < 6; ++c) {
        const HrrVector got = hrr::unbind(book.targets[c], book.keys[c]);
        for (int j = 0; j < 64; ++j)
            EXPECT_NEAR(got[j], book.values[c][j], 1e-6);
    }
}

TEST(Codebook, RejectsTinyFeatureDim) {
    EXPECT_THROW(hrr::make_codebook(6, 4, 1), ValidationError);
    EXPECT_THROW(hrr::make_codebook(1, 64, 1), ValidationError);
}

TEST(Codebook, SerializationRoundTrip) {
    namespace fs = std::filesystem;
    const Codebook book = hrr::make_codebook(6, 64, 99);
    const std::string path =
        (fs::temp_directory_path() / "holosub_codebook_test.bin").string();
    hrr::save_codebook(path, book);
    const Codebook back = hrr::load_codebook(path);
    EXPECT_EQ(back.num_classes, book.num_classes);
    EXPECT_EQ(back.feature_dim, book.feature_dim);
    EXPECT_EQ(back.seed, book.seed);
    for (int c = 0; c < 6; ++c)
        for (int j = 0; j < 64; ++j) {
            EXPECT_EQ(back.keys[c][j], book.keys[c][j]);
            EXPECT_EQ(back.values[c][j], book.values[c][j]);
            EXPECT_NEAR(back.targets[c][j], book.targets[c][j], 0.0);
        }
    std::remove(path.c_str());
}

TEST(HrrLoss, ZeroAtTargets) {
    const Codebook book = hrr::make_codebook(6, 64, 21);
    const auto pred = prediction_of_targets(book, {0, 3, 5});
    const auto lv = hrr::hrr_loss(pred, {0, 3, 5}, book);
    EXPECT_NEAR(lv.loss, 0.0, 1e-9);
    for (double g : lv.grad.data) EXPECT_EQ(g, 0.0);
}

TEST(HrrLoss, UnitResidualDirection) {
    // Manually built H=4 codebook (make_codebook enforces H >= 8).
    Codebook book;
    book.num_classes = 2;
    book.feature_dim = 4;
    book.keys = {HrrVector::delta(4), HrrVector::delta(4)};
    book.values = {HrrVector(std::vector<double>{0.1, 0.2, 0.3, 0.4}),
                   HrrVector(std::vector<double>{0.4, 0.3, 0.2, 0.1})};
    book.finalize();
    const double eps = 1e-3;
    Tensor t({1, 4},
             {book.targets[0][0] + eps, book.targets[0][1], book.targets[0][2],
              book.targets[0][3]});
    const auto lv = hrr::hrr_loss(BatchPrediction::from(t), {0}, book);
    EXPECT_NEAR(lv.loss, eps, 1e-12);
    EXPECT_NEAR(lv.grad[0], 1.0, 1e-9);
    for (int j = 1; j < 4; ++j) EXPECT_NEAR(lv.grad[j], 0.0, 1e-9);
}

TEST(HrrLoss, GradientMatchesFiniteDifferences) {
    const Codebook book = hrr::make_codebook(6, 64, 31);
    CounterRng rng(32);
    for (int inst = 0; inst < 10; ++inst) {
        const std::size_t B = 3;
        std::vector<int> labels;
        std::vector<double> flat;
        for (std::size_t i = 0; i < B; ++i) {
            labels.push_back(static_cast<int>(rng.next_below(6)));
            for (int j = 0; j < 64; ++j) flat.push_back(0.8 * (rng.next_unit() * 2 - 1));
        }
        const auto f = [&](const std::vector<double>& params) {
            Tensor t({B, 64}, params);
            return hrr::hrr_loss(BatchPrediction{std::move(t)}, labels, book).loss;
        };
        const auto analytic =
            hrr::hrr_loss(BatchPrediction{Tensor({B, 64}, flat)}, labels, book)
                .grad.data;
        const auto numeric = oracles::finite_diff(f, flat, 1e-5);
        EXPECT_LT(oracles::max_rel_error(analytic, numeric), 1e-4) << "inst " << inst;
    }
}

TEST(HrrLoss, SquaredVariantGradient) {
    const Codebook book = hrr::make_codebook(6, 64, 41);
    CounterRng rng(42);
    std::vector<int> labels{2, 4};
    std::vector<double> flat;
    for (int i = 0; i < 2 * 64; ++i) flat.push_back(0.5 * (rng.next_unit() * 2 - 1));
    const auto f = [&](const std::vector<double>& params) {
        return hrr::hrr_loss(BatchPrediction{Tensor({2, 64}, params)}, labels, book,
                             hrr::HrrLossKind::SquaredNorm)
            .loss;
    };
    const auto analytic = hrr::hrr_loss(BatchPrediction{Tensor({2, 64}, flat)},
                                        labels, book, hrr::HrrLossKind::SquaredNorm)
                              .grad.data;
    EXPECT_LT(oracles::max_rel_error(analytic, oracles::finite_diff(f, flat, 1e-5)),
              1e-4);
}

TEST(HrrLoss, RejectsBadLabels) {
    const Codebook book = hrr::make_codebook(6, 64, 51);
    const auto pred = prediction_of_targets(book, {0});
    EXPECT_THROW(hrr::hrr_loss(pred, {6}, book), ValidationError);
    EXPECT_THROW(hrr::hrr_loss(pred, {-1}, book), ValidationError);
}

TEST(Decode, ExactTargetsDecodeToTheirClass) {
    const Codebook book = hrr::make_codebook(6, 64, 61);
    const auto pred = prediction_of_targets(book, {0, 1, 2, 3, 4, 5});
    const auto dec = hrr::decode(pred, book);
    for (int c = 0; c < 6; ++c) {
        EXPECT_EQ(dec.argmax[static_cast<std::size_t>(c)], c);
        EXPECT_GE(dec.scores.at(static_cast<std::size_t>(c),
                                static_cast<std::size_t>(c)),
                  0.999);
    }
}

TEST(Decode, AntipodalTargetScoresNegative) {
    const Codebook book = hrr::make_codebook(6, 64, 71);
    Tensor t = prediction_of_targets(book, {2}).rows;
    for (double& x : t.data) x = -x;
    const auto dec = hrr::decode(BatchPrediction{std::move(t)}, book);
    EXPECT_LE(dec.scores.at(0, 2), -0.999);
}

TEST(Decode, SelfConsistentAcrossSeeds) {
    for (std::uint64_t seed = 100; seed < 200; ++seed) {
        const Codebook book = hrr::make_codebook(6, 64, seed);
        const auto dec =
            hrr::decode(prediction_of_targets(book, {0, 1, 2, 3, 4, 5}), book);
        for (int c = 0; c < 6; ++c)
            ASSERT_EQ(dec.argmax[static_cast<std::size_t>(c)], c) << "seed " << seed;
    }
}

TEST(Decode, NoisyTargetsMonteCarlo) {
    // Additive Gaussian noise sigma=0.1; accuracy >= 99% over 1,000 trials.
    const Codebook book = hrr::make_codebook(6, 64, 81);
    CounterRng rng(82);
    int hits = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const int c = static_cast<int>(rng.next_below(6));
        Tensor row = Tensor::zeros({1, 64});
        for (int j = 0; j < 64; ++j)
            row[static_cast<std::size_t>(j)] =
                book.targets[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] +
                0.1 * rng.next_gaussian();
        if (hrr::decode(BatchPrediction{std::move(row)}, book).argmax[0] == c) ++hits;
    }
    EXPECT_GE(hits, 990);
}

TEST(Decode, ArgmaxScaleInvariant) {
    const Codebook book = hrr::make_codebook(6, 64, 91);
    CounterRng rng(92);
    Tensor rows = Tensor::zeros({4, 64});
    for (double& x : rows.data) x = rng.next_gaussian() * 0.2;
    const auto base = hrr::decode(BatchPrediction{rows}, book);
    Tensor scaled = rows;
    for (double& x : scaled.data) x *= 42.0;
    const auto big = hrr::decode(BatchPrediction{std::move(scaled)}, book);
    EXPECT_EQ(base.argmax, big.argmax);
}

TEST(Decode, LiteralBindModeDiffers) {
    // The comparison switch runs, produces valid scores, and is generally a
    // worse decoder than unbinding with the exact inverse.
    const Codebook book = hrr::make_codebook(6, 64, 93);
    const auto pred = prediction_of_targets(book, {0, 1, 2, 3, 4, 5});
    const auto literal = hrr::decode(pred, book, hrr::DecodeMode::LiteralBind);
    for (double s : literal.scores.scores) {
        EXPECT_GE(s, -1.0);
        EXPECT_LE(s, 1.0);
    }
}

TEST(Decode, InterpolationMonotonicity) {
    // Walking a random prediction toward its target strictly decreases the
    // loss; decode accuracy is non-decreasing past interpolation weight 0.9.
    const Codebook book = hrr::make_codebook(6, 64, 94);
    CounterRng rng(95);
    const std::vector<double> weights{0.90, 0.925, 0.95, 0.975, 1.0};
    std::vector<int> hits(weights.size(), 0);
    for (int inst = 0; inst < 100; ++inst) {
        const int c = static_cast<int>(rng.next_below(6));
        std::vector<double> start(64);
        for (double& x : start) x = 0.9 * (rng.next_unit() * 2 - 1);
        double prev_loss = -1.0;
        for (std::size_t wi = 0; wi < weights.size(); ++wi) {
            const double w = weights[wi];
            Tensor row = Tensor::zeros({1, 64});
            for (int j = 0; j < 64; ++j)
                row[static_cast<std::size_t>(j)] =
                    (1.0 - w) * start[static_cast<std::size_t>(j)] +
                    w * book.targets[static_cast<std::size_t>(c)]
                                    [static_cast<std::size_t>(j)];
            const auto lv = hrr::hrr_loss(BatchPrediction{row}, {c}, book);
            if (prev_loss >= 0.0) ASSERT_LT(lv.loss, prev_loss);
            prev_loss = lv.loss;
            if (hrr::decode(BatchPrediction{std::move(row)}, book).argmax[0] == c)
                hits[wi]++;
        }
    }
    for (std::size_t wi = 1; wi < weights.size(); ++wi)
        EXPECT_GE(hits[wi], hits[wi - 1]);
    EXPECT_EQ(hits.back(), 100);
}

TEST(CeLoss, UniformLogitsGiveLogC) {
    const Tensor logits({2, 6}, std::vector<double>(12, 0.25));
    const auto lv = hrr::ce_loss(logits, {1, 4});
    EXPECT_NEAR(lv.loss, std::log(6.0), 1e-9);
}

TEST(CeLoss, LossShrinksWithMargin) {
    double prev = std::log(6.0);
    for (double margin : {1.0, 2.0, 4.0, 8.0, 16.0}) {
        Tensor logits = Tensor::zeros({1, 6});
        logits[2] = margin;
        const auto lv = hrr::ce_loss(logits, {2});
        EXPECT_LT(lv.loss, prev);
        prev = lv.loss;
    }
    EXPECT_LT(prev, 1e-6);
}

TEST(CeLoss, GradientMatchesFiniteDifferences) {
    CounterRng rng(96);
    for (int inst = 0; inst < 10; ++inst) {
        const std::size_t B = 4, C = 6;
        std::vector<int> labels;
        std::vector<double> flat;
        for (std::size_t i = 0; i < B; ++i) {
            labels.push_back(static_cast<int>(rng.next_below(C)));
            for (std::size_t c = 0; c < C; ++c)
                flat.push_back(rng.next_gaussian());
        }
        const auto f = [&](const std::vector<double>& params) {
            return hrr::ce_loss(Tensor({B, C}, params), labels).loss;
        };
        const auto analytic = hrr::ce_loss(Tensor({B, C}, flat), labels).grad.data;
        EXPECT_LT(oracles::max_rel_error(analytic, oracles::finite_diff(f, flat, 1e-5)),
                  1e-4);
    }
}

TEST(CeLoss, RejectsNonFinite) {
    Tensor logits = Tensor::zeros({1, 3});
    logits[1] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(hrr::ce_loss(logits, {0}), ValidationError);
}
