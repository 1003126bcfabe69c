#pragma once

// Classification machinery on top of the codebook: the bound-target loss
// (sum of unsquared L2 residual norms) with its gradient, the cosine
// decode, and a softmax cross-entropy baseline.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "holosub/codebook.hpp"
#include "holosub/errors.hpp"
#include "holosub/hrr.hpp"
#include "holosub/tensor.hpp"

namespace holosub::hrr {

using nn::Tensor;

// Network outputs for a batch, one post-tanh feature row per sample.
struct BatchPrediction {
    Tensor rows;  // [B, H]

    static BatchPrediction from(Tensor t) {
        if (t.ndim() != 2 || t.dim(0) < 1)
            throw ValidationError("BatchPrediction: expected [B,H] with B >= 1");
        t.require_finite("BatchPrediction");
        for (double x : t.data)
            if (x < -1.0 || x > 1.0)
                throw ValidationError("BatchPrediction: entries must lie in [-1,1]");
        return BatchPrediction{std::move(t)};
    }

    std::size_t batch() const { return rows.dim(0); }
    std::size_t feature_dim() const { return rows.dim(1); }
    const double* row(std::size_t i) const {
        return rows.data.data() + i * feature_dim();
    }
};

struct ScoreMatrix {
    std::size_t batch_size = 0;
    std::size_t num_classes = 0;
    std::vector<double> scores;  // row-major [B, C], cosine values

    double at(std::size_t i, std::size_t c) const {
        return scores[i * num_classes + c];
    }
};

enum class HrrLossKind {
    Norm,         // sum_i ||t_i - y_i||_2
    SquaredNorm,  // ablation switch: sum_i ||t_i - y_i||_2^2
};

struct LossValue {
    double loss = 0.0;
    Tensor grad;  // same shape as the prediction/logit tensor
};

constexpr double kResidualFloor = 1e-12;

// Sum over the batch of L2 residual norms between each prediction row and
// its class target. At a zero residual the gradient is defined as zero.
inline LossValue hrr_loss(const BatchPrediction& pred, const std::vector<int>& labels,
                          const Codebook& book, HrrLossKind kind = HrrLossKind::Norm) {
    const std::size_t B = pred.batch();
    const std::size_t H = pred.feature_dim();
    if (labels.size() != B)
        throw ValidationError("hrr_loss: labels/batch mismatch");
    if (static_cast<int>(H) != book.feature_dim)
        throw ValidationError("hrr_loss: feature_dim mismatch");
    LossValue out;
    out.grad = Tensor::zeros({B, H});
    for (std::size_t i = 0; i < B; ++i) {
        const int label = labels[i];
        if (label < 0 || label >= book.num_classes)
            throw ValidationError("hrr_loss: label out of range");
        const HrrVector& target = book.targets[static_cast<std::size_t>(label)];
        const double* y = pred.row(i);
        double norm2 = 0.0;
        for (std::size_t j = 0; j < H; ++j) {
            const double r = y[j] - target[j];
            norm2 += r * r;
        }
        const double norm = std::sqrt(norm2);
        if (kind == HrrLossKind::Norm) {
            out.loss += norm;
            if (norm > kResidualFloor) {
                for (std::size_t j = 0; j < H; ++j)
                    out.grad[i * H + j] = (y[j] - target[j]) / norm;
            }
        } else {
            out.loss += norm2;
            for (std::size_t j = 0; j < H; ++j)
                out.grad[i * H + j] = 2.0 * (y[j] - target[j]);
        }
    }
    return out;
}

enum class DecodeMode {
    ExactInverse,  // unbind with exact_inverse(key): the working decode
    LiteralBind,   // comparison switch: bind with the key itself
};

struct DecodeResult {
    ScoreMatrix scores;
    std::vector<int> argmax;  // ties broken toward the lowest class index
};

// scores[i][c] = cosine(values[c], unbind(y_i, keys[c])); prediction is
// the row argmax.
inline DecodeResult decode(const BatchPrediction& pred, const Codebook& book,
                           DecodeMode mode = DecodeMode::ExactInverse) {
    const std::size_t B = pred.batch();
    const std::size_t H = pred.feature_dim();
    if (static_cast<int>(H) != book.feature_dim)
        throw ValidationError("decode: feature_dim mismatch");
    const std::size_t C = static_cast<std::size_t>(book.num_classes);
    DecodeResult out;
    out.scores.batch_size = B;
    out.scores.num_classes = C;
    out.scores.scores.assign(B * C, 0.0);
    out.argmax.assign(B, 0);
    for (std::size_t i = 0; i < B; ++i) {
        HrrVector y(std::vector<double>(pred.row(i), pred.row(i) + H));
        double best = -2.0;
        std::size_t best_c = 0;
        for (std::size_t c = 0; c < C; ++c) {
            const HrrVector estimate =
                mode == DecodeMode::ExactInverse ? bind(y, book.inv_keys[c])
                                                 : bind(y, book.keys[c]);
            if (estimate.norm2() < kResidualFloor)
                throw ZeroNorm("decode: degenerate unbound estimate");
            const double s = cosine_similarity(book.values[c], estimate);
            out.scores.scores[i * C + c] = s;
            if (s > best) {
                best = s;
                best_c = c;
            }
        }
        out.argmax[i] = static_cast<int>(best_c);
    }
    return out;
}

// Mean negative log softmax probability of the true class, stabilized by
// max subtraction. grad = (softmax - onehot) / B.
inline LossValue ce_loss(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.ndim() != 2)
        throw ValidationError("ce_loss: expected [B,C] logits");
    logits.require_finite("ce_loss logits");
    const std::size_t B = logits.dim(0);
    const std::size_t C = logits.dim(1);
    if (labels.size() != B)
        throw ValidationError("ce_loss: labels/batch mismatch");
    LossValue out;
    out.grad = Tensor::zeros({B, C});
    for (std::size_t i = 0; i < B; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= C)
            throw ValidationError("ce_loss: label out of range");
        const double* z = logits.data.data() + i * C;
        const double zmax = *std::max_element(z, z + C);
        double denom = 0.0;
        for (std::size_t c = 0; c < C; ++c) denom += std::exp(z[c] - zmax);
        const double log_denom = std::log(denom);
        out.loss += (log_denom - (z[static_cast<std::size_t>(label)] - zmax)) /
                    static_cast<double>(B);
        for (std::size_t c = 0; c < C; ++c) {
            const double p = std::exp(z[c] - zmax) / denom;
            out.grad[i * C + c] =
                (p - (static_cast<int>(c) == label ? 1.0 : 0.0)) /
                static_cast<double>(B);
        }
    }
    return out;
}

}  // namespace holosub::hrr
