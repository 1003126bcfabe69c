#pragma once

// Training loop: stepwise learning-rate schedule, SGD/Adam, seeded epoch
// shuffles, per-epoch loss and train-accuracy logging. Deterministic end to
// end for a fixed seed and worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "holosub/codebook.hpp"
#include "holosub/errors.hpp"
#include "holosub/loss.hpp"
#include "holosub/model.hpp"
#include "holosub/rng.hpp"
#include "holosub/tensor.hpp"

namespace holosub::nn {

struct Dataset {
    Tensor images;  // [N, H, W, 1]
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }

    void validate(int num_classes) const {
        if (images.ndim() != 4 || images.dim(0) != labels.size())
            throw ValidationError("Dataset: image/label count mismatch");
        if (labels.empty()) throw ValidationError("Dataset: empty");
        for (int l : labels)
            if (l < 0 || l >= num_classes)
                throw ValidationError("Dataset: label out of range");
    }
};

enum class OptimizerKind { Sgd, Adam };
enum class LossKind { Hrr, Ce };

inline std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::Sgd ? "sgd" : "adam";
}
inline std::string to_string(LossKind k) { return k == LossKind::Hrr ? "hrr" : "ce"; }

struct TrainConfig {
    int epochs = 50;
    int batch_size = 32;
    // (first epoch, learning rate), first entry must start at epoch 0,
    // strictly increasing epochs.
    std::vector<std::pair<int, double>> lr_schedule{{0, 1e-3}};
    OptimizerKind optimizer = OptimizerKind::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::Hrr;
    hrr::HrrLossKind hrr_kind = hrr::HrrLossKind::Norm;
    // Stop once train accuracy reaches this level (<=0 disables).
    double stop_at_accuracy = -1.0;

    void validate() const {
        if (epochs < 1 || batch_size < 1)
            throw ValidationError("TrainConfig: bad epochs/batch_size");
        if (lr_schedule.empty() || lr_schedule.front().first != 0)
            throw ValidationError("TrainConfig: schedule must start at epoch 0");
        for (std::size_t i = 1; i < lr_schedule.size(); ++i)
            if (lr_schedule[i].first <= lr_schedule[i - 1].first)
                throw ValidationError("TrainConfig: schedule epochs must increase");
    }
};

inline double lr_at(const std::vector<std::pair<int, double>>& schedule, int epoch) {
    double lr = schedule.front().second;
    for (const auto& [start, rate] : schedule)
        if (epoch >= start) lr = rate;
    return lr;
}

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;      // mean per-sample loss over the epoch
    double accuracy = 0.0;  // eval-mode accuracy over the training set
};

class Optimizer {
public:
    Optimizer(const TrainConfig& cfg, std::vector<NamedParam> params)
        : cfg_(cfg), params_(std::move(params)) {
        if (cfg_.optimizer == OptimizerKind::Adam) {
            for (const auto& p : params_) {
                m_.push_back(Tensor::zeros(p.value->shape));
                v_.push_back(Tensor::zeros(p.value->shape));
            }
        }
    }

    void step(double lr) {
        ++t_;
        if (cfg_.optimizer == OptimizerKind::Sgd) {
            for (auto& p : params_)
                for (std::size_t i = 0; i < p.value->numel(); ++i)
                    p.value->data[i] -= lr * p.grad->data[i];
            return;
        }
        const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
        const double bc1 = 1.0 - std::pow(b1, t_);
        const double bc2 = 1.0 - std::pow(b2, t_);
        for (std::size_t pi = 0; pi < params_.size(); ++pi) {
            auto& p = params_[pi];
            for (std::size_t i = 0; i < p.value->numel(); ++i) {
                const double g = p.grad->data[i];
                m_[pi][i] = b1 * m_[pi][i] + (1.0 - b1) * g;
                v_[pi][i] = b2 * v_[pi][i] + (1.0 - b2) * g * g;
                const double mhat = m_[pi][i] / bc1;
                const double vhat = v_[pi][i] / bc2;
                p.value->data[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
            }
        }
    }

private:
    TrainConfig cfg_;
    std::vector<NamedParam> params_;
    std::vector<Tensor> m_, v_;
    int t_ = 0;
};

inline Tensor gather_batch(const Dataset& data, const std::vector<std::size_t>& order,
                           std::size_t begin, std::size_t end) {
    const std::size_t H = data.images.dim(1), W = data.images.dim(2),
                      C = data.images.dim(3);
    const std::size_t stride = H * W * C;
    Tensor batch = Tensor::zeros({end - begin, H, W, C});
    for (std::size_t i = begin; i < end; ++i)
        std::copy(data.images.data.data() + order[i] * stride,
                  data.images.data.data() + (order[i] + 1) * stride,
                  batch.data.data() + (i - begin) * stride);
    return batch;
}

// Eval-mode predictions for the whole dataset, batched.
inline std::vector<int> predict(const Model& model, const Dataset& data,
                                const hrr::Codebook* book, int batch_size = 64) {
    std::vector<int> preds;
    preds.reserve(data.size());
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t begin = 0; begin < data.size();
         begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end =
            std::min(data.size(), begin + static_cast<std::size_t>(batch_size));
        const Tensor out = model.forward(gather_batch(data, order, begin, end),
                                         /*train=*/false, nullptr, nullptr);
        if (model.spec().head == HeadKind::Hrr) {
            if (!book) throw ValidationError("predict: feature head needs a codebook");
            const auto dec = hrr::decode(hrr::BatchPrediction{out}, *book);
            preds.insert(preds.end(), dec.argmax.begin(), dec.argmax.end());
        } else {
            const std::size_t C = out.dim(1);
            for (std::size_t i = 0; i < out.dim(0); ++i) {
                const double* row = out.data.data() + i * C;
                preds.push_back(static_cast<int>(
                    std::max_element(row, row + C) - row));
            }
        }
    }
    return preds;
}

inline double accuracy_of(const std::vector<int>& preds, const std::vector<int>& labels) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (preds[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

// One full run. Shuffle order for epoch e comes from seed ^ e; dropout
// masks come from an independent fork of the same epoch stream.
inline std::vector<EpochStats> train(Model& model, const Dataset& data,
                                     const TrainConfig& cfg,
                                     const hrr::Codebook* book) {
    cfg.validate();
    const int num_classes = model.spec().head == HeadKind::Hrr
                                ? (book ? book->num_classes : 0)
                                : model.spec().head_width;
    if (model.spec().head == HeadKind::Hrr && !book)
        throw ValidationError("train: feature head needs a codebook");
    data.validate(num_classes);

    std::vector<EpochStats> log;
    Optimizer opt(cfg, model.params());
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(cfg.lr_schedule, epoch);
        CounterRng epoch_rng(cfg.seed ^ static_cast<std::uint64_t>(epoch));
        CounterRng shuffle_rng = epoch_rng.fork(1);
        CounterRng dropout_rng = epoch_rng.fork(2);
        std::iota(order.begin(), order.end(), 0);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::vector<LayerCache> caches;
        for (std::size_t begin = 0; begin < data.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(
                data.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            const Tensor batch = gather_batch(data, order, begin, end);
            std::vector<int> labels;
            for (std::size_t i = begin; i < end; ++i)
                labels.push_back(data.labels[order[i]]);

            model.zero_grads();
            Tensor out;
            try {
                out = model.forward(batch, /*train=*/true, &dropout_rng, &caches);
            } catch (const NonFiniteActivation& e) {
                throw TrainingDiverged(epoch, std::string(e.what()) + " at epoch " +
                                                  std::to_string(epoch));
            }
            hrr::LossValue lv;
            if (cfg.loss == LossKind::Hrr) {
                lv = hrr::hrr_loss(hrr::BatchPrediction{out}, labels, *book,
                                   cfg.hrr_kind);
            } else {
                lv = hrr::ce_loss(out, labels);
            }
            if (!std::isfinite(lv.loss))
                throw TrainingDiverged(epoch, "non-finite loss at epoch " +
                                                  std::to_string(epoch));
            loss_sum += cfg.loss == LossKind::Hrr
                            ? lv.loss
                            : lv.loss * static_cast<double>(end - begin);
            model.backward(lv.grad, caches);
            opt.step(lr);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.loss = loss_sum / static_cast<double>(data.size());
        try {
            stats.accuracy = accuracy_of(predict(model, data, book), data.labels);
        } catch (const NonFiniteActivation& e) {
            throw TrainingDiverged(epoch, std::string(e.what()) + " at epoch " +
                                              std::to_string(epoch));
        }
        log.push_back(stats);
        if (cfg.stop_at_accuracy > 0.0 && stats.accuracy >= cfg.stop_at_accuracy)
            break;
    }
    return log;
}

}  // namespace holosub::nn
