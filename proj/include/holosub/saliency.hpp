#pragma once

// Vanilla gradient saliency: the absolute input-pixel gradient of the
// winning class score, max-normalized per image. For the logit head the
// score is the winning logit; for the feature head it is the winning
// cosine similarity, differentiated through the unbinding chain.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "holosub/codebook.hpp"
#include "holosub/datagen.hpp"
#include "holosub/errors.hpp"
#include "holosub/loss.hpp"
#include "holosub/model.hpp"
#include "holosub/pgm.hpp"

namespace holosub::saliency {

using data::ImageGray;
using hrr::Codebook;
using nn::Model;
using nn::Tensor;

// d(cosine(values[c], bind(yhat, inv_keys[c])))/d(yhat). The convolution
// adjoint is correlation, i.e. binding with the index-reversed factor.
inline hrr::HrrVector similarity_gradient(const hrr::HrrVector& yhat,
                                          const Codebook& book, int c) {
    const hrr::HrrVector& w = book.inv_keys[static_cast<std::size_t>(c)];
    const hrr::HrrVector& v = book.values[static_cast<std::size_t>(c)];
    const hrr::HrrVector u = hrr::bind(yhat, w);
    const double nu = u.norm2();
    const double nv = v.norm2();
    if (nu < hrr::kNormFloor || nv < hrr::kNormFloor)
        throw ZeroNorm("similarity_gradient: degenerate estimate");
    double dot = 0.0;
    for (std::size_t i = 0; i < u.dim(); ++i) dot += u[i] * v[i];
    const double s = dot / (nu * nv);
    std::vector<double> gu(u.dim());
    for (std::size_t i = 0; i < u.dim(); ++i)
        gu[i] = v[i] / (nv * nu) - s * u[i] / (nu * nu);
    return hrr::bind(hrr::HrrVector(std::move(gu)), hrr::pseudo_inverse(w));
}

struct SaliencyResult {
    ImageGray map;        // values in [0,1]; max 1 unless identically zero
    int predicted = 0;    // class index
    double score = 0.0;   // winning logit or cosine
    ImageGray raw_grad;   // |gradient| before normalization
};

// `image` values in [0,1]; the model must be in eval mode semantics (no
// dropout is applied on this path).
inline SaliencyResult saliency_map(Model& model, const ImageGray& image,
                                   const Codebook* book) {
    const auto& spec = model.spec();
    if (image.height != spec.input_h || image.width != spec.input_w)
        throw ValidationError("saliency_map: image does not match model input");
    Tensor batch = Tensor::zeros({1, static_cast<std::size_t>(image.height),
                                  static_cast<std::size_t>(image.width), 1});
    batch.data = image.pixels;

    std::vector<nn::LayerCache> caches;
    const Tensor out = model.forward(batch, /*train=*/false, nullptr, &caches);

    SaliencyResult result;
    Tensor score_grad = Tensor::zeros(out.shape);
    if (spec.head == nn::HeadKind::Hrr) {
        if (!book) throw ValidationError("saliency_map: feature head needs a codebook");
        const auto dec = hrr::decode(hrr::BatchPrediction{out}, *book);
        result.predicted = dec.argmax[0];
        result.score = dec.scores.at(0, static_cast<std::size_t>(result.predicted));
        const hrr::HrrVector yhat(
            std::vector<double>(out.data.begin(), out.data.end()));
        const hrr::HrrVector g = similarity_gradient(yhat, *book, result.predicted);
        for (std::size_t i = 0; i < g.dim(); ++i) score_grad[i] = g[i];
    } else {
        const double* row = out.data.data();
        int best = 0;
        for (std::size_t c = 1; c < out.dim(1); ++c)
            if (row[c] > row[best]) best = static_cast<int>(c);
        result.predicted = best;
        result.score = row[best];
        score_grad[static_cast<std::size_t>(best)] = 1.0;
    }

    const Tensor input_grad = model.backward(score_grad, caches);
    model.zero_grads();
    result.raw_grad.height = image.height;
    result.raw_grad.width = image.width;
    result.raw_grad.pixels.resize(input_grad.numel());
    double max_abs = 0.0;
    for (std::size_t i = 0; i < input_grad.numel(); ++i) {
        const double a = std::abs(input_grad[i]);
        if (!std::isfinite(a))
            throw DivergedGradient("saliency_map: non-finite input gradient");
        result.raw_grad.pixels[i] = a;
        max_abs = std::max(max_abs, a);
    }
    result.map = result.raw_grad;
    if (max_abs > 0.0)
        for (double& v : result.map.pixels) v /= max_abs;
    return result;
}

// Fraction of saliency mass lying within `band` px of any object boundary.
inline double boundary_mass_ratio(const ImageGray& map, const data::SceneSpec& scene,
                                  double band = 3.0) {
    double total = 0.0, near = 0.0;
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            const double v = map.at(y, x);
            total += v;
            const double px = x + 0.5, py = y + 0.5;
            for (const auto& o : scene.objects) {
                if (data::geom::boundary_distance(o, px, py) <= band) {
                    near += v;
                    break;
                }
            }
        }
    return total > 0.0 ? near / total : 0.0;
}

inline void write_saliency_pgm(const std::string& path, const ImageGray& map) {
    PgmImage pgm;
    pgm.height = map.height;
    pgm.width = map.width;
    pgm.pixels.resize(map.pixels.size());
    for (std::size_t i = 0; i < map.pixels.size(); ++i)
        pgm.pixels[i] = static_cast<std::uint8_t>(
            std::lround(255.0 * std::clamp(map.pixels[i], 0.0, 1.0)));
    write_pgm(path, pgm);
}

}  // namespace holosub::saliency
