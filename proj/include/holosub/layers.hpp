#pragma once

// Differentiable layers with explicit forward/backward passes. Forward is
// const and writes what backward needs into an external cache, so eval-mode
// inference is safe for concurrent batches. Backward accumulates parameter
// gradients inside the layer (training is single-writer).
//
// All parallel loops partition output elements; every element is computed
// start to finish by one thread in a fixed inner order, keeping results
// bitwise identical for any worker count.

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "holosub/errors.hpp"
#include "holosub/parallel.hpp"
#include "holosub/rng.hpp"
#include "holosub/tensor.hpp"

namespace holosub::nn {

struct LayerCache {
    std::vector<Tensor> t;
    std::vector<LayerCache> children;
};

struct NamedParam {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string name() const = 0;
    virtual Tensor forward(const Tensor& x, bool train, CounterRng* rng,
                           LayerCache* cache) const = 0;
    virtual Tensor backward(const Tensor& gy, const LayerCache& cache) = 0;
    virtual void collect_params(std::vector<NamedParam>& out) {}
    virtual void init(CounterRng& rng) {}
    virtual void zero_grads() {}
};

namespace detail {

inline void init_uniform_fanin(Tensor& t, std::size_t fan_in, CounterRng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& x : t.data) x = rng.next_range(-s, s);
}

// C[M,N] = A[M,K] * B[K,N]; rows of C are partitioned across threads.
inline void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
                      std::size_t k, std::size_t n) {
    parallel_for(m, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            double* crow = c + r * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
            const double* arow = a + r * k;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = arow[p];
                const double* brow = b + p * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    });
}

// C[M,N] = A[M,K] * B^T where B is [N,K].
inline void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
                      std::size_t k, std::size_t n) {
    parallel_for(m, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            const double* arow = a + r * k;
            double* crow = c + r * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double* brow = b + j * k;
                double acc = 0.0;
                for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
                crow[j] = acc;
            }
        }
    });
}

// C[M,N] += A^T[M,K'] ... specifically C = A^T * B with A [K,M], B [K,N];
// used for weight gradients; rows of C are partitioned (deterministic).
inline void matmul_tn_add(const double* a, const double* b, double* c,
                          std::size_t k, std::size_t m, std::size_t n) {
    parallel_for(m, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            double* crow = c + r * n;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = a[p * m + r];
                const double* brow = b + p * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    });
}

}  // namespace detail

// Affine map on the last axis: [..., In] -> [..., Out]. Leading axes are
// flattened into a row dimension.
class Dense : public Layer {
public:
    Dense(std::string id, std::size_t in, std::size_t out)
        : id_(std::move(id)), in_(in), out_(out) {
        w_ = Tensor::zeros({out, in});
        b_ = Tensor::zeros({out});
        gw_ = Tensor::zeros({out, in});
        gb_ = Tensor::zeros({out});
    }

    std::string name() const override { return id_; }

    void init(CounterRng& rng) override {
        detail::init_uniform_fanin(w_, in_, rng);
        b_.fill(0.0);
    }

    Tensor forward(const Tensor& x, bool, CounterRng*, LayerCache* cache) const override {
        if (x.shape.back() != in_)
            throw ValidationError(id_ + ": input width " +
                                  std::to_string(x.shape.back()) + ", expected " +
                                  std::to_string(in_));
        const std::size_t rows = x.numel() / in_;
        std::vector<std::size_t> out_shape = x.shape;
        out_shape.back() = out_;
        Tensor y = Tensor::zeros(out_shape);
        detail::matmul_nt(x.data.data(), w_.data.data(), y.data.data(), rows, in_,
                          out_);
        parallel_for(rows, [&](std::size_t r0, std::size_t r1) {
            for (std::size_t r = r0; r < r1; ++r)
                for (std::size_t j = 0; j < out_; ++j)
                    y.data[r * out_ + j] += b_[j];
        });
        if (cache) cache->t = {x};
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        const Tensor& x = cache.t.at(0);
        const std::size_t rows = x.numel() / in_;
        // gW[o,i] += sum_r gy[r,o] x[r,i]
        detail::matmul_tn_add(gy.data.data(), x.data.data(), gw_.data.data(), rows,
                              out_, in_);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < out_; ++j) gb_[j] += gy.data[r * out_ + j];
        Tensor gx = Tensor::zeros(x.shape);
        detail::matmul_nn(gy.data.data(), w_.data.data(), gx.data.data(), rows, out_,
                          in_);
        return gx;
    }

    void collect_params(std::vector<NamedParam>& out) override {
        out.push_back({id_ + ".w", &w_, &gw_});
        out.push_back({id_ + ".b", &b_, &gb_});
    }

    void zero_grads() override {
        gw_.fill(0.0);
        gb_.fill(0.0);
    }

    std::size_t fan_in() const { return in_; }
    Tensor& weight() { return w_; }
    Tensor& bias() { return b_; }

private:
    std::string id_;
    std::size_t in_, out_;
    Tensor w_, b_, gw_, gb_;
};

// 2-D convolution over NHWC input, zero 'same' padding, square kernel.
class Conv2D : public Layer {
public:
    Conv2D(std::string id, std::size_t in_c, std::size_t out_c, std::size_t kernel,
           std::size_t stride)
        : id_(std::move(id)), in_c_(in_c), out_c_(out_c), k_(kernel), stride_(stride) {
        if (k_ % 2 == 0) throw ValidationError(id_ + ": kernel must be odd");
        if (stride_ < 1) throw ValidationError(id_ + ": stride must be >= 1");
        w_ = Tensor::zeros({k_, k_, in_c_, out_c_});
        b_ = Tensor::zeros({out_c_});
        gw_ = Tensor::zeros({k_, k_, in_c_, out_c_});
        gb_ = Tensor::zeros({out_c_});
    }

    std::string name() const override { return id_; }

    void init(CounterRng& rng) override {
        detail::init_uniform_fanin(w_, k_ * k_ * in_c_, rng);
        b_.fill(0.0);
    }

    Tensor forward(const Tensor& x, bool, CounterRng*, LayerCache* cache) const override {
        check_input(x);
        const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2);
        const std::size_t pad = (k_ - 1) / 2;
        const std::size_t oh = (H + 2 * pad - k_) / stride_ + 1;
        const std::size_t ow = (W + 2 * pad - k_) / stride_ + 1;
        Tensor padded = pad_input(x);
        Tensor y = Tensor::zeros({B, oh, ow, out_c_});
        const std::size_t ph = H + 2 * pad, pw = W + 2 * pad;
        const std::size_t window = k_ * in_c_;
        parallel_for(B, [&](std::size_t b0, std::size_t b1) {
            std::vector<double> acc_buf(out_c_);
            double* __restrict__ acc = acc_buf.data();
            const double* __restrict__ wbase = w_.data.data();
            const double* __restrict__ bias = b_.data.data();
            for (std::size_t b = b0; b < b1; ++b) {
                const double* img = padded.data.data() + b * ph * pw * in_c_;
                for (std::size_t y0 = 0; y0 < oh; ++y0) {
                    for (std::size_t x0 = 0; x0 < ow; ++x0) {
                        for (std::size_t co = 0; co < out_c_; ++co) acc[co] = bias[co];
                        for (std::size_t kh = 0; kh < k_; ++kh) {
                            const double* __restrict__ row =
                                img + ((y0 * stride_ + kh) * pw + x0 * stride_) * in_c_;
                            const double* __restrict__ wrow = wbase + kh * window * out_c_;
                            for (std::size_t t = 0; t < window; ++t) {
                                const double v = row[t];
                                const double* __restrict__ wvec = wrow + t * out_c_;
                                for (std::size_t co = 0; co < out_c_; ++co)
                                    acc[co] += v * wvec[co];
                            }
                        }
                        double* dst = y.data.data() +
                                      ((b * oh + y0) * ow + x0) * out_c_;
                        for (std::size_t co = 0; co < out_c_; ++co) dst[co] = acc[co];
                    }
                }
            }
        });
        if (cache) cache->t = {padded, Tensor({4}, {double(B), double(H), double(W), 0.0})};
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        const Tensor& padded = cache.t.at(0);
        const std::size_t B = static_cast<std::size_t>(cache.t.at(1)[0]);
        const std::size_t H = static_cast<std::size_t>(cache.t.at(1)[1]);
        const std::size_t W = static_cast<std::size_t>(cache.t.at(1)[2]);
        const std::size_t pad = (k_ - 1) / 2;
        const std::size_t ph = H + 2 * pad, pw = W + 2 * pad;
        const std::size_t oh = gy.dim(1), ow = gy.dim(2);

        // Weight gradients: each thread owns a slice of output channels and
        // scans the whole batch in index order.
        parallel_for(out_c_, [&](std::size_t c0, std::size_t c1) {
            for (std::size_t co = c0; co < c1; ++co) {
                double gbias = 0.0;
                std::vector<double> acc(k_ * k_ * in_c_, 0.0);
                for (std::size_t b = 0; b < B; ++b) {
                    const double* img = padded.data.data() + b * ph * pw * in_c_;
                    for (std::size_t y0 = 0; y0 < oh; ++y0)
                        for (std::size_t x0 = 0; x0 < ow; ++x0) {
                            const double go =
                                gy.data[((b * oh + y0) * ow + x0) * out_c_ + co];
                            if (go == 0.0) continue;
                            gbias += go;
                            for (std::size_t kh = 0; kh < k_; ++kh) {
                                const double* __restrict__ row =
                                    img + ((y0 * stride_ + kh) * pw + x0 * stride_) *
                                              in_c_;
                                double* __restrict__ arow = acc.data() + kh * k_ * in_c_;
                                for (std::size_t t = 0; t < k_ * in_c_; ++t)
                                    arow[t] += go * row[t];
                            }
                        }
                }
                // gbias collected via the same co-sliced pass
                gb_[co] += gbias;
                for (std::size_t t = 0; t < acc.size(); ++t)
                    gw_.data[t * out_c_ + co] += acc[t];
            }
        });

        // Data gradient, partitioned by batch image.
        Tensor gx = Tensor::zeros({B, H, W, in_c_});
        parallel_for(B, [&](std::size_t b0, std::size_t b1) {
            std::vector<double> gpad(ph * pw * in_c_);
            for (std::size_t b = b0; b < b1; ++b) {
                std::fill(gpad.begin(), gpad.end(), 0.0);
                for (std::size_t y0 = 0; y0 < oh; ++y0)
                    for (std::size_t x0 = 0; x0 < ow; ++x0) {
                        const double* go = gy.data.data() +
                                           ((b * oh + y0) * ow + x0) * out_c_;
                        for (std::size_t kh = 0; kh < k_; ++kh) {
                            double* row = gpad.data() +
                                          ((y0 * stride_ + kh) * pw + x0 * stride_) *
                                              in_c_;
                            const double* wrow =
                                w_.data.data() + kh * k_ * in_c_ * out_c_;
                            for (std::size_t t = 0; t < k_ * in_c_; ++t) {
                                const double* __restrict__ wvec = wrow + t * out_c_;
                                double acc = 0.0;
                                for (std::size_t co = 0; co < out_c_; ++co)
                                    acc += go[co] * wvec[co];
                                row[t] += acc;
                            }
                        }
                    }
                for (std::size_t yy = 0; yy < H; ++yy)
                    for (std::size_t xx = 0; xx < W; ++xx)
                        for (std::size_t ci = 0; ci < in_c_; ++ci)
                            gx.data[((b * H + yy) * W + xx) * in_c_ + ci] =
                                gpad[((yy + pad) * pw + (xx + pad)) * in_c_ + ci];
            }
        });
        return gx;
    }

    void collect_params(std::vector<NamedParam>& out) override {
        out.push_back({id_ + ".w", &w_, &gw_});
        out.push_back({id_ + ".b", &b_, &gb_});
    }

    void zero_grads() override {
        gw_.fill(0.0);
        gb_.fill(0.0);
    }

private:
    void check_input(const Tensor& x) const {
        if (x.ndim() != 4 || x.dim(3) != in_c_)
            throw ValidationError(id_ + ": expected NHWC input with C=" +
                                  std::to_string(in_c_) + ", got " + shape_str(x));
    }

    Tensor pad_input(const Tensor& x) const {
        const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2);
        const std::size_t pad = (k_ - 1) / 2;
        const std::size_t ph = H + 2 * pad, pw = W + 2 * pad;
        Tensor padded = Tensor::zeros({B, ph, pw, in_c_});
        parallel_for(B, [&](std::size_t b0, std::size_t b1) {
            for (std::size_t b = b0; b < b1; ++b)
                for (std::size_t yy = 0; yy < H; ++yy) {
                    const double* src = x.data.data() + ((b * H + yy) * W) * in_c_;
                    double* dst = padded.data.data() +
                                  ((b * ph + yy + pad) * pw + pad) * in_c_;
                    std::copy(src, src + W * in_c_, dst);
                }
        });
        return padded;
    }

    std::string id_;
    std::size_t in_c_, out_c_, k_, stride_;
    Tensor w_, b_, gw_, gb_;
};

class Relu : public Layer {
public:
    explicit Relu(std::string id) : id_(std::move(id)) {}
    std::string name() const override { return id_; }

    Tensor forward(const Tensor& x, bool, CounterRng*, LayerCache* cache) const override {
        Tensor y = x;
        for (double& v : y.data) v = v > 0.0 ? v : 0.0;
        if (cache) cache->t = {x};
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        const Tensor& x = cache.t.at(0);
        Tensor gx = gy;
        for (std::size_t i = 0; i < gx.numel(); ++i)
            if (x[i] <= 0.0) gx[i] = 0.0;
        return gx;
    }

private:
    std::string id_;
};

class Tanh : public Layer {
public:
    explicit Tanh(std::string id) : id_(std::move(id)) {}
    std::string name() const override { return id_; }

    Tensor forward(const Tensor& x, bool, CounterRng*, LayerCache* cache) const override {
        Tensor y = x;
        for (double& v : y.data) v = std::tanh(v);
        if (cache) cache->t = {y};
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        const Tensor& y = cache.t.at(0);
        Tensor gx = gy;
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] *= 1.0 - y[i] * y[i];
        return gx;
    }

private:
    std::string id_;
};

class Gelu : public Layer {
public:
    explicit Gelu(std::string id) : id_(std::move(id)) {}
    std::string name() const override { return id_; }

    Tensor forward(const Tensor& x, bool, CounterRng*, LayerCache* cache) const override {
        Tensor y = x;
        for (double& v : y.data) v = v * phi(v);
        if (cache) cache->t = {x};
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        const Tensor& x = cache.t.at(0);
        Tensor gx = gy;
        for (std::size_t i = 0; i < gx.numel(); ++i) {
            const double v = x[i];
            const double pdf = std::exp(-0.5 * v * v) /
                               std::sqrt(2.0 * std::numbers::pi);
            gx[i] *= phi(v) + v * pdf;
        }
        return gx;
    }

private:
    static double phi(double v) { return 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2)); }
    std::string id_;
};

// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
class MaxPool2 : public Layer {
public:
    explicit MaxPool2(std::string id) : id_(std::move(id)) {}
    std::string name() const override { return id_; }

    Tensor forward(const Tensor& x, bool, CounterRng*, LayerCache* cache) const override {
        if (x.ndim() != 4) throw ValidationError(id_ + ": expected NHWC input");
        const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
        const std::size_t oh = H / 2, ow = W / 2;
        Tensor y = Tensor::zeros({B, oh, ow, C});
        Tensor arg = Tensor::zeros({B, oh, ow, C});
        parallel_for(B, [&](std::size_t b0, std::size_t b1) {
            for (std::size_t b = b0; b < b1; ++b)
                for (std::size_t yy = 0; yy < oh; ++yy)
                    for (std::size_t xx = 0; xx < ow; ++xx)
                        for (std::size_t c = 0; c < C; ++c) {
                            double best = -1e308;
                            std::size_t best_idx = 0;
                            for (std::size_t dy = 0; dy < 2; ++dy)
                                for (std::size_t dx = 0; dx < 2; ++dx) {
                                    const std::size_t idx =
                                        ((b * H + 2 * yy + dy) * W + 2 * xx + dx) * C + c;
                                    if (x[idx] > best) {
                                        best = x[idx];
                                        best_idx = idx;
                                    }
                                }
                            const std::size_t oidx = ((b * oh + yy) * ow + xx) * C + c;
                            y[oidx] = best;
                            arg[oidx] = static_cast<double>(best_idx);
                        }
        });
        if (cache) {
            cache->t = {arg, Tensor({4}, {double(B), double(H), double(W), double(C)})};
        }
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        const Tensor& arg = cache.t.at(0);
        const Tensor& dims = cache.t.at(1);
        Tensor gx = Tensor::zeros({static_cast<std::size_t>(dims[0]),
                                   static_cast<std::size_t>(dims[1]),
                                   static_cast<std::size_t>(dims[2]),
                                   static_cast<std::size_t>(dims[3])});
        for (std::size_t i = 0; i < gy.numel(); ++i)
            gx[static_cast<std::size_t>(arg[i])] += gy[i];
        return gx;
    }

private:
    std::string id_;
};

class Flatten : public Layer {
public:
    explicit Flatten(std::string id) : id_(std::move(id)) {}
    std::string name() const override { return id_; }

    Tensor forward(const Tensor& x, bool, CounterRng*, LayerCache* cache) const override {
        const std::size_t B = x.dim(0);
        Tensor y = x;
        y.shape = {B, x.numel() / B};
        if (cache) cache->t = {Tensor({x.ndim()}, shape_as_doubles(x))};
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        Tensor gx = gy;
        gx.shape.clear();
        for (double d : cache.t.at(0).data)
            gx.shape.push_back(static_cast<std::size_t>(d));
        return gx;
    }

private:
    static std::vector<double> shape_as_doubles(const Tensor& x) {
        std::vector<double> s;
        for (std::size_t d : x.shape) s.push_back(static_cast<double>(d));
        return s;
    }
    std::string id_;
};

// Inverted dropout: train mode zeroes activations with probability p and
// scales survivors by 1/(1-p); eval mode is the identity.
class Dropout : public Layer {
public:
    Dropout(std::string id, double rate) : id_(std::move(id)), rate_(rate) {
        if (rate_ < 0.0 || rate_ >= 1.0)
            throw ValidationError(id_ + ": dropout rate must be in [0,1)");
    }
    std::string name() const override { return id_; }

    Tensor forward(const Tensor& x, bool train, CounterRng* rng,
                   LayerCache* cache) const override {
        if (!train || rate_ == 0.0) {
            if (cache) cache->t = {};
            return x;
        }
        if (!rng) throw ValidationError(id_ + ": train-mode dropout needs an rng");
        Tensor mask = Tensor::zeros(x.shape);
        const double scale = 1.0 / (1.0 - rate_);
        Tensor y = x;
        for (std::size_t i = 0; i < x.numel(); ++i) {
            const bool keep = rng->next_unit() >= rate_;
            mask[i] = keep ? scale : 0.0;
            y[i] *= mask[i];
        }
        if (cache) cache->t = {mask};
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        if (cache.t.empty()) return gy;  // eval-mode forward
        const Tensor& mask = cache.t.at(0);
        Tensor gx = gy;
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] *= mask[i];
        return gx;
    }

private:
    std::string id_;
    double rate_;
};

// [B,H,W,C] -> [B,T,P*P*C] patch tokens in row-major patch order.
class Patchify : public Layer {
public:
    Patchify(std::string id, std::size_t patch) : id_(std::move(id)), patch_(patch) {}
    std::string name() const override { return id_; }

    Tensor forward(const Tensor& x, bool, CounterRng*, LayerCache* cache) const override {
        if (x.ndim() != 4) throw ValidationError(id_ + ": expected NHWC input");
        const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
        if (H % patch_ != 0 || W % patch_ != 0)
            throw ValidationError(id_ + ": patch size must divide image sides");
        const std::size_t th = H / patch_, tw = W / patch_;
        const std::size_t T = th * tw, D = patch_ * patch_ * C;
        Tensor y = Tensor::zeros({B, T, D});
        parallel_for(B, [&](std::size_t b0, std::size_t b1) {
            for (std::size_t b = b0; b < b1; ++b)
                for (std::size_t ty = 0; ty < th; ++ty)
                    for (std::size_t tx = 0; tx < tw; ++tx) {
                        double* dst = y.data.data() + ((b * T + ty * tw + tx) * D);
                        for (std::size_t py = 0; py < patch_; ++py)
                            for (std::size_t px = 0; px < patch_; ++px)
                                for (std::size_t c = 0; c < C; ++c)
                                    *dst++ = x[((b * H + ty * patch_ + py) * W +
                                                tx * patch_ + px) * C + c];
                    }
        });
        if (cache)
            cache->t = {Tensor({4}, {double(B), double(H), double(W), double(C)})};
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        const Tensor& dims = cache.t.at(0);
        const std::size_t B = static_cast<std::size_t>(dims[0]);
        const std::size_t H = static_cast<std::size_t>(dims[1]);
        const std::size_t W = static_cast<std::size_t>(dims[2]);
        const std::size_t C = static_cast<std::size_t>(dims[3]);
        const std::size_t th = H / patch_, tw = W / patch_;
        const std::size_t T = th * tw, D = patch_ * patch_ * C;
        Tensor gx = Tensor::zeros({B, H, W, C});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t ty = 0; ty < th; ++ty)
                for (std::size_t tx = 0; tx < tw; ++tx) {
                    const double* src = gy.data.data() + ((b * T + ty * tw + tx) * D);
                    for (std::size_t py = 0; py < patch_; ++py)
                        for (std::size_t px = 0; px < patch_; ++px)
                            for (std::size_t c = 0; c < C; ++c)
                                gx[((b * H + ty * patch_ + py) * W + tx * patch_ +
                                    px) * C + c] = *src++;
                }
        return gx;
    }

private:
    std::string id_;
    std::size_t patch_;
};

// Learned additive positional embedding over [B,T,E].
class PositionalEmbedding : public Layer {
public:
    PositionalEmbedding(std::string id, std::size_t tokens, std::size_t embed)
        : id_(std::move(id)), tokens_(tokens), embed_(embed) {
        e_ = Tensor::zeros({tokens, embed});
        ge_ = Tensor::zeros({tokens, embed});
    }
    std::string name() const override { return id_; }

    void init(CounterRng& rng) override { detail::init_uniform_fanin(e_, embed_, rng); }

    Tensor forward(const Tensor& x, bool, CounterRng*, LayerCache*) const override {
        if (x.ndim() != 3 || x.dim(1) != tokens_ || x.dim(2) != embed_)
            throw ValidationError(id_ + ": expected [B," + std::to_string(tokens_) +
                                  "," + std::to_string(embed_) + "], got " +
                                  shape_str(x));
        Tensor y = x;
        const std::size_t B = x.dim(0);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < tokens_ * embed_; ++i)
                y[b * tokens_ * embed_ + i] += e_[i];
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache&) override {
        const std::size_t B = gy.dim(0);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < tokens_ * embed_; ++i)
                ge_[i] += gy[b * tokens_ * embed_ + i];
        return gy;
    }

    void collect_params(std::vector<NamedParam>& out) override {
        out.push_back({id_ + ".e", &e_, &ge_});
    }
    void zero_grads() override { ge_.fill(0.0); }

private:
    std::string id_;
    std::size_t tokens_, embed_;
    Tensor e_, ge_;
};

// Layer normalization over the last axis with learned scale and shift.
class LayerNorm : public Layer {
public:
    LayerNorm(std::string id, std::size_t dim) : id_(std::move(id)), dim_(dim) {
        gamma_ = Tensor::zeros({dim});
        beta_ = Tensor::zeros({dim});
        ggamma_ = Tensor::zeros({dim});
        gbeta_ = Tensor::zeros({dim});
        gamma_.fill(1.0);
    }
    std::string name() const override { return id_; }

    static constexpr double kEps = 1e-5;

    Tensor forward(const Tensor& x, bool, CounterRng*, LayerCache* cache) const override {
        if (x.shape.back() != dim_)
            throw ValidationError(id_ + ": width mismatch");
        const std::size_t rows = x.numel() / dim_;
        Tensor xhat = Tensor::zeros(x.shape);
        Tensor inv_sigma = Tensor::zeros({rows});
        Tensor y = Tensor::zeros(x.shape);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* xr = x.data.data() + r * dim_;
            double mean = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) mean += xr[j];
            mean /= static_cast<double>(dim_);
            double var = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) {
                const double d = xr[j] - mean;
                var += d * d;
            }
            var /= static_cast<double>(dim_);
            const double inv = 1.0 / std::sqrt(var + kEps);
            inv_sigma[r] = inv;
            for (std::size_t j = 0; j < dim_; ++j) {
                const double h = (xr[j] - mean) * inv;
                xhat.data[r * dim_ + j] = h;
                y.data[r * dim_ + j] = gamma_[j] * h + beta_[j];
            }
        }
        if (cache) cache->t = {xhat, inv_sigma};
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        const Tensor& xhat = cache.t.at(0);
        const Tensor& inv_sigma = cache.t.at(1);
        const std::size_t rows = gy.numel() / dim_;
        Tensor gx = Tensor::zeros(gy.shape);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* g = gy.data.data() + r * dim_;
            const double* h = xhat.data.data() + r * dim_;
            double mean_gh = 0.0, mean_ghh = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) {
                const double gh = g[j] * gamma_[j];
                mean_gh += gh;
                mean_ghh += gh * h[j];
                ggamma_[j] += g[j] * h[j];
                gbeta_[j] += g[j];
            }
            mean_gh /= static_cast<double>(dim_);
            mean_ghh /= static_cast<double>(dim_);
            for (std::size_t j = 0; j < dim_; ++j) {
                const double gh = g[j] * gamma_[j];
                gx.data[r * dim_ + j] =
                    inv_sigma[r] * (gh - mean_gh - h[j] * mean_ghh);
            }
        }
        return gx;
    }

    void collect_params(std::vector<NamedParam>& out) override {
        out.push_back({id_ + ".gamma", &gamma_, &ggamma_});
        out.push_back({id_ + ".beta", &beta_, &gbeta_});
    }
    void zero_grads() override {
        ggamma_.fill(0.0);
        gbeta_.fill(0.0);
    }

private:
    std::string id_;
    std::size_t dim_;
    Tensor gamma_, beta_, ggamma_, gbeta_;
};

// Scaled dot-product multi-head self-attention over [B,T,E].
class MultiHeadAttention : public Layer {
public:
    MultiHeadAttention(std::string id, std::size_t embed, std::size_t heads)
        : id_(id),
          embed_(embed),
          heads_(heads),
          wq_(id + ".q", embed, embed),
          wk_(id + ".k", embed, embed),
          wv_(id + ".v", embed, embed),
          wo_(id + ".o", embed, embed) {
        if (embed_ % heads_ != 0)
            throw ValidationError(id + ": heads must divide embed dim");
    }
    std::string name() const override { return id_; }

    void init(CounterRng& rng) override {
        wq_.init(rng);
        wk_.init(rng);
        wv_.init(rng);
        wo_.init(rng);
    }

    Tensor forward(const Tensor& x, bool train, CounterRng* rng,
                   LayerCache* cache) const override {
        if (x.ndim() != 3 || x.dim(2) != embed_)
            throw ValidationError(id_ + ": expected [B,T,E]");
        const std::size_t B = x.dim(0), T = x.dim(1);
        const std::size_t dh = embed_ / heads_;
        if (cache) cache->children.resize(4);
        const Tensor q = wq_.forward(x, train, rng, cache ? &cache->children[0] : nullptr);
        const Tensor k = wk_.forward(x, train, rng, cache ? &cache->children[1] : nullptr);
        const Tensor v = wv_.forward(x, train, rng, cache ? &cache->children[2] : nullptr);
        Tensor attn = Tensor::zeros({B, heads_, T, T});
        Tensor ctx = Tensor::zeros({B, T, embed_});
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        parallel_for(B * heads_, [&](std::size_t i0, std::size_t i1) {
            for (std::size_t i = i0; i < i1; ++i) {
                const std::size_t b = i / heads_, h = i % heads_;
                double* arow_base = attn.data.data() + (b * heads_ + h) * T * T;
                for (std::size_t t = 0; t < T; ++t) {
                    const double* qrow = q.data.data() + (b * T + t) * embed_ + h * dh;
                    double* arow = arow_base + t * T;
                    double mx = -1e308;
                    for (std::size_t u = 0; u < T; ++u) {
                        const double* krow =
                            k.data.data() + (b * T + u) * embed_ + h * dh;
                        double dot = 0.0;
                        for (std::size_t j = 0; j < dh; ++j) dot += qrow[j] * krow[j];
                        arow[u] = dot * scale;
                        mx = std::max(mx, arow[u]);
                    }
                    double denom = 0.0;
                    for (std::size_t u = 0; u < T; ++u) {
                        arow[u] = std::exp(arow[u] - mx);
                        denom += arow[u];
                    }
                    for (std::size_t u = 0; u < T; ++u) arow[u] /= denom;
                    double* crow = ctx.data.data() + (b * T + t) * embed_ + h * dh;
                    for (std::size_t u = 0; u < T; ++u) {
                        const double a = arow[u];
                        const double* vrow =
                            v.data.data() + (b * T + u) * embed_ + h * dh;
                        for (std::size_t j = 0; j < dh; ++j) crow[j] += a * vrow[j];
                    }
                }
            }
        });
        Tensor y = wo_.forward(ctx, train, rng, cache ? &cache->children[3] : nullptr);
        if (cache) cache->t = {q, k, v, attn};
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        const Tensor& q = cache.t.at(0);
        const Tensor& k = cache.t.at(1);
        const Tensor& v = cache.t.at(2);
        const Tensor& attn = cache.t.at(3);
        const std::size_t B = q.dim(0), T = q.dim(1);
        const std::size_t dh = embed_ / heads_;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

        const Tensor gctx = wo_.backward(gy, cache.children.at(3));
        Tensor gq = Tensor::zeros(q.shape);
        Tensor gk = Tensor::zeros(k.shape);
        Tensor gv = Tensor::zeros(v.shape);
        parallel_for(B * heads_, [&](std::size_t i0, std::size_t i1) {
            std::vector<double> ga(T);
            for (std::size_t i = i0; i < i1; ++i) {
                const std::size_t b = i / heads_, h = i % heads_;
                const double* arow_base = attn.data.data() + (b * heads_ + h) * T * T;
                for (std::size_t t = 0; t < T; ++t) {
                    const double* gc = gctx.data.data() + (b * T + t) * embed_ + h * dh;
                    const double* arow = arow_base + t * T;
                    // dL/dA and the softmax Jacobian product
                    double dot_sum = 0.0;
                    for (std::size_t u = 0; u < T; ++u) {
                        const double* vrow =
                            v.data.data() + (b * T + u) * embed_ + h * dh;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < dh; ++j) acc += gc[j] * vrow[j];
                        ga[u] = acc;
                        dot_sum += acc * arow[u];
                    }
                    const double* qrow = q.data.data() + (b * T + t) * embed_ + h * dh;
                    double* gqrow = gq.data.data() + (b * T + t) * embed_ + h * dh;
                    for (std::size_t u = 0; u < T; ++u) {
                        const double gs = arow[u] * (ga[u] - dot_sum) * scale;
                        const double* krow =
                            k.data.data() + (b * T + u) * embed_ + h * dh;
                        double* gkrow =
                            gk.data.data() + (b * T + u) * embed_ + h * dh;
                        double* gvrow =
                            gv.data.data() + (b * T + u) * embed_ + h * dh;
                        const double a = arow[u];
                        for (std::size_t j = 0; j < dh; ++j) {
                            gqrow[j] += gs * krow[j];
                            gkrow[j] += gs * qrow[j];
                            gvrow[j] += a * gc[j];
                        }
                    }
                }
            }
        });
        Tensor gx = wq_.backward(gq, cache.children.at(0));
        const Tensor gxk = wk_.backward(gk, cache.children.at(1));
        const Tensor gxv = wv_.backward(gv, cache.children.at(2));
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += gxk[i] + gxv[i];
        return gx;
    }

    void collect_params(std::vector<NamedParam>& out) override {
        wq_.collect_params(out);
        wk_.collect_params(out);
        wv_.collect_params(out);
        wo_.collect_params(out);
    }
    void zero_grads() override {
        wq_.zero_grads();
        wk_.zero_grads();
        wv_.zero_grads();
        wo_.zero_grads();
    }

private:
    std::string id_;
    std::size_t embed_, heads_;
    Dense wq_, wk_, wv_, wo_;
};

// Mean over the token axis: [B,T,E] -> [B,E].
class MeanPoolTokens : public Layer {
public:
    explicit MeanPoolTokens(std::string id) : id_(std::move(id)) {}
    std::string name() const override { return id_; }

    Tensor forward(const Tensor& x, bool, CounterRng*, LayerCache* cache) const override {
        if (x.ndim() != 3) throw ValidationError(id_ + ": expected [B,T,E]");
        const std::size_t B = x.dim(0), T = x.dim(1), E = x.dim(2);
        Tensor y = Tensor::zeros({B, E});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t e = 0; e < E; ++e)
                    y[b * E + e] += x[(b * T + t) * E + e] / static_cast<double>(T);
        if (cache) cache->t = {Tensor({1}, {static_cast<double>(T)})};
        return y;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        const std::size_t T = static_cast<std::size_t>(cache.t.at(0)[0]);
        const std::size_t B = gy.dim(0), E = gy.dim(1);
        Tensor gx = Tensor::zeros({B, T, E});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t e = 0; e < E; ++e)
                    gx[(b * T + t) * E + e] = gy[b * E + e] / static_cast<double>(T);
        return gx;
    }

private:
    std::string id_;
};

}  // namespace holosub::nn
