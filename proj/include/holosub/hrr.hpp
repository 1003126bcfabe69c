#pragma once

// Holographic reduced representation algebra over real hypervectors.
// Binding is circular convolution, computed spectrally: the elementwise
// product of DFTs. Projection normalizes every DFT bin to unit magnitude,
// which makes the exact inverse numerically stable and equal to the
// index-reversal pseudo-inverse.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "holosub/errors.hpp"
#include "holosub/rng.hpp"

namespace holosub::hrr {

class HrrVector {
public:
    HrrVector() = default;

    explicit HrrVector(std::vector<double> values) : values_(std::move(values)) {
        validate();
    }

    static HrrVector zeros(std::size_t dim) {
        check_dim(dim);
        return HrrVector(std::vector<double>(dim, 0.0), Unchecked{});
    }

    // Impulse (1, 0, ..., 0): the identity of circular convolution.
    static HrrVector delta(std::size_t dim) {
        check_dim(dim);
        std::vector<double> v(dim, 0.0);
        v[0] = 1.0;
        return HrrVector(std::move(v), Unchecked{});
    }

    std::size_t dim() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    double norm2() const {
        double s = 0.0;
        for (double x : values_) s += x * x;
        return std::sqrt(s);
    }

    friend HrrVector operator+(const HrrVector& a, const HrrVector& b) {
        if (a.dim() != b.dim())
            throw ValidationError("HrrVector sum: dimension mismatch");
        std::vector<double> out(a.dim());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
        return HrrVector(std::move(out), Unchecked{});
    }

    friend HrrVector operator*(double c, const HrrVector& a) {
        std::vector<double> out(a.dim());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * a[i];
        return HrrVector(std::move(out), Unchecked{});
    }

    struct Unchecked {};
    HrrVector(std::vector<double> values, Unchecked) : values_(std::move(values)) {}

private:
    static void check_dim(std::size_t dim) {
        if (dim < 2)
            throw ValidationError("HrrVector requires dim >= 2, got " +
                                  std::to_string(dim));
    }

    void validate() const {
        check_dim(values_.size());
        for (double x : values_)
            if (!std::isfinite(x))
                throw ValidationError("HrrVector entries must be finite");
    }

    std::vector<double> values_;
};

// Complex spectrum of a d-dimensional vector; bin k of a real input equals
// the conjugate of bin (d - k) mod d.
struct Spectrum {
    std::vector<double> re;
    std::vector<double> im;

    std::size_t dim() const { return re.size(); }

    double magnitude(std::size_t k) const {
        return std::hypot(re[k], im[k]);
    }
};

namespace detail {

// Iterative radix-2 Cooley-Tukey; n must be a power of two.
inline void fft_pow2(std::vector<double>& re, std::vector<double>& im, bool inverse) {
    const std::size_t n = re.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi /
                           static_cast<double>(len);
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (std::size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::size_t a = i + k, b = i + k + len / 2;
                const double tr = re[b] * cr - im[b] * ci;
                const double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

// Direct O(d^2) transform for arbitrary d.
inline void dft_direct(const std::vector<double>& in_re, const std::vector<double>& in_im,
                       std::vector<double>& out_re, std::vector<double>& out_im,
                       bool inverse) {
    const std::size_t n = in_re.size();
    out_re.assign(n, 0.0);
    out_im.assign(n, 0.0);
    const double sign = inverse ? 2.0 : -2.0;
    for (std::size_t k = 0; k < n; ++k) {
        double sr = 0.0, si = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = sign * std::numbers::pi *
                               static_cast<double>((k * j) % n) / static_cast<double>(n);
            const double c = std::cos(ang), s = std::sin(ang);
            sr += in_re[j] * c - in_im[j] * s;
            si += in_re[j] * s + in_im[j] * c;
        }
        out_re[k] = sr;
        out_im[k] = si;
    }
}

inline bool is_pow2(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

inline void transform(std::vector<double>& re, std::vector<double>& im, bool inverse) {
    if (is_pow2(re.size())) {
        fft_pow2(re, im, inverse);
    } else {
        std::vector<double> out_re, out_im;
        dft_direct(re, im, out_re, out_im, inverse);
        re = std::move(out_re);
        im = std::move(out_im);
    }
}

}  // namespace detail

inline Spectrum dft(const HrrVector& v) {
    Spectrum s;
    s.re = v.values();
    s.im.assign(v.dim(), 0.0);
    detail::transform(s.re, s.im, /*inverse=*/false);
    return s;
}

// Inverse transform with the 1/d convention. Returns the real part; the
// imaginary residue of a conjugate-symmetric spectrum is rounding noise.
inline HrrVector idft(const Spectrum& s) {
    if (s.dim() < 2 || s.im.size() != s.re.size())
        throw ValidationError("idft: malformed spectrum");
    std::vector<double> re = s.re, im = s.im;
    detail::transform(re, im, /*inverse=*/true);
    const double inv_n = 1.0 / static_cast<double>(re.size());
    for (double& x : re) x *= inv_n;
    return HrrVector(std::move(re));
}

// Entries i.i.d. N(0, 1/dim), drawn as one contiguous block from rng.
inline HrrVector sample_vector(std::size_t dim, CounterRng& rng) {
    if (dim < 2)
        throw ValidationError("sample_vector requires dim >= 2");
    const double sigma = 1.0 / std::sqrt(static_cast<double>(dim));
    std::vector<double> v(dim);
    for (double& x : v) x = sigma * rng.next_gaussian();
    return HrrVector(std::move(v), HrrVector::Unchecked{});
}

constexpr double kProjectionFloor = 1e-12;
constexpr double kInversionFloor = 1e-9;

// True when every DFT bin has unit magnitude within tol.
inline bool is_projected(const HrrVector& v, double tol = 1e-6) {
    const Spectrum s = dft(v);
    for (std::size_t k = 0; k < s.dim(); ++k)
        if (std::abs(s.magnitude(k) - 1.0) > tol) return false;
    return true;
}

// Projection onto the ball of complex unit magnitude:
// pi(z) = F^-1(F(z) / |F(z)|).
inline HrrVector project(const HrrVector& v) {
    Spectrum s = dft(v);
    for (std::size_t k = 0; k < s.dim(); ++k) {
        const double mag = s.magnitude(k);
        if (mag < kProjectionFloor)
            throw DegenerateSpectrum("project: bin " + std::to_string(k) +
                                     " magnitude " + std::to_string(mag) +
                                     " below floor");
        s.re[k] /= mag;
        s.im[k] /= mag;
    }
    return idft(s);
}

// Circular convolution: F^-1(F(x) . F(y)).
inline HrrVector bind(const HrrVector& x, const HrrVector& y) {
    if (x.dim() != y.dim())
        throw ValidationError("bind: dimension mismatch " + std::to_string(x.dim()) +
                              " vs " + std::to_string(y.dim()));
    const Spectrum sx = dft(x), sy = dft(y);
    Spectrum out;
    out.re.resize(x.dim());
    out.im.resize(x.dim());
    for (std::size_t k = 0; k < x.dim(); ++k) {
        out.re[k] = sx.re[k] * sy.re[k] - sx.im[k] * sy.im[k];
        out.im[k] = sx.re[k] * sy.im[k] + sx.im[k] * sy.re[k];
    }
    return idft(out);
}

// z^dagger = F^-1(1 / F(z)).
inline HrrVector exact_inverse(const HrrVector& z) {
    Spectrum s = dft(z);
    for (std::size_t k = 0; k < s.dim(); ++k) {
        const double mag2 = s.re[k] * s.re[k] + s.im[k] * s.im[k];
        if (mag2 < kInversionFloor * kInversionFloor)
            throw NearSingularSpectrum("exact_inverse: bin " + std::to_string(k) +
                                       " magnitude below floor");
        s.re[k] = s.re[k] / mag2;
        s.im[k] = -s.im[k] / mag2;
    }
    return idft(s);
}

// Index-reversal involution: out[0] = z[0], out[k] = z[d-k]. Equal to the
// exact inverse when z has a unit-magnitude spectrum.
inline HrrVector pseudo_inverse(const HrrVector& z) {
    const std::size_t d = z.dim();
    std::vector<double> out(d);
    out[0] = z[0];
    for (std::size_t k = 1; k < d; ++k) out[k] = z[d - k];
    return HrrVector(std::move(out), HrrVector::Unchecked{});
}

inline HrrVector unbind(const HrrVector& b, const HrrVector& key) {
    return bind(b, exact_inverse(key));
}

constexpr double kNormFloor = 1e-12;

inline double cosine_similarity(const HrrVector& a, const HrrVector& b) {
    if (a.dim() != b.dim())
        throw ValidationError("cosine_similarity: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < kNormFloor || nb < kNormFloor)
        throw ZeroNorm("cosine_similarity: norm below floor");
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

}  // namespace holosub::hrr
