#pragma once

// Class codebook: one projected key/value pair per class plus the
// precomputed bound target of each pair. Deterministically reconstructible
// from (num_classes, feature_dim, seed).

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "holosub/errors.hpp"
#include "holosub/hrr.hpp"
#include "holosub/rng.hpp"

namespace holosub::hrr {

struct Codebook {
    int num_classes = 0;
    int feature_dim = 0;
    std::uint64_t seed = 0;
    std::vector<HrrVector> keys;
    std::vector<HrrVector> values;
    std::vector<HrrVector> targets;   // targets[c] = bind(keys[c], values[c])
    std::vector<HrrVector> inv_keys;  // exact_inverse(keys[c]), cached for decode

    void finalize() {
        targets.clear();
        inv_keys.clear();
        targets.reserve(keys.size());
        inv_keys.reserve(keys.size());
        for (std::size_t c = 0; c < keys.size(); ++c) {
            targets.push_back(bind(keys[c], values[c]));
            inv_keys.push_back(exact_inverse(keys[c]));
        }
    }
};

namespace detail {
// Keys-before-values draw for one construction attempt. Every vector is
// one contiguous block of H gaussians followed by projection.
inline bool draw_codebook(Codebook& book, CounterRng rng) {
    book.keys.clear();
    book.values.clear();
    const auto draw_projected = [&rng](int dim) {
        for (int tries = 0; tries < 100; ++tries) {
            const HrrVector raw = sample_vector(static_cast<std::size_t>(dim), rng);
            try {
                return project(raw);
            } catch (const DegenerateSpectrum&) {
                // astronomically rare; redraw
            }
        }
        throw DegenerateSpectrum("make_codebook: persistent degenerate spectrum");
    };
    for (int c = 0; c < book.num_classes; ++c)
        book.keys.push_back(draw_projected(book.feature_dim));
    for (int c = 0; c < book.num_classes; ++c)
        book.values.push_back(draw_projected(book.feature_dim));
    // Near-orthogonality: reject attempts with strongly aligned keys.
    for (std::size_t a = 0; a < book.keys.size(); ++a)
        for (std::size_t b = a + 1; b < book.keys.size(); ++b)
            if (std::abs(cosine_similarity(book.keys[a], book.keys[b])) >= 0.5)
                return false;
    return true;
}
}  // namespace detail

inline Codebook make_codebook(int num_classes, int feature_dim, std::uint64_t seed) {
    if (num_classes < 2)
        throw ValidationError("make_codebook: need at least 2 classes");
    if (feature_dim < 8)
        throw ValidationError("make_codebook: feature_dim must be >= 8");
    if (feature_dim < 32)
        std::fprintf(stderr,
                     "holosub: warning: feature_dim %d < 32; bound targets may "
                     "leave the tanh-friendly range\n",
                     feature_dim);
    Codebook book;
    book.num_classes = num_classes;
    book.feature_dim = feature_dim;
    book.seed = seed;
    CounterRng root(seed);
    for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
        if (detail::draw_codebook(book, root.fork(attempt))) {
            book.finalize();
            return book;
        }
    }
    throw ValidationError("make_codebook: could not sample near-orthogonal keys");
}

// Flat binary layout: magic, u32 C, u32 H, u64 seed, then keys and values
// row-major as little-endian 64-bit floats. Targets are recomputed on load.
inline constexpr char kCodebookMagic[8] = {'H', 'S', 'U', 'B', 'C', 'B', 'K', '1'};

namespace detail {
template <typename T>
void write_raw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
void read_raw(std::ifstream& in, T& v, const std::string& path) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw IoError("codebook: truncated file: " + path);
}
}  // namespace detail

inline void save_codebook(const std::string& path, const Codebook& book) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("codebook: cannot write: " + path);
    out.write(kCodebookMagic, sizeof kCodebookMagic);
    detail::write_raw(out, static_cast<std::uint32_t>(book.num_classes));
    detail::write_raw(out, static_cast<std::uint32_t>(book.feature_dim));
    detail::write_raw(out, book.seed);
    const auto write_vecs = [&out](const std::vector<HrrVector>& vs) {
        for (const auto& v : vs)
            out.write(reinterpret_cast<const char*>(v.values().data()),
                      static_cast<std::streamsize>(sizeof(double) * v.dim()));
    };
    write_vecs(book.keys);
    write_vecs(book.values);
    if (!out) throw IoError("codebook: write failed: " + path);
}

inline Codebook load_codebook(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("codebook: cannot open: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCodebookMagic, sizeof magic) != 0)
        throw ValidationError("codebook: bad magic: " + path);
    std::uint32_t c32 = 0, h32 = 0;
    Codebook book;
    detail::read_raw(in, c32, path);
    detail::read_raw(in, h32, path);
    detail::read_raw(in, book.seed, path);
    book.num_classes = static_cast<int>(c32);
    book.feature_dim = static_cast<int>(h32);
    if (book.num_classes < 2 || book.feature_dim < 2)
        throw ValidationError("codebook: bad dimensions: " + path);
    const auto read_vecs = [&](std::vector<HrrVector>& vs) {
        for (int c = 0; c < book.num_classes; ++c) {
            std::vector<double> buf(static_cast<std::size_t>(book.feature_dim));
            in.read(reinterpret_cast<char*>(buf.data()),
                    static_cast<std::streamsize>(sizeof(double) * buf.size()));
            if (!in) throw IoError("codebook: truncated file: " + path);
            vs.emplace_back(std::move(buf));
        }
    };
    read_vecs(book.keys);
    read_vecs(book.values);
    book.finalize();
    return book;
}

}  // namespace holosub::hrr
