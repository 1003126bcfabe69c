#pragma once

// Dataset generation: class-balanced scene sets per variant, rasterized to
// binary PGM files under <root>/<variant>/<label>/<index>.pgm plus a
// plain-text manifest. Budgets are stratified per class from one shared
// grid so the empirical area distribution is identical across counts.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "holosub/datagen.hpp"
#include "holosub/digest.hpp"
#include "holosub/errors.hpp"
#include "holosub/kv.hpp"
#include "holosub/parallel.hpp"
#include "holosub/pgm.hpp"
#include "holosub/rng.hpp"

namespace holosub::data {

struct DatasetConfig {
    VariantId variant = VariantId::TrainCircles;
    std::uint64_t seed = 7;
    int canvas = 64;
    int per_class = 100;
    std::string root;  // parent directory for the variant folder

    std::string serialize() const {
        kv::Document doc;
        doc.set("dataset", "variant", to_string(variant));
        doc.set("dataset", "seed", std::to_string(seed));
        doc.set("dataset", "canvas", std::to_string(canvas));
        doc.set("dataset", "per_class", std::to_string(per_class));
        return kv::serialize(doc);
    }
};

struct ManifestRecord {
    std::string file;  // relative to the variant directory
    int label = 0;     // object count, 1..6
    bool train_split = true;
    double white_area = 0.0;
    SceneSpec scene;
};

struct DatasetManifest {
    std::string variant;
    std::uint64_t seed = 0;
    int canvas = 0;
    int per_class = 0;
    std::string config_digest;
    double area_corr = 0.0;  // measured corr(label, white pixels)
    std::vector<ManifestRecord> records;
};

namespace detail {

inline std::uint64_t family_tag(Family f) {
    switch (f) {
        case Family::Solid:
            return 101;
        case Family::Rings:
            return 102;
        case Family::Boundary:
            return 103;
    }
    return 0;
}

// The 80/20 split is a stable hash of (seed, global index).
inline bool in_train_split(std::uint64_t seed, int index) {
    return CounterRng::mix(seed ^ (0x51ED0ACEULL + static_cast<std::uint64_t>(index) *
                                                       CounterRng::kGolden)) %
               5 !=
           0;
}

inline std::string object_to_string(const ObjectSpec& o) {
    std::ostringstream out;
    out.precision(17);
    if (o.shape == Shape::Circle)
        out << "circle";
    else
        out << "poly" << o.sides;
    out << ':' << o.cx << ':' << o.cy << ':' << o.radius << ':' << o.rotation << ':'
        << (o.fill == Fill::Solid ? "solid" : "outline");
    return out.str();
}

inline ObjectSpec object_from_string(const std::string& s) {
    ObjectSpec o;
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    if (parts.size() != 6) throw ValidationError("manifest: bad object field: " + s);
    if (parts[0] == "circle") {
        o.shape = Shape::Circle;
    } else if (parts[0].rfind("poly", 0) == 0) {
        o.shape = Shape::Polygon;
        o.sides = std::stoi(parts[0].substr(4));
    } else {
        throw ValidationError("manifest: bad shape: " + parts[0]);
    }
    o.cx = std::stod(parts[1]);
    o.cy = std::stod(parts[2]);
    o.radius = std::stod(parts[3]);
    o.rotation = std::stod(parts[4]);
    o.fill = parts[5] == "solid" ? Fill::Solid : Fill::Outline;
    return o;
}

}  // namespace detail

// Deterministic per-image scene construction shared by generation and
// replay. Class label is count; global index g = (label-1)*per_class + j.
inline SceneSpec scene_for_index(const DatasetConfig& cfg, int label, int j) {
    const Family family = family_of(cfg.variant);
    const SizePolicy policy = SizePolicy::make(family, cfg.canvas);
    CounterRng family_root = CounterRng(cfg.seed).fork(detail::family_tag(family));

    // Stratified budget: each class walks the same m-cell grid in a
    // class-specific shuffled order, with in-cell jitter from the image
    // stream. Marginals are U[lo, hi] and identical across classes.
    std::vector<int> cells(static_cast<std::size_t>(cfg.per_class));
    std::iota(cells.begin(), cells.end(), 0);
    CounterRng perm_rng = family_root.fork(1000 + static_cast<std::uint64_t>(label));
    perm_rng.shuffle(cells);
    CounterRng image_rng = family_root.fork(static_cast<std::uint64_t>(label))
                               .fork(static_cast<std::uint64_t>(j));
    const double u = image_rng.next_unit();
    const double budget =
        policy.budget_lo + (cells[static_cast<std::size_t>(j)] + u) *
                               (policy.budget_hi - policy.budget_lo) /
                               static_cast<double>(cfg.per_class);
    return gen_scene(label, cfg.variant, cfg.canvas, image_rng.fork(2), budget);
}

inline std::string manifest_path(const DatasetConfig& cfg) {
    return (std::filesystem::path(cfg.root) / to_string(cfg.variant) / "manifest.txt")
        .string();
}

inline void save_manifest(const std::string& path, const DatasetManifest& m) {
    std::ofstream out(path);
    if (!out) throw IoError("manifest: cannot write: " + path);
    kv::Document header;
    header.set("", "variant", m.variant);
    header.set("", "seed", std::to_string(m.seed));
    header.set("", "canvas", std::to_string(m.canvas));
    header.set("", "per_class", std::to_string(m.per_class));
    header.set("", "config_digest", m.config_digest);
    {
        std::ostringstream c;
        c.precision(6);
        c << m.area_corr;
        header.set("", "area_corr", c.str());
    }
    out << kv::serialize(header) << "---\n";
    for (const auto& r : m.records) {
        kv::Record rec;
        rec.emplace_back("file", r.file);
        rec.emplace_back("label", std::to_string(r.label));
        rec.emplace_back("split", r.train_split ? "train" : "test");
        {
            std::ostringstream a;
            a.precision(17);
            a << r.white_area;
            rec.emplace_back("area", a.str());
        }
        rec.emplace_back("polarity", r.scene.polarity == Polarity::WhiteOnBlack
                                         ? "white_on_black"
                                         : "black_on_white");
        std::string objects;
        for (std::size_t i = 0; i < r.scene.objects.size(); ++i) {
            if (i) objects += ';';
            objects += detail::object_to_string(r.scene.objects[i]);
        }
        rec.emplace_back("objects", objects);
        out << kv::serialize_record(rec) << '\n';
    }
    if (!out) throw IoError("manifest: write failed: " + path);
}

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("manifest: cannot open: " + path);
    DatasetManifest m;
    std::string line;
    std::string header_text;
    while (std::getline(in, line)) {
        if (line == "---") break;
        header_text += line + "\n";
    }
    const kv::Document header = kv::parse(header_text);
    m.variant = header.get("", "variant");
    m.seed = std::stoull(header.get("", "seed"));
    m.canvas = std::stoi(header.get("", "canvas"));
    m.per_class = std::stoi(header.get("", "per_class"));
    m.config_digest = header.get("", "config_digest");
    m.area_corr = std::stod(header.get("", "area_corr", "0"));
    while (std::getline(in, line)) {
        if (kv::trim(line).empty()) continue;
        const kv::Record rec = kv::parse_record(line);
        ManifestRecord r;
        r.file = kv::record_get(rec, "file");
        r.label = std::stoi(kv::record_get(rec, "label"));
        r.train_split = kv::record_get(rec, "split") == "train";
        r.white_area = std::stod(kv::record_get(rec, "area"));
        r.scene.count = r.label;
        r.scene.canvas = m.canvas;
        r.scene.polarity = kv::record_get(rec, "polarity") == "white_on_black"
                               ? Polarity::WhiteOnBlack
                               : Polarity::BlackOnWhite;
        std::istringstream objs(kv::record_get(rec, "objects"));
        std::string tok;
        while (std::getline(objs, tok, ';'))
            r.scene.objects.push_back(detail::object_from_string(tok));
        m.records.push_back(std::move(r));
    }
    return m;
}

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double cov = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        cov += (xs[i] - mx) * (ys[i] - my);
        vx += (xs[i] - mx) * (xs[i] - mx);
        vy += (ys[i] - my) * (ys[i] - my);
    }
    if (vx <= 0.0 || vy <= 0.0) return 0.0;
    return cov / std::sqrt(vx * vy);
}

// Generates all images + manifest for one variant. Scenes are produced in
// parallel by index; files and manifest entries keep index order.
inline DatasetManifest gen_dataset(const DatasetConfig& cfg) {
    namespace fs = std::filesystem;
    if (cfg.per_class < 1) throw ValidationError("gen_dataset: per_class must be >= 1");
    const fs::path dir = fs::path(cfg.root) / to_string(cfg.variant);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("gen_dataset: cannot create " + dir.string());
    for (int label = 1; label <= 6; ++label) {
        fs::create_directories(dir / std::to_string(label), ec);
        if (ec) throw IoError("gen_dataset: cannot create label dir");
    }

    const int total = cfg.per_class * 6;
    std::vector<ManifestRecord> records(static_cast<std::size_t>(total));
    std::vector<std::string> failures(static_cast<std::size_t>(total));
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t i0, std::size_t i1) {
        for (std::size_t g = i0; g < i1; ++g) {
            const int label = static_cast<int>(g) / cfg.per_class + 1;
            const int j = static_cast<int>(g) % cfg.per_class;
            try {
                ManifestRecord rec;
                rec.label = label;
                rec.scene = scene_for_index(cfg, label, j);
                rec.train_split = detail::in_train_split(cfg.seed, static_cast<int>(g));
                const ImageGray img = rasterize(rec.scene);
                rec.white_area = white_pixel_count(img);
                rec.file = std::to_string(label) + "/" + std::to_string(g) + ".pgm";
                PgmImage pgm;
                pgm.height = img.height;
                pgm.width = img.width;
                pgm.pixels.resize(img.pixels.size());
                for (std::size_t p = 0; p < img.pixels.size(); ++p)
                    pgm.pixels[p] = img.pixels[p] > 0.5 ? 255 : 0;
                write_pgm((dir / rec.file).string(), pgm);
                records[g] = std::move(rec);
            } catch (const std::exception& e) {
                failures[g] = e.what();
            }
        }
    });
    for (const auto& f : failures)
        if (!f.empty()) throw PlacementFailure("gen_dataset: " + f);

    DatasetManifest manifest;
    manifest.variant = to_string(cfg.variant);
    manifest.seed = cfg.seed;
    manifest.canvas = cfg.canvas;
    manifest.per_class = cfg.per_class;
    manifest.config_digest = sha256_hex(cfg.serialize());
    manifest.records = std::move(records);
    std::vector<double> labels, areas;
    for (const auto& r : manifest.records) {
        labels.push_back(static_cast<double>(r.label));
        areas.push_back(r.scene.polarity == Polarity::WhiteOnBlack
                            ? r.white_area
                            : static_cast<double>(cfg.canvas) * cfg.canvas -
                                  r.white_area);
    }
    manifest.area_corr = pearson(labels, areas);
    save_manifest(manifest_path(cfg), manifest);
    return manifest;
}

}  // namespace holosub::data
