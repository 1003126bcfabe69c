#pragma once

// Loading generated datasets back from disk into training tensors.

#include <filesystem>
#include <string>
#include <vector>

#include "holosub/dataset_gen.hpp"
#include "holosub/errors.hpp"
#include "holosub/pgm.hpp"
#include "holosub/tensor.hpp"
#include "holosub/train.hpp"

namespace holosub::data {

enum class SplitFilter { All, TrainOnly, TestOnly };

struct LoadedDataset {
    nn::Dataset data;                    // labels are 0-based class indices
    std::vector<ManifestRecord> records; // aligned with data rows
    DatasetManifest manifest;
};

inline LoadedDataset load_dataset_dir(const std::string& variant_dir,
                                      SplitFilter filter = SplitFilter::All) {
    namespace fs = std::filesystem;
    const std::string mpath = (fs::path(variant_dir) / "manifest.txt").string();
    LoadedDataset out;
    out.manifest = load_manifest(mpath);

    std::vector<const ManifestRecord*> keep;
    for (const auto& r : out.manifest.records) {
        if (filter == SplitFilter::TrainOnly && !r.train_split) continue;
        if (filter == SplitFilter::TestOnly && r.train_split) continue;
        keep.push_back(&r);
    }
    if (keep.empty()) throw ValidationError("load_dataset_dir: empty selection");

    const std::size_t side = static_cast<std::size_t>(out.manifest.canvas);
    out.data.images =
        nn::Tensor::zeros({keep.size(), side, side, 1});
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const PgmImage img =
            read_pgm((fs::path(variant_dir) / keep[i]->file).string());
        if (img.height != out.manifest.canvas || img.width != out.manifest.canvas)
            throw ValidationError("load_dataset_dir: image size mismatch: " +
                                  keep[i]->file);
        double* dst = out.data.images.data.data() + i * side * side;
        for (std::size_t p = 0; p < side * side; ++p)
            dst[p] = img.pixels[p] > 127 ? 1.0 : 0.0;
        out.data.labels.push_back(keep[i]->label - 1);
        out.records.push_back(*keep[i]);
    }
    return out;
}

}  // namespace holosub::data
