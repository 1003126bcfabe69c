// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Slow end-to-end criteria drive the holosub CLI binary;
// the rest call the library directly.
//
// Usage: acceptance <path-to-holosub> <work-dir>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "holosub/codebook.hpp"
#include "holosub/dataset_gen.hpp"
#include "holosub/dataset_io.hpp"
#include "holosub/digest.hpp"
#include "holosub/loss.hpp"
#include "holosub/model.hpp"
#include "holosub/report.hpp"
#include "holosub/saliency.hpp"
#include "holosub/train.hpp"
#include "../oracles.hpp"

namespace fs = std::filesystem;
using namespace holosub;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_holosub;
fs::path g_work;
int g_failures = 0;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void criterion(int index, const std::string& name,
               const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    const auto t0 = Clock::now();
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(t0);
    std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", index,
                name.c_str(), secs, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

int run_cli(const std::string& args) {
    const std::string cmd = g_holosub + " " + args + " >> " +
                            (g_work / "cli_log.txt").string() + " 2>&1";
    return std::system(cmd.c_str());
}

// -- criterion 1 -------------------------------------------------------------

bool vsa_round_trip(std::string& detail) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const std::size_t d : {8u, 64u, 100u}) {
        CounterRng rng(4000 + d);
        for (int t = 0; t < 1000; ++t) {
            const auto k = hrr::project(hrr::sample_vector(d, rng));
            const auto v = hrr::sample_vector(d, rng);
            const auto back = hrr::unbind(hrr::bind(k, v), k);
            for (std::size_t i = 0; i < d; ++i)
                worst = std::max(worst, std::abs(back[i] - v[i]));
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream ss;
    ss << "max_error=" << worst << " runtime=" << secs << "s";
    detail = ss.str();
    return worst < 1e-6 && secs < 5.0;
}

// -- criterion 2 -------------------------------------------------------------

bool bound_range(std::string& detail) {
    const auto t0 = Clock::now();
    const double limit = 4.0 * std::sqrt(2.0) / std::sqrt(64.0);
    double worst = 0.0;
    int violations = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto book = hrr::make_codebook(6, 64, seed);
        for (const auto& t : book.targets)
            for (std::size_t i = 0; i < t.dim(); ++i) {
                worst = std::max(worst, std::abs(t[i]));
                if (std::abs(t[i]) > limit) ++violations;
            }
    }
    const double secs = seconds_since(t0);
    std::ostringstream ss;
    ss << "max|entry|=" << worst << " limit=" << limit
       << " violations=" << violations << " runtime=" << secs << "s";
    detail = ss.str();
    return violations == 0 && secs < 10.0;
}

// -- criterion 3 -------------------------------------------------------------

bool decode_fidelity(std::string& detail) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto book = hrr::make_codebook(6, 64, 3000 + seed);
        nn::Tensor rows = nn::Tensor::zeros({6, 64});
        for (int c = 0; c < 6; ++c)
            for (int j = 0; j < 64; ++j)
                rows[static_cast<std::size_t>(c * 64 + j)] =
                    book.targets[static_cast<std::size_t>(c)]
                                [static_cast<std::size_t>(j)];
        const auto dec = hrr::decode(hrr::BatchPrediction{std::move(rows)}, book);
        for (int c = 0; c < 6; ++c) {
            if (dec.argmax[static_cast<std::size_t>(c)] != c) {
                detail = "exact target decoded to the wrong class";
                return false;
            }
            if (dec.scores.at(static_cast<std::size_t>(c),
                              static_cast<std::size_t>(c)) < 0.999) {
                detail = "exact target score below 0.999";
                return false;
            }
        }
    }
    const auto book = hrr::make_codebook(6, 64, 77);
    CounterRng rng(78);
    int hits = 0;
    for (int t = 0; t < 1000; ++t) {
        const int c = static_cast<int>(rng.next_below(6));
        nn::Tensor row = nn::Tensor::zeros({1, 64});
        for (int j = 0; j < 64; ++j)
            row[static_cast<std::size_t>(j)] =
                book.targets[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] +
                0.1 * rng.next_gaussian();
        if (hrr::decode(hrr::BatchPrediction{std::move(row)}, book).argmax[0] == c)
            ++hits;
    }
    std::ostringstream ss;
    ss << "noisy_accuracy=" << hits / 1000.0;
    detail = ss.str();
    return hits >= 990;
}

// -- criterion 4 -------------------------------------------------------------

bool gradient_oracles(std::string& detail) {
    const auto t0 = Clock::now();
    double worst_loss = 0.0, worst_net = 0.0;

    {  // bound-target loss and cross entropy
        const auto book = hrr::make_codebook(6, 64, 11);
        CounterRng rng(12);
        for (int inst = 0; inst < 10; ++inst) {
            std::vector<int> labels;
            std::vector<double> flat;
            for (int i = 0; i < 3; ++i) {
                labels.push_back(static_cast<int>(rng.next_below(6)));
                for (int j = 0; j < 64; ++j)
                    flat.push_back(0.8 * (rng.next_unit() * 2 - 1));
            }
            const auto f = [&](const std::vector<double>& p) {
                return hrr::hrr_loss(hrr::BatchPrediction{nn::Tensor({3, 64}, p)},
                                     labels, book)
                    .loss;
            };
            const auto analytic =
                hrr::hrr_loss(hrr::BatchPrediction{nn::Tensor({3, 64}, flat)},
                              labels, book)
                    .grad.data;
            worst_loss = std::max(
                worst_loss,
                oracles::max_rel_error(analytic, oracles::finite_diff(f, flat)));
        }
        for (int inst = 0; inst < 10; ++inst) {
            std::vector<int> labels;
            std::vector<double> flat;
            for (int i = 0; i < 4; ++i) {
                labels.push_back(static_cast<int>(rng.next_below(6)));
                for (int j = 0; j < 6; ++j) flat.push_back(rng.next_gaussian());
            }
            const auto f = [&](const std::vector<double>& p) {
                return hrr::ce_loss(nn::Tensor({4, 6}, p), labels).loss;
            };
            const auto analytic =
                hrr::ce_loss(nn::Tensor({4, 6}, flat), labels).grad.data;
            worst_loss = std::max(
                worst_loss,
                oracles::max_rel_error(analytic, oracles::finite_diff(f, flat)));
        }
        // decode-similarity path
        for (int inst = 0; inst < 10; ++inst) {
            std::vector<double> yhat(64);
            for (double& v : yhat) v = 0.8 * (rng.next_unit() * 2 - 1);
            const int c = static_cast<int>(rng.next_below(6));
            const auto analytic =
                saliency::similarity_gradient(hrr::HrrVector(yhat), book, c).values();
            const auto f = [&](const std::vector<double>& p) {
                return hrr::cosine_similarity(
                    book.values[static_cast<std::size_t>(c)],
                    hrr::bind(hrr::HrrVector(p),
                              book.inv_keys[static_cast<std::size_t>(c)]));
            };
            worst_loss = std::max(
                worst_loss,
                oracles::max_rel_error(analytic, oracles::finite_diff(f, yhat, 1e-6)));
        }
    }

    // networks: small CNN and tiny ViT against a random linear probe
    const auto check_model = [&](nn::ModelSpec spec, std::uint64_t seed) {
        nn::Model model(spec, seed);
        CounterRng rng(seed + 1);
        nn::Tensor batch = nn::Tensor::zeros(
            {2, static_cast<std::size_t>(spec.input_h),
             static_cast<std::size_t>(spec.input_w), 1});
        for (double& v : batch.data) v = rng.next_unit();
        const nn::Tensor y0 = model.forward(batch, false, nullptr, nullptr);
        nn::Tensor probe = nn::Tensor::zeros(y0.shape);
        for (double& p : probe.data) p = rng.next_gaussian();
        std::vector<nn::LayerCache> caches;
        model.zero_grads();
        (void)model.forward(batch, false, nullptr, &caches);
        model.backward(probe, caches);
        const auto loss_of = [&]() {
            const nn::Tensor y = model.forward(batch, false, nullptr, nullptr);
            double s = 0.0;
            for (std::size_t i = 0; i < y.numel(); ++i) s += y[i] * probe[i];
            return s;
        };
        for (auto& p : model.params()) {
            const auto f = [&](const std::vector<double>& flat) {
                const std::vector<double> keep = p.value->data;
                p.value->data = flat;
                const double out = loss_of();
                p.value->data = keep;
                return out;
            };
            worst_net = std::max(
                worst_net, oracles::max_rel_error(
                               p.grad->data, oracles::finite_diff(f, p.value->data)));
        }
    };
    for (int inst = 0; inst < 10; ++inst) {
        nn::ModelSpec cnn;
        cnn.kind = nn::ModelKind::Cnn;
        cnn.input_h = 8;
        cnn.input_w = 8;
        cnn.input_c = 1;
        cnn.head = nn::HeadKind::Hrr;
        cnn.head_width = 8;
        cnn.dropout = 0.0;
        cnn.cnn.stages = {{4, 3, 1, true, 2}, {8, 3, 1, true, 2}};
        cnn.cnn.dense_widths = {16};
        check_model(cnn, 100 + static_cast<std::uint64_t>(inst));

        nn::ModelSpec vit;
        vit.kind = nn::ModelKind::Vit;
        vit.input_h = 16;
        vit.input_w = 16;
        vit.input_c = 1;
        vit.head = nn::HeadKind::Hrr;
        vit.head_width = 8;
        vit.dropout = 0.0;
        vit.vit = {4, 8, 1, 1, 2};
        check_model(vit, 200 + static_cast<std::uint64_t>(inst));
    }
    const double secs = seconds_since(t0);
    std::ostringstream ss;
    ss << "worst_loss_rel_err=" << worst_loss << " worst_net_rel_err=" << worst_net
       << " runtime=" << secs << "s";
    detail = ss.str();
    return worst_loss <= 1e-4 && worst_net <= 1e-3 && secs < 120.0;
}

// -- criterion 5 -------------------------------------------------------------

bool dataset_invariants(std::string& detail) {
    const fs::path root = g_work / "data";
    if (run_cli("gen --variant all --profile desk --seed 7 --out " + root.string()) !=
        0) {
        detail = "gen failed";
        return false;
    }
    const auto manifest =
        data::load_manifest((root / "train_circles" / "manifest.txt").string());
    if (manifest.records.size() != 600) {
        detail = "expected 600 train images";
        return false;
    }
    if (std::abs(manifest.area_corr) >= 0.05) {
        std::ostringstream ss;
        ss << "area_corr=" << manifest.area_corr;
        detail = ss.str();
        return false;
    }
    // connected components equal the label on every solid-fill image
    for (const std::string variant : {"train_circles", "larger50", "triangles",
                                      "squares"}) {
        const auto m =
            data::load_manifest((root / variant / "manifest.txt").string());
        for (const auto& rec : m.records) {
            const PgmImage img =
                read_pgm((root / variant / rec.file).string());
            data::ImageGray gray;
            gray.height = img.height;
            gray.width = img.width;
            gray.pixels.resize(img.pixels.size());
            for (std::size_t i = 0; i < img.pixels.size(); ++i)
                gray.pixels[i] = img.pixels[i] > 127 ? 1.0 : 0.0;
            if (data::count_components(gray) != rec.label) {
                detail = "component count mismatch in " + variant + "/" + rec.file;
                return false;
            }
        }
    }
    // color_swap images are exact inversions of the seed-matched base
    const auto base =
        data::load_manifest((root / "train_circles" / "manifest.txt").string());
    const auto swap =
        data::load_manifest((root / "color_swap" / "manifest.txt").string());
    for (std::size_t i = 0; i < base.records.size(); ++i) {
        const PgmImage a =
            read_pgm((root / "train_circles" / base.records[i].file).string());
        const PgmImage b =
            read_pgm((root / "color_swap" / swap.records[i].file).string());
        for (std::size_t p = 0; p < a.pixels.size(); ++p)
            if (static_cast<int>(a.pixels[p]) + static_cast<int>(b.pixels[p]) != 255) {
                detail = "color_swap is not a pixel inversion at " +
                         base.records[i].file;
                return false;
            }
    }
    std::ostringstream ss;
    ss << "area_corr=" << manifest.area_corr
       << " components=100% inversion=exact";
    detail = ss.str();
    return true;
}

// -- criterion 6 -------------------------------------------------------------

double final_accuracy_of(const fs::path& run_dir, std::string& detail) {
    std::ifstream in(run_dir / "train_log.txt");
    if (!in) {
        detail = "missing train_log.txt";
        return -1.0;
    }
    std::string line, last;
    while (std::getline(in, line))
        if (!kv::trim(line).empty()) last = line;
    const auto rec = kv::parse_record(last);
    return std::stod(kv::record_get(rec, "acc"));
}

bool training_fit(std::string& detail) {
    const auto t0 = Clock::now();
    const fs::path data_dir = g_work / "data";
    const fs::path hrr_dir = g_work / "train_hrr";
    const fs::path ce_dir = g_work / "train_ce";
    if (run_cli("train --data " + data_dir.string() +
                " --variant train_circles --profile desk --loss hrr --model cnn"
                " --seed 7 --stop-at-accuracy 1.0 --out " +
                hrr_dir.string()) != 0) {
        detail = "hrr training run failed";
        return false;
    }
    if (run_cli("train --data " + data_dir.string() +
                " --variant train_circles --profile desk --loss ce --model cnn"
                " --seed 7 --stop-at-accuracy 1.0 --out " +
                ce_dir.string()) != 0) {
        detail = "ce training run failed";
        return false;
    }
    const double hrr_acc = final_accuracy_of(hrr_dir, detail);
    const double ce_acc = final_accuracy_of(ce_dir, detail);
    const double secs = seconds_since(t0);
    std::ostringstream ss;
    ss << "hrr_acc=" << hrr_acc << " ce_acc=" << ce_acc << " runtime=" << secs
       << "s";
    detail = ss.str();
    return hrr_acc == 1.0 && ce_acc == 1.0 && secs < 600.0;
}

// -- criterion 7 -------------------------------------------------------------

bool eval_table_structure(std::string& detail) {
    const fs::path eval_dir = g_work / "eval";
    if (run_cli("eval --checkpoint " + (g_work / "train_hrr/checkpoint.bin").string() +
                " --checkpoint " + (g_work / "train_ce/checkpoint.bin").string() +
                " --data " + (g_work / "data").string() +
                " --variants all7 --saliency-sample 12 --out " +
                eval_dir.string()) != 0) {
        detail = "eval run failed";
        return false;
    }
    std::ifstream in(eval_dir / "accuracy_table.kv");
    std::stringstream buf;
    buf << in.rdbuf();
    const auto table = report::parse_accuracy_table(buf.str());
    const std::vector<std::string> expect = {
        "larger50",    "triangles",         "squares",          "color_swap",
        "white_rings", "boundary_larger50", "boundary_smaller50"};
    if (table.columns.size() != expect.size() * 2) {
        detail = "expected 7 variants x 2 losses";
        return false;
    }
    double squares_hrr = -1.0, squares_ce = -1.0;
    for (const auto& v : expect) {
        bool has_hrr = false, has_ce = false;
        for (const auto& col : table.columns) {
            if (col.variant != v) continue;
            if (col.loss == "hrr") {
                has_hrr = true;
                if (v == "squares") squares_hrr = col.mean_acc;
            }
            if (col.loss == "ce") {
                has_ce = true;
                if (v == "squares") squares_ce = col.mean_acc;
            }
        }
        if (!has_hrr || !has_ce) {
            detail = "missing column for " + v;
            return false;
        }
    }
    // The paper-scale accuracy values are not reproducible at desk scale
    // (full 300-epoch training on an unreleased dataset with an undisclosed
    // reference CNN); the squares-variant means are reported side by side
    // with no pass threshold and archived in the run manifest.
    const kv::Document manifest =
        kv::load_file((eval_dir / "run_manifest.txt").string());
    if (manifest.get("outputs", "accuracy_table.kv").empty()) {
        detail = "table digest not archived in run manifest";
        return false;
    }
    std::ostringstream ss;
    ss << "directional check (no threshold): squares mean acc hrr=" << squares_hrr
       << " ce=" << squares_ce;
    detail = ss.str();
    return true;
}

// -- criterion 8 -------------------------------------------------------------

bool determinism_replay(std::string& detail) {
    // Dataset replay: regenerate from the gen manifest, byte-compare.
    if (run_cli("replay --manifest " + (g_work / "data/run_manifest.txt").string() +
                " --out " + (g_work / "replay_data").string()) != 0) {
        detail = "dataset replay mismatch";
        return false;
    }
    // Checkpoint replay on a short run, then table and saliency replays.
    const fs::path tiny = g_work / "tiny_train";
    if (run_cli("train --data " + (g_work / "data").string() +
                " --variant train_circles --profile desk --loss hrr --model cnn"
                " --seed 11 --epochs 3 --out " +
                tiny.string()) != 0) {
        detail = "tiny training run failed";
        return false;
    }
    if (run_cli("replay --manifest " + (tiny / "run_manifest.txt").string() +
                " --out " + (g_work / "replay_train").string()) != 0) {
        detail = "checkpoint replay mismatch";
        return false;
    }
    if (run_cli("replay --manifest " + (g_work / "eval/run_manifest.txt").string() +
                " --out " + (g_work / "replay_eval").string()) != 0) {
        detail = "table replay mismatch";
        return false;
    }
    const fs::path sal = g_work / "saliency";
    if (run_cli("saliency --checkpoint " +
                (g_work / "train_hrr/checkpoint.bin").string() + " --data " +
                (g_work / "data").string() +
                " --variant squares --per-class 1 --out " + sal.string()) != 0) {
        detail = "saliency run failed";
        return false;
    }
    if (run_cli("replay --manifest " + (sal / "run_manifest.txt").string() +
                " --out " + (g_work / "replay_saliency").string()) != 0) {
        detail = "saliency replay mismatch";
        return false;
    }
    detail = "dataset, checkpoint, table, and saliency replays byte-identical";
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: acceptance <holosub-binary> <work-dir>\n");
        return 2;
    }
    g_holosub = argv[1];
    g_work = argv[2];
    std::error_code ec;
    fs::remove_all(g_work, ec);
    fs::create_directories(g_work, ec);

    criterion(1, "VSA round-trip at d in {8,64,100}", vsa_round_trip);
    criterion(2, "bound-target range <= 4*sqrt(2)/sqrt(H)", bound_range);
    criterion(3, "decode fidelity exact and under noise", decode_fidelity);
    criterion(4, "gradient oracles (losses, decode path, CNN, ViT)",
              gradient_oracles);
    criterion(5, "dataset invariants (decorrelation, components, inversion)",
              dataset_invariants);
    criterion(6, "desk-profile training reaches 100% train accuracy",
              training_fit);
    criterion(7, "eval table structure over the seven test variants",
              eval_table_structure);
    criterion(8, "run-manifest replays are byte-identical", determinism_replay);

    if (g_failures == 0) {
        std::printf("acceptance: all 8 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return 1;
}
