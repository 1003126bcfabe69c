// holosub: dataset generation, training, variant evaluation, saliency
// export, and the vector-algebra property benchmark, as reproducible
// seeded runs. Every command writes a run manifest with content digests of
// its outputs; `replay` re-executes a manifest and verifies the digests.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "holosub/codebook.hpp"
#include "holosub/dataset_gen.hpp"
#include "holosub/dataset_io.hpp"
#include "holosub/digest.hpp"
#include "holosub/errors.hpp"
#include "holosub/kv.hpp"
#include "holosub/loss.hpp"
#include "holosub/model.hpp"
#include "holosub/report.hpp"
#include "holosub/saliency.hpp"
#include "holosub/train.hpp"

namespace fs = std::filesystem;
using namespace holosub;

namespace {

struct Profile {
    std::string name;
    int canvas;
    int per_class;
    int epochs;
    int batch_size;
    std::vector<std::pair<int, double>> lr_schedule;
    nn::VitSpec vit;
};

Profile profile_of(const std::string& name) {
    if (name == "desk")
        return {"desk", 64,  100, 50, 32,
                {{0, 3e-3}, {30, 1e-3}, {40, 1e-4}},
                {8, 64, 4, 3, 4}};
    if (name == "full")
        return {"full", 100, 1000, 300, 32,
                {{0, 1e-3}, {100, 1e-4}, {200, 1e-5}},
                {10, 256, 4, 6, 4}};
    throw ValidationError("unknown profile: " + name);
}

constexpr int kNumClasses = 6;
constexpr int kFeatureDim = 64;

nn::ModelSpec build_model_spec(const Profile& profile, const std::string& model,
                               const std::string& loss, int canvas) {
    nn::ModelSpec spec;
    spec.kind = nn::model_kind_from(model);
    spec.input_h = canvas;
    spec.input_w = canvas;
    spec.input_c = 1;
    spec.head = nn::head_kind_from(loss);
    spec.head_width = spec.head == nn::HeadKind::Hrr ? kFeatureDim : kNumClasses;
    spec.dropout = 0.1;
    spec.cnn = nn::default_cnn();
    spec.vit = profile.vit;
    return spec;
}

std::string join_args(const std::vector<std::string>& argv) {
    std::string joined;
    for (const auto& a : argv) {
        if (!joined.empty()) joined += ' ';
        joined += a;
    }
    return joined;
}

// Canonical argv echoed into the run manifest; replay substitutes --out.
struct RunContext {
    std::string command;
    std::vector<std::string> argv;
    fs::path out_dir;
    kv::Document fields;
    std::vector<std::string> outputs;  // relative paths, digested at finish

    RunContext(std::string cmd, std::vector<std::string> args, std::string out)
        : command(std::move(cmd)), argv(std::move(args)), out_dir(out) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create output dir: " + out_dir.string());
    }

    std::string path(const std::string& rel) {
        outputs.push_back(rel);
        return (out_dir / rel).string();
    }

    void add_existing(const std::string& rel) { outputs.push_back(rel); }

    void finish() {
        kv::Document doc;
        doc.set("run", "command", command);
        doc.set("run", "argv", join_args(argv));
        for (const auto& [section, entries] : fields.sections)
            for (const auto& [k, v] : entries)
                doc.set(section.empty() ? "run" : section, k, v);
        for (const auto& rel : outputs)
            doc.set("outputs", rel, sha256_file_hex((out_dir / rel).string()));
        kv::save_file((out_dir / "run_manifest.txt").string(), doc);
    }
};

data::DatasetConfig dataset_config(data::VariantId variant, std::uint64_t seed,
                                   const Profile& profile, const std::string& root) {
    data::DatasetConfig cfg;
    cfg.variant = variant;
    cfg.seed = seed;
    cfg.canvas = profile.canvas;
    cfg.per_class = profile.per_class;
    cfg.root = root;
    return cfg;
}

const std::vector<std::string> kEvalSeven = {
    "larger50",    "triangles",         "squares",          "color_swap",
    "white_rings", "boundary_larger50", "boundary_smaller50"};

// ---------------------------------------------------------------------------
// gen

void cmd_gen(const std::vector<std::string>& argv, const std::string& variant_arg,
             const std::string& profile_name, std::uint64_t seed,
             const std::string& out) {
    const Profile profile = profile_of(profile_name);
    RunContext run("gen", argv, out);
    run.fields.set("run", "seed", std::to_string(seed));
    run.fields.set("run", "profile", profile.name);
    run.fields.set("run", "canvas", std::to_string(profile.canvas));
    std::vector<std::string> variants;
    if (variant_arg == "all") {
        for (const auto& [id, name] : data::variant_names()) variants.push_back(name);
    } else {
        variants.push_back(variant_arg);
    }
    for (const auto& name : variants) {
        const auto cfg = dataset_config(data::variant_from(name), seed, profile, out);
        const auto manifest = data::gen_dataset(cfg);
        for (const auto& rec : manifest.records)
            run.add_existing(name + "/" + rec.file);
        run.add_existing(name + "/manifest.txt");
        std::ostringstream corr;
        corr.precision(4);
        corr << manifest.area_corr;
        run.fields.set("datasets", name + ".area_corr", corr.str());
        run.fields.set("datasets", name + ".images",
                       std::to_string(manifest.records.size()));
        std::printf("gen %s: %zu images, area_corr=%s\n", name.c_str(),
                    manifest.records.size(), corr.str().c_str());
    }
    run.finish();
    std::printf(
        "manifest digest: %s\n",
        sha256_file_hex((fs::path(out) / "run_manifest.txt").string()).c_str());
}

// ---------------------------------------------------------------------------
// train

void cmd_train(const std::vector<std::string>& argv, const std::string& data_dir,
               const std::string& variant, const std::string& profile_name,
               const std::string& loss, const std::string& model,
               std::uint64_t seed, int epochs_override, double stop_at,
               const std::string& out) {
    const Profile profile = profile_of(profile_name);
    const bool boundary_split = variant == "boundary_polygons";
    const auto loaded = data::load_dataset_dir(
        (fs::path(data_dir) / variant).string(),
        boundary_split ? data::SplitFilter::TrainOnly : data::SplitFilter::All);

    nn::ModelSpec spec = build_model_spec(profile, model, loss, loaded.manifest.canvas);
    nn::Model net(spec, seed);

    nn::TrainConfig cfg;
    cfg.epochs = epochs_override > 0 ? epochs_override : profile.epochs;
    cfg.batch_size = profile.batch_size;
    cfg.lr_schedule = profile.lr_schedule;
    cfg.seed = seed;
    cfg.loss = loss == "hrr" ? nn::LossKind::Hrr : nn::LossKind::Ce;
    cfg.stop_at_accuracy = stop_at;

    hrr::Codebook book;
    const bool uses_book = cfg.loss == nn::LossKind::Hrr;
    if (uses_book) book = hrr::make_codebook(kNumClasses, kFeatureDim, seed);

    const auto log = nn::train(net, loaded.data, cfg, uses_book ? &book : nullptr);

    RunContext run("train", argv, out);
    run.fields.set("run", "seed", std::to_string(seed));
    run.fields.set("run", "profile", profile.name);
    run.fields.set("run", "loss", loss);
    run.fields.set("run", "model", model);
    run.fields.set("run", "optimizer", nn::to_string(cfg.optimizer));
    run.fields.set("run", "variant", variant);
    run.fields.set("run", "train_images", std::to_string(loaded.data.size()));
    run.fields.set("run", "model_spec_digest", nn::spec_digest(spec));
    run.fields.set("run", "dataset_config_digest", loaded.manifest.config_digest);

    nn::save_checkpoint(run.path("checkpoint.bin"), net);
    if (uses_book) hrr::save_codebook(run.path("codebook.bin"), book);
    {
        std::ofstream logf(run.path("train_log.txt"));
        for (const auto& e : log) {
            kv::Record rec;
            rec.emplace_back("epoch", std::to_string(e.epoch));
            std::ostringstream lr, lo, ac;
            lr << e.lr;
            lo << std::setprecision(10) << e.loss;
            ac << std::setprecision(10) << e.accuracy;
            rec.emplace_back("lr", lr.str());
            rec.emplace_back("loss", lo.str());
            rec.emplace_back("acc", ac.str());
            logf << kv::serialize_record(rec) << '\n';
        }
    }
    run.fields.set("run", "final_accuracy", std::to_string(log.back().accuracy));
    run.finish();
    std::printf("train %s/%s: epochs=%zu final_acc=%.4f final_loss=%.5f\n",
                model.c_str(), loss.c_str(), log.size(), log.back().accuracy,
                log.back().loss);
}

// ---------------------------------------------------------------------------
// eval

struct LoadedCheckpoint {
    nn::Model model;
    hrr::Codebook book;
    std::string loss_label;
};

LoadedCheckpoint load_checkpoint_bundle(const std::string& path) {
    LoadedCheckpoint out{nn::load_checkpoint(path), {}, ""};
    out.loss_label = nn::to_string(out.model.spec().head);
    if (out.model.spec().head == nn::HeadKind::Hrr) {
        const fs::path book_path = fs::path(path).parent_path() / "codebook.bin";
        out.book = hrr::load_codebook(book_path.string());
    }
    return out;
}

void cmd_eval(const std::vector<std::string>& argv,
              const std::vector<std::string>& checkpoints,
              const std::string& data_dir, const std::string& variants_arg,
              int saliency_sample, const std::string& out) {
    std::vector<std::string> variants;
    if (variants_arg == "all7") {
        variants = kEvalSeven;
    } else if (variants_arg == "all") {
        for (const auto& [id, name] : data::variant_names()) variants.push_back(name);
    } else {
        std::istringstream in(variants_arg);
        std::string tok;
        while (std::getline(in, tok, ',')) variants.push_back(kv::trim(tok));
    }
    if (checkpoints.empty()) throw ValidationError("eval: need --checkpoint");

    std::vector<LoadedCheckpoint> models;
    for (const auto& c : checkpoints) models.push_back(load_checkpoint_bundle(c));

    report::AccuracyTable table;
    for (const auto& variant : variants) {
        const bool boundary_test = variant == "boundary_polygons";
        const auto loaded = data::load_dataset_dir(
            (fs::path(data_dir) / variant).string(),
            boundary_test ? data::SplitFilter::TestOnly : data::SplitFilter::All);
        for (auto& ckpt : models) {
            const bool hrr_head = ckpt.model.spec().head == nn::HeadKind::Hrr;
            const auto preds = nn::predict(ckpt.model, loaded.data,
                                           hrr_head ? &ckpt.book : nullptr);
            report::EvalColumn col;
            col.variant = variant;
            col.loss = ckpt.loss_label;
            col.images = static_cast<int>(preds.size());
            std::array<int, 6> total{}, hits{};
            std::array<double, 6> pred_sum{};
            for (std::size_t i = 0; i < preds.size(); ++i) {
                const int label = loaded.data.labels[i];
                total[static_cast<std::size_t>(label)]++;
                pred_sum[static_cast<std::size_t>(label)] += preds[i] + 1;
                if (preds[i] == label) hits[static_cast<std::size_t>(label)]++;
            }
            double mean_acc = 0.0;
            for (int c = 0; c < 6; ++c) {
                const auto ci = static_cast<std::size_t>(c);
                col.acc[ci] =
                    total[ci] ? static_cast<double>(hits[ci]) / total[ci] : 0.0;
                col.mean_pred[ci] = total[ci] ? pred_sum[ci] / total[ci] : 0.0;
                mean_acc += col.acc[ci];
            }
            col.mean_acc = mean_acc / 6.0;
            col.overcount6 = report::overcount_flag(col.acc, col.mean_pred);

            // Boundary-mass statistic over a fixed per-class sample.
            if (saliency_sample > 0) {
                double mass = 0.0;
                int counted = 0;
                std::array<int, 6> taken{};
                const int per_class = saliency_sample / 6 + 1;
                const std::size_t stride =
                    static_cast<std::size_t>(loaded.manifest.canvas) *
                    loaded.manifest.canvas;
                for (std::size_t i = 0; i < loaded.records.size(); ++i) {
                    const int label = loaded.data.labels[i];
                    if (taken[static_cast<std::size_t>(label)] >= per_class) continue;
                    taken[static_cast<std::size_t>(label)]++;
                    data::ImageGray img;
                    img.height = loaded.manifest.canvas;
                    img.width = loaded.manifest.canvas;
                    img.pixels.assign(
                        loaded.data.images.data.begin() + i * stride,
                        loaded.data.images.data.begin() + (i + 1) * stride);
                    const auto sal = saliency::saliency_map(
                        ckpt.model, img, hrr_head ? &ckpt.book : nullptr);
                    mass += saliency::boundary_mass_ratio(sal.map,
                                                          loaded.records[i].scene);
                    ++counted;
                    if (counted >= saliency_sample) break;
                }
                col.boundary_mass = counted ? mass / counted : 0.0;
            }
            table.columns.push_back(col);
        }
    }

    RunContext run("eval", argv, out);
    run.fields.set("run", "checkpoints", join_args(checkpoints));
    run.fields.set("run", "variants", variants_arg);
    run.fields.set("run", "saliency_sample", std::to_string(saliency_sample));
    {
        std::ofstream f(run.path("accuracy_table.kv"));
        f << report::serialize_accuracy_table(table);
    }
    {
        std::ofstream f(run.path("accuracy_table.txt"));
        f << report::format_accuracy_text(table);
    }
    run.finish();
    std::cout << report::format_accuracy_text(table);
}

// ---------------------------------------------------------------------------
// saliency

void cmd_saliency(const std::vector<std::string>& argv,
                  const std::string& checkpoint, const std::string& data_dir,
                  const std::string& variant, int per_class,
                  const std::string& out) {
    auto ckpt = load_checkpoint_bundle(checkpoint);
    const bool hrr_head = ckpt.model.spec().head == nn::HeadKind::Hrr;
    const auto loaded =
        data::load_dataset_dir((fs::path(data_dir) / variant).string());

    RunContext run("saliency", argv, out);
    run.fields.set("run", "checkpoint", checkpoint);
    run.fields.set("run", "variant", variant);
    run.fields.set("run", "score",
                   hrr_head ? "winning_cosine_similarity" : "winning_logit");
    std::ofstream rep(run.path("saliency_report.txt"));
    rep << "# score = " << (hrr_head ? "winning cosine similarity" : "winning logit")
        << ", map = |d(score)/d(pixel)|, per-image max-normalized\n";

    std::array<int, 6> taken{};
    const std::size_t stride =
        static_cast<std::size_t>(loaded.manifest.canvas) * loaded.manifest.canvas;
    for (std::size_t i = 0; i < loaded.records.size(); ++i) {
        const int label = loaded.data.labels[i];
        if (taken[static_cast<std::size_t>(label)] >= per_class) continue;
        taken[static_cast<std::size_t>(label)]++;
        data::ImageGray img;
        img.height = loaded.manifest.canvas;
        img.width = loaded.manifest.canvas;
        img.pixels.assign(loaded.data.images.data.begin() + i * stride,
                          loaded.data.images.data.begin() + (i + 1) * stride);
        const auto sal =
            saliency::saliency_map(ckpt.model, img, hrr_head ? &ckpt.book : nullptr);
        std::string name = loaded.records[i].file;
        for (char& ch : name)
            if (ch == '/') ch = '_';
        name = name.substr(0, name.size() - 4) + "_saliency.pgm";
        saliency::write_saliency_pgm(run.path(name), sal.map);
        kv::Record rec;
        rec.emplace_back("image", loaded.records[i].file);
        rec.emplace_back("label", std::to_string(label + 1));
        rec.emplace_back("pred", std::to_string(sal.predicted + 1));
        std::ostringstream score, mass;
        score << std::setprecision(6) << sal.score;
        mass << std::setprecision(6)
             << saliency::boundary_mass_ratio(sal.map, loaded.records[i].scene);
        rec.emplace_back("score", score.str());
        rec.emplace_back("boundary_mass", mass.str());
        rec.emplace_back("map", name);
        rep << kv::serialize_record(rec) << '\n';
    }
    rep.close();
    run.finish();
    std::printf("saliency maps written to %s\n", out.c_str());
}

// ---------------------------------------------------------------------------
// vsa-bench

void cmd_vsa_bench(const std::vector<std::string>& argv, const std::string& out) {
    RunContext run("vsa-bench", argv, out);
    std::ofstream rep(run.path("vsa_bench.txt"));
    const auto emit = [&](const kv::Record& rec) {
        const std::string line = kv::serialize_record(rec);
        rep << line << '\n';
        std::printf("%s\n", line.c_str());
    };

    for (const std::size_t d : {8u, 64u, 100u}) {
        CounterRng rng(1000 + d);
        double worst = 0.0;
        for (int t = 0; t < 1000; ++t) {
            const auto k = hrr::project(hrr::sample_vector(d, rng));
            const auto v = hrr::sample_vector(d, rng);
            const auto back = hrr::unbind(hrr::bind(k, v), k);
            for (std::size_t i = 0; i < d; ++i)
                worst = std::max(worst, std::abs(back[i] - v[i]));
        }
        kv::Record rec;
        rec.emplace_back("check", "round_trip");
        rec.emplace_back("dim", std::to_string(d));
        std::ostringstream w;
        w << std::scientific << std::setprecision(3) << worst;
        rec.emplace_back("max_error", w.str());
        rec.emplace_back("pass", worst < 1e-6 ? "1" : "0");
        emit(rec);
    }
    {
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            const auto book = hrr::make_codebook(kNumClasses, kFeatureDim, seed);
            for (const auto& t : book.targets)
                for (std::size_t i = 0; i < t.dim(); ++i)
                    worst = std::max(worst, std::abs(t[i]));
        }
        const double limit = 4.0 * std::sqrt(2.0) / std::sqrt(64.0);
        kv::Record rec;
        rec.emplace_back("check", "bound_range");
        std::ostringstream w, l;
        w << std::setprecision(6) << worst;
        l << std::setprecision(6) << limit;
        rec.emplace_back("max_target_entry", w.str());
        rec.emplace_back("limit", l.str());
        rec.emplace_back("pass", worst <= limit ? "1" : "0");
        emit(rec);
    }
    {
        const auto book = hrr::make_codebook(kNumClasses, kFeatureDim, 2024);
        CounterRng rng(2025);
        int hits = 0;
        for (int t = 0; t < 1000; ++t) {
            const int c = static_cast<int>(rng.next_below(kNumClasses));
            nn::Tensor row = nn::Tensor::zeros({1, kFeatureDim});
            for (int j = 0; j < kFeatureDim; ++j)
                row[static_cast<std::size_t>(j)] =
                    book.targets[static_cast<std::size_t>(c)]
                                [static_cast<std::size_t>(j)] +
                    0.1 * rng.next_gaussian();
            if (hrr::decode(hrr::BatchPrediction{std::move(row)}, book).argmax[0] ==
                c)
                ++hits;
        }
        kv::Record rec;
        rec.emplace_back("check", "noisy_retrieval");
        rec.emplace_back("sigma", "0.1");
        std::ostringstream a;
        a << std::setprecision(4) << hits / 1000.0;
        rec.emplace_back("accuracy", a.str());
        rec.emplace_back("pass", hits >= 990 ? "1" : "0");
        emit(rec);
    }
    rep.close();
    run.finish();
}

// ---------------------------------------------------------------------------
// replay

int run_command(const std::vector<std::string>& args);

void cmd_replay(const std::string& manifest_path, const std::string& out) {
    const kv::Document manifest = kv::load_file(manifest_path);
    const std::string argv_line = manifest.get("run", "argv");
    if (argv_line.empty()) throw ValidationError("replay: manifest has no argv");
    std::vector<std::string> args;
    {
        std::istringstream in(argv_line);
        std::string tok;
        while (in >> tok) args.push_back(tok);
    }
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--out") args[i + 1] = out;
    std::printf("replaying: %s\n", join_args(args).c_str());
    const int rc = run_command(args);
    if (rc != 0) throw ValidationError("replay: command failed");

    int checked = 0, mismatched = 0;
    for (const auto& [section, entries] : manifest.sections) {
        if (section != "outputs") continue;
        for (const auto& [rel, digest] : entries) {
            const std::string have = sha256_file_hex((fs::path(out) / rel).string());
            ++checked;
            if (have != digest) {
                ++mismatched;
                std::printf("MISMATCH %s\n", rel.c_str());
            }
        }
    }
    std::printf("replay: %d outputs checked, %d mismatched\n", checked, mismatched);
    if (mismatched > 0) throw ValidationError("replay: outputs differ");
}

// ---------------------------------------------------------------------------

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"holographic-loss subitizing toolkit"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate dataset variants");
    std::string gen_variant = "train_circles", gen_profile = "desk", gen_out = "out";
    std::uint64_t gen_seed = 7;
    gen->add_option("--variant", gen_variant, "variant name or 'all'");
    gen->add_option("--profile", gen_profile, "desk|full");
    gen->add_option("--seed", gen_seed, "dataset seed");
    gen->add_option("--out", gen_out, "output directory");

    // train
    auto* train = app.add_subcommand("train", "train a model on a variant");
    std::string tr_data = "out", tr_variant = "train_circles", tr_profile = "desk";
    std::string tr_loss = "hrr", tr_model = "cnn", tr_out = "run";
    std::uint64_t tr_seed = 7;
    int tr_epochs = 0;
    double tr_stop = -1.0;
    train->add_option("--data", tr_data, "dataset root (from gen)");
    train->add_option("--variant", tr_variant, "training variant");
    train->add_option("--profile", tr_profile, "desk|full");
    train->add_option("--loss", tr_loss, "hrr|ce");
    train->add_option("--model", tr_model, "cnn|vit");
    train->add_option("--seed", tr_seed, "training seed");
    train->add_option("--epochs", tr_epochs, "override profile epoch count");
    train->add_option("--stop-at-accuracy", tr_stop,
                      "stop once train accuracy reaches this value");
    train->add_option("--out", tr_out, "output directory");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate checkpoints on variants");
    std::vector<std::string> ev_ckpts;
    std::string ev_data = "out", ev_variants = "all7", ev_out = "eval";
    int ev_sal = 12;
    eval->add_option("--checkpoint", ev_ckpts, "checkpoint path (repeatable)");
    eval->add_option("--data", ev_data, "dataset root");
    eval->add_option("--variants", ev_variants,
                     "comma list, 'all7' (test variants) or 'all'");
    eval->add_option("--saliency-sample", ev_sal,
                     "images per variant for the boundary-mass statistic (0 off)");
    eval->add_option("--out", ev_out, "output directory");

    // saliency
    auto* sal = app.add_subcommand("saliency", "export saliency maps");
    std::string sa_ckpt, sa_data = "out", sa_variant = "train_circles",
                sa_out = "saliency";
    int sa_per_class = 2;
    sal->add_option("--checkpoint", sa_ckpt, "checkpoint path")->required();
    sal->add_option("--data", sa_data, "dataset root");
    sal->add_option("--variant", sa_variant, "variant to visualize");
    sal->add_option("--per-class", sa_per_class, "images per class");
    sal->add_option("--out", sa_out, "output directory");

    // vsa-bench
    auto* bench = app.add_subcommand("vsa-bench", "algebra property report");
    std::string be_out = "bench";
    bench->add_option("--out", be_out, "output directory");

    // replay
    auto* replay = app.add_subcommand("replay", "re-run a manifest and verify");
    std::string re_manifest, re_out = "replay";
    replay->add_option("--manifest", re_manifest, "run_manifest.txt path")
        ->required();
    replay->add_option("--out", re_out, "output directory");


    std::vector<std::string> mutable_args = args;
    // Pre-scan for --config so its values can become defaults.
    for (std::size_t i = 0; i + 1 < mutable_args.size(); ++i) {
        if (mutable_args[i] != "--config") continue;
        const kv::Document cfg = kv::load_file(mutable_args[i + 1]);
        const auto inject = [&](const std::string& sub, const std::string& key) {
            if (!cfg.has(sub, key)) return;
            // Only inject when the flag is absent from argv.
            bool sub_present = !mutable_args.empty() && mutable_args[0] == sub;
            if (!sub_present) return;
            for (std::size_t j = 0; j < mutable_args.size(); ++j)
                if (mutable_args[j] == "--" + key) return;
            mutable_args.push_back("--" + key);
            mutable_args.push_back(cfg.get(sub, key));
        };
        for (const std::string sub : {"gen", "train", "eval", "saliency"})
            for (const std::string key :
                 {"variant", "profile", "seed", "out", "loss", "model", "data",
                  "variants", "checkpoint", "epochs"})
                inject(sub, key);
        mutable_args.erase(mutable_args.begin() + static_cast<long>(i),
                           mutable_args.begin() + static_cast<long>(i) + 2);
        break;
    }

    std::vector<std::string> reversed(mutable_args.rbegin(), mutable_args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (gen->parsed()) {
        cmd_gen(mutable_args, gen_variant, gen_profile, gen_seed, gen_out);
    } else if (train->parsed()) {
        cmd_train(mutable_args, tr_data, tr_variant, tr_profile, tr_loss, tr_model,
                  tr_seed, tr_epochs, tr_stop, tr_out);
    } else if (eval->parsed()) {
        cmd_eval(mutable_args, ev_ckpts, ev_data, ev_variants, ev_sal, ev_out);
    } else if (sal->parsed()) {
        cmd_saliency(mutable_args, sa_ckpt, sa_data, sa_variant, sa_per_class,
                     sa_out);
    } else if (bench->parsed()) {
        cmd_vsa_bench(mutable_args, be_out);
    } else if (replay->parsed()) {
        cmd_replay(re_manifest, re_out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run_command(args);
    } catch (const PlacementFailure& e) {
        std::fprintf(stderr, "placement failure: %s\n", e.what());
        return 3;
    } catch (const TrainingDiverged& e) {
        std::fprintf(stderr, "training diverged: %s\n", e.what());
        return 4;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
