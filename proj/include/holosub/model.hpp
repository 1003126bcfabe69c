#pragma once

// Model description, construction, and checkpoint I/O for the two
// architectures: a small CNN and a compact ViT encoder. The head is either
// a tanh feature head (paired with the bound-target loss) or a raw logit
// head (paired with cross entropy).

#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "holosub/digest.hpp"
#include "holosub/errors.hpp"
#include "holosub/kv.hpp"
#include "holosub/layers.hpp"
#include "holosub/tensor.hpp"

namespace holosub::nn {

enum class ModelKind { Cnn, Vit };
enum class HeadKind { Hrr, Ce };

struct ConvStage {
    int filters = 0;
    int kernel = 5;
    int stride = 1;
    bool relu = true;
    int pool = 2;  // 0 disables pooling
};

struct CnnSpec {
    std::vector<ConvStage> stages;
    std::vector<int> dense_widths;
};

struct VitSpec {
    int patch = 10;
    int embed = 256;
    int heads = 4;
    int blocks = 6;
    int mlp_ratio = 4;
};

struct ModelSpec {
    ModelKind kind = ModelKind::Cnn;
    int input_h = 0;
    int input_w = 0;
    int input_c = 1;
    HeadKind head = HeadKind::Hrr;
    int head_width = 64;  // H for the feature head, C for the logit head
    double dropout = 0.1;
    CnnSpec cnn;
    VitSpec vit;

    void validate() const {
        if (input_h < 4 || input_w < 4 || input_c < 1)
            throw ValidationError("ModelSpec: bad input dimensions");
        if (head_width < 1) throw ValidationError("ModelSpec: bad head width");
        if (dropout < 0.0 || dropout >= 1.0)
            throw ValidationError("ModelSpec: dropout must be in [0,1)");
        if (kind == ModelKind::Cnn) {
            if (cnn.stages.empty())
                throw ValidationError("ModelSpec: cnn needs at least one conv stage");
        } else {
            if (vit.patch < 1 || input_h % vit.patch != 0 || input_w % vit.patch != 0)
                throw ValidationError("ModelSpec: patch size must divide image sides");
            if (vit.embed < 1 || vit.heads < 1 || vit.embed % vit.heads != 0)
                throw ValidationError("ModelSpec: heads must divide embed dim");
            if (vit.blocks < 1 || vit.mlp_ratio < 1)
                throw ValidationError("ModelSpec: bad vit geometry");
        }
    }
};

// The spec's default small CNN.
inline CnnSpec default_cnn() {
    CnnSpec spec;
    spec.stages = {{16, 5, 1, true, 2}, {32, 5, 1, true, 2}};
    spec.dense_widths = {128};
    return spec;
}

inline std::string to_string(ModelKind k) { return k == ModelKind::Cnn ? "cnn" : "vit"; }
inline std::string to_string(HeadKind k) { return k == HeadKind::Hrr ? "hrr" : "ce"; }

inline ModelKind model_kind_from(const std::string& s) {
    if (s == "cnn") return ModelKind::Cnn;
    if (s == "vit") return ModelKind::Vit;
    throw ValidationError("unknown model kind: " + s);
}

inline HeadKind head_kind_from(const std::string& s) {
    if (s == "hrr") return HeadKind::Hrr;
    if (s == "ce") return HeadKind::Ce;
    throw ValidationError("unknown head kind: " + s);
}

inline kv::Document spec_to_kv(const ModelSpec& spec) {
    kv::Document doc;
    const std::string s = "model";
    doc.set(s, "kind", to_string(spec.kind));
    doc.set(s, "input_h", std::to_string(spec.input_h));
    doc.set(s, "input_w", std::to_string(spec.input_w));
    doc.set(s, "input_c", std::to_string(spec.input_c));
    doc.set(s, "head", to_string(spec.head));
    doc.set(s, "head_width", std::to_string(spec.head_width));
    doc.set(s, "dropout", std::to_string(spec.dropout));
    if (spec.kind == ModelKind::Cnn) {
        for (std::size_t i = 0; i < spec.cnn.stages.size(); ++i) {
            const ConvStage& st = spec.cnn.stages[i];
            std::ostringstream v;
            v << st.filters << ',' << st.kernel << ',' << st.stride << ','
              << (st.relu ? 1 : 0) << ',' << st.pool;
            doc.set(s, "conv" + std::to_string(i), v.str());
        }
        for (std::size_t i = 0; i < spec.cnn.dense_widths.size(); ++i)
            doc.set(s, "dense" + std::to_string(i),
                    std::to_string(spec.cnn.dense_widths[i]));
    } else {
        doc.set(s, "patch", std::to_string(spec.vit.patch));
        doc.set(s, "embed", std::to_string(spec.vit.embed));
        doc.set(s, "heads", std::to_string(spec.vit.heads));
        doc.set(s, "blocks", std::to_string(spec.vit.blocks));
        doc.set(s, "mlp_ratio", std::to_string(spec.vit.mlp_ratio));
    }
    return doc;
}

inline ModelSpec spec_from_kv(const kv::Document& doc) {
    ModelSpec spec;
    const std::string s = "model";
    spec.kind = model_kind_from(doc.get(s, "kind"));
    spec.input_h = std::stoi(doc.get(s, "input_h"));
    spec.input_w = std::stoi(doc.get(s, "input_w"));
    spec.input_c = std::stoi(doc.get(s, "input_c"));
    spec.head = head_kind_from(doc.get(s, "head"));
    spec.head_width = std::stoi(doc.get(s, "head_width"));
    spec.dropout = std::stod(doc.get(s, "dropout"));
    if (spec.kind == ModelKind::Cnn) {
        for (int i = 0; doc.has(s, "conv" + std::to_string(i)); ++i) {
            std::istringstream in(doc.get(s, "conv" + std::to_string(i)));
            ConvStage st;
            char comma;
            int relu_flag;
            in >> st.filters >> comma >> st.kernel >> comma >> st.stride >> comma >>
                relu_flag >> comma >> st.pool;
            st.relu = relu_flag != 0;
            spec.cnn.stages.push_back(st);
        }
        for (int i = 0; doc.has(s, "dense" + std::to_string(i)); ++i)
            spec.cnn.dense_widths.push_back(
                std::stoi(doc.get(s, "dense" + std::to_string(i))));
    } else {
        spec.vit.patch = std::stoi(doc.get(s, "patch"));
        spec.vit.embed = std::stoi(doc.get(s, "embed"));
        spec.vit.heads = std::stoi(doc.get(s, "heads"));
        spec.vit.blocks = std::stoi(doc.get(s, "blocks"));
        spec.vit.mlp_ratio = std::stoi(doc.get(s, "mlp_ratio"));
    }
    spec.validate();
    return spec;
}

inline std::string spec_digest(const ModelSpec& spec) {
    return sha256_hex(kv::serialize(spec_to_kv(spec)));
}

// Pre-norm transformer encoder block:
//   x + drop(attn(ln1(x))), then h + drop(mlp(ln2(h))).
class TransformerBlock : public Layer {
public:
    TransformerBlock(std::string id, std::size_t embed, std::size_t heads,
                     std::size_t mlp_ratio, double dropout)
        : id_(id),
          ln1_(id + ".ln1", embed),
          attn_(id + ".attn", embed, heads),
          drop1_(id + ".drop1", dropout),
          ln2_(id + ".ln2", embed),
          fc1_(id + ".fc1", embed, embed * mlp_ratio),
          gelu_(id + ".gelu"),
          fc2_(id + ".fc2", embed * mlp_ratio, embed),
          drop2_(id + ".drop2", dropout) {}

    std::string name() const override { return id_; }

    void init(CounterRng& rng) override {
        ln1_.init(rng);
        attn_.init(rng);
        ln2_.init(rng);
        fc1_.init(rng);
        fc2_.init(rng);
    }

    Tensor forward(const Tensor& x, bool train, CounterRng* rng,
                   LayerCache* cache) const override {
        if (cache) cache->children.resize(8);
        auto sub = [&](std::size_t i) -> LayerCache* {
            return cache ? &cache->children[i] : nullptr;
        };
        Tensor a = attn_.forward(ln1_.forward(x, train, rng, sub(0)), train, rng, sub(1));
        a = drop1_.forward(a, train, rng, sub(2));
        Tensor h = x;
        for (std::size_t i = 0; i < h.numel(); ++i) h[i] += a[i];
        Tensor m = fc1_.forward(ln2_.forward(h, train, rng, sub(3)), train, rng, sub(4));
        m = gelu_.forward(m, train, rng, sub(5));
        m = fc2_.forward(m, train, rng, sub(6));
        m = drop2_.forward(m, train, rng, sub(7));
        for (std::size_t i = 0; i < h.numel(); ++i) m[i] += h[i];
        return m;
    }

    Tensor backward(const Tensor& gy, const LayerCache& cache) override {
        Tensor gm = drop2_.backward(gy, cache.children.at(7));
        gm = fc2_.backward(gm, cache.children.at(6));
        gm = gelu_.backward(gm, cache.children.at(5));
        gm = fc1_.backward(gm, cache.children.at(4));
        Tensor gh = ln2_.backward(gm, cache.children.at(3));
        for (std::size_t i = 0; i < gh.numel(); ++i) gh[i] += gy[i];
        Tensor ga = drop1_.backward(gh, cache.children.at(2));
        ga = attn_.backward(ga, cache.children.at(1));
        Tensor gx = ln1_.backward(ga, cache.children.at(0));
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += gh[i];
        return gx;
    }

    void collect_params(std::vector<NamedParam>& out) override {
        ln1_.collect_params(out);
        attn_.collect_params(out);
        ln2_.collect_params(out);
        fc1_.collect_params(out);
        fc2_.collect_params(out);
    }

    void zero_grads() override {
        ln1_.zero_grads();
        attn_.zero_grads();
        ln2_.zero_grads();
        fc1_.zero_grads();
        fc2_.zero_grads();
    }

private:
    std::string id_;
    LayerNorm ln1_;
    MultiHeadAttention attn_;
    Dropout drop1_;
    LayerNorm ln2_;
    Dense fc1_;
    Gelu gelu_;
    Dense fc2_;
    Dropout drop2_;
};

// A sequential stack instantiated from a ModelSpec; owns parameters and
// their gradients. Construction with a seed is the initializer: layer
// parameters are drawn in a fixed order from a forked stream per layer.
class Model {
public:
    Model(const ModelSpec& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
        spec_.validate();
        build();
        CounterRng root(seed);
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            CounterRng layer_rng = root.fork(i);
            layers_[i]->init(layer_rng);
        }
    }

    const ModelSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }

    Tensor forward(const Tensor& batch, bool train, CounterRng* dropout_rng,
                   std::vector<LayerCache>* caches) const {
        if (batch.ndim() != 4 ||
            batch.dim(1) != static_cast<std::size_t>(spec_.input_h) ||
            batch.dim(2) != static_cast<std::size_t>(spec_.input_w) ||
            batch.dim(3) != static_cast<std::size_t>(spec_.input_c))
            throw ValidationError("forward: batch shape " + shape_str(batch) +
                                  " does not match model input");
        for (double v : batch.data)
            if (!(v >= 0.0 && v <= 1.0))
                throw ValidationError("forward: pixel values must lie in [0,1]");
        if (caches) caches->assign(layers_.size(), LayerCache{});
        Tensor x = batch;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            x = layers_[i]->forward(x, train, dropout_rng,
                                    caches ? &(*caches)[i] : nullptr);
        }
        if (!x.all_finite())
            throw NonFiniteActivation("forward: non-finite activations");
        return x;
    }

    // Returns the gradient with respect to the input batch.
    Tensor backward(const Tensor& output_grad, const std::vector<LayerCache>& caches) {
        if (caches.size() != layers_.size())
            throw ValidationError("backward: stale or missing caches");
        Tensor g = output_grad;
        for (std::size_t i = layers_.size(); i-- > 0;)
            g = layers_[i]->backward(g, caches[i]);
        return g;
    }

    std::vector<NamedParam> params() {
        std::vector<NamedParam> out;
        for (auto& l : layers_) l->collect_params(out);
        return out;
    }

    void zero_grads() {
        for (auto& l : layers_) l->zero_grads();
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (const auto& p : params()) n += p.value->numel();
        return n;
    }

private:
    void build() {
        layers_.clear();
        if (spec_.kind == ModelKind::Cnn) {
            int c = spec_.input_c;
            int h = spec_.input_h, w = spec_.input_w;
            for (std::size_t i = 0; i < spec_.cnn.stages.size(); ++i) {
                const ConvStage& st = spec_.cnn.stages[i];
                layers_.push_back(std::make_unique<Conv2D>(
                    "conv" + std::to_string(i), c, st.filters, st.kernel, st.stride));
                h = (h + (st.kernel - 1) - st.kernel) / st.stride + 1;
                w = (w + (st.kernel - 1) - st.kernel) / st.stride + 1;
                if (st.relu)
                    layers_.push_back(
                        std::make_unique<Relu>("relu" + std::to_string(i)));
                if (st.pool == 2) {
                    layers_.push_back(
                        std::make_unique<MaxPool2>("pool" + std::to_string(i)));
                    h /= 2;
                    w /= 2;
                } else if (st.pool != 0) {
                    throw ValidationError("only pool=2 or pool=0 supported");
                }
                c = st.filters;
            }
            layers_.push_back(std::make_unique<Flatten>("flatten"));
            int width = h * w * c;
            for (std::size_t i = 0; i < spec_.cnn.dense_widths.size(); ++i) {
                const int next = spec_.cnn.dense_widths[i];
                layers_.push_back(std::make_unique<Dense>(
                    "dense" + std::to_string(i), width, next));
                layers_.push_back(
                    std::make_unique<Relu>("denserelu" + std::to_string(i)));
                width = next;
            }
            layers_.push_back(std::make_unique<Dropout>("drop", spec_.dropout));
            layers_.push_back(
                std::make_unique<Dense>("head", width, spec_.head_width));
        } else {
            const VitSpec& v = spec_.vit;
            const std::size_t tokens =
                static_cast<std::size_t>(spec_.input_h / v.patch) *
                static_cast<std::size_t>(spec_.input_w / v.patch);
            const std::size_t patch_dim = static_cast<std::size_t>(v.patch) *
                                          static_cast<std::size_t>(v.patch) *
                                          static_cast<std::size_t>(spec_.input_c);
            layers_.push_back(std::make_unique<Patchify>("patchify", v.patch));
            layers_.push_back(std::make_unique<Dense>("embed", patch_dim, v.embed));
            layers_.push_back(
                std::make_unique<PositionalEmbedding>("pos", tokens, v.embed));
            layers_.push_back(std::make_unique<Dropout>("embdrop", spec_.dropout));
            for (int i = 0; i < v.blocks; ++i)
                layers_.push_back(std::make_unique<TransformerBlock>(
                    "block" + std::to_string(i), v.embed, v.heads, v.mlp_ratio,
                    spec_.dropout));
            layers_.push_back(std::make_unique<LayerNorm>("final_ln", v.embed));
            layers_.push_back(std::make_unique<MeanPoolTokens>("pool"));
            layers_.push_back(
                std::make_unique<Dense>("head", v.embed, spec_.head_width));
        }
        if (spec_.head == HeadKind::Hrr)
            layers_.push_back(std::make_unique<Tanh>("tanh"));
    }

    ModelSpec spec_;
    std::uint64_t seed_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Checkpoint: magic, spec digest, length-prefixed spec text, then named
// tensors with shapes as little-endian 64-bit floats.
inline constexpr char kCheckpointMagic[8] = {'H', 'S', 'U', 'B', 'C', 'K', 'P', '1'};

inline void save_checkpoint(const std::string& path, Model& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot write: " + path);
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    const std::string spec_text = kv::serialize(spec_to_kv(model.spec()));
    const std::string digest = sha256_hex(spec_text);
    out.write(digest.data(), 64);
    const std::uint64_t spec_len = spec_text.size();
    out.write(reinterpret_cast<const char*>(&spec_len), sizeof spec_len);
    out.write(spec_text.data(), static_cast<std::streamsize>(spec_text.size()));
    const std::uint64_t seed = model.seed();
    out.write(reinterpret_cast<const char*>(&seed), sizeof seed);
    const auto params = model.params();
    const std::uint32_t count = static_cast<std::uint32_t>(params.size());
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (const auto& p : params) {
        const std::uint32_t name_len = static_cast<std::uint32_t>(p.name.size());
        out.write(reinterpret_cast<const char*>(&name_len), sizeof name_len);
        out.write(p.name.data(), name_len);
        const std::uint32_t ndim = static_cast<std::uint32_t>(p.value->ndim());
        out.write(reinterpret_cast<const char*>(&ndim), sizeof ndim);
        for (std::size_t d : p.value->shape) {
            const std::uint64_t d64 = d;
            out.write(reinterpret_cast<const char*>(&d64), sizeof d64);
        }
        out.write(reinterpret_cast<const char*>(p.value->data.data()),
                  static_cast<std::streamsize>(sizeof(double) * p.value->numel()));
    }
    if (!out) throw IoError("checkpoint: write failed: " + path);
}

inline Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
        throw ValidationError("checkpoint: bad magic: " + path);
    std::string digest(64, '\0');
    in.read(digest.data(), 64);
    std::uint64_t spec_len = 0;
    in.read(reinterpret_cast<char*>(&spec_len), sizeof spec_len);
    if (!in || spec_len > (1u << 20))
        throw ValidationError("checkpoint: bad spec block: " + path);
    std::string spec_text(spec_len, '\0');
    in.read(spec_text.data(), static_cast<std::streamsize>(spec_len));
    if (sha256_hex(spec_text) != digest)
        throw ValidationError("checkpoint: spec digest mismatch: " + path);
    std::uint64_t seed = 0;
    in.read(reinterpret_cast<char*>(&seed), sizeof seed);
    Model model(spec_from_kv(kv::parse(spec_text)), seed);
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof count);
    auto params = model.params();
    if (count != params.size())
        throw ValidationError("checkpoint: tensor count mismatch: " + path);
    for (auto& p : params) {
        std::uint32_t name_len = 0;
        in.read(reinterpret_cast<char*>(&name_len), sizeof name_len);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (name != p.name)
            throw ValidationError("checkpoint: tensor order mismatch at " + p.name);
        std::uint32_t ndim = 0;
        in.read(reinterpret_cast<char*>(&ndim), sizeof ndim);
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) {
            std::uint64_t d64 = 0;
            in.read(reinterpret_cast<char*>(&d64), sizeof d64);
            d = static_cast<std::size_t>(d64);
        }
        if (shape != p.value->shape)
            throw ValidationError("checkpoint: shape mismatch at " + p.name);
        in.read(reinterpret_cast<char*>(p.value->data.data()),
                static_cast<std::streamsize>(sizeof(double) * p.value->numel()));
        if (!in) throw IoError("checkpoint: truncated tensors: " + path);
    }
    return model;
}

}  // namespace holosub::nn
