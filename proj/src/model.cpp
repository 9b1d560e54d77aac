#include "uat/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "uat/errors.hpp"
#include "uat/rng.hpp"

namespace uat {

void ModelConfig::validate() const {
    if (frame_height < 1 || frame_width < 1 || n_classes < 2 || n_frames < 1 ||
        latent_dim < 1 || enc_hidden < 1 || dec_hidden < 1 || clf_hidden < 1)
        throw validation_error("model dimensions must be positive (n_classes >= 2)");
}

namespace {

// seed-stream id per parameter tensor, fixed by declared order
enum : std::uint64_t { kStreamInit = 1 };

Tensor xavier(int rows, int cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    Tensor t = Tensor::zeros({rows, cols});
    for (auto& v : t.data) v = rng.uniform(-limit, limit);
    return t;
}

struct ParamShape {
    const char* name;
    int rows, cols;
    bool bias;
};

std::vector<ParamShape> param_shapes(const ModelConfig& c) {
    const int out_dim = c.n_pixels() * c.n_classes;
    return {
        {"enc_w", c.input_dim(), c.enc_hidden, false},
        {"enc_b", 1, c.enc_hidden, true},
        {"mu_w", c.enc_hidden, c.latent_dim, false},
        {"mu_b", 1, c.latent_dim, true},
        {"logvar_w", c.enc_hidden, c.latent_dim, false},
        {"logvar_b", 1, c.latent_dim, true},
        {"dec_w1", c.latent_dim, c.dec_hidden, false},
        {"dec_b1", 1, c.dec_hidden, true},
        {"dec_w2", c.dec_hidden, out_dim, false},
        {"dec_b2", 1, out_dim, true},
        {"clf_w1", c.n_frames * c.latent_dim, c.clf_hidden, false},
        {"clf_b1", 1, c.clf_hidden, true},
        {"clf_w2", c.clf_hidden, 2, false},
        {"clf_w2_b", 0, 0, true},  // placeholder, replaced below
    };
}

// biases start at zero; weights are Xavier-uniform from a stream derived from
// (seed, parameter index) so initialisation order never matters
NodePtr init_param(const ParamShape& s, std::uint64_t seed, std::uint64_t index) {
    if (s.bias) return leaf(Tensor::zeros({s.rows, s.cols}));
    Rng rng(derive_seed(seed, kStreamInit, index));
    return leaf(xavier(s.rows, s.cols, rng));
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    auto shapes = param_shapes(cfg);
    shapes[13] = {"clf_b2", 1, 2, true};

    ModelParams p;
    p.config = cfg;
    NodePtr* slots[] = {&p.enc_w,  &p.enc_b,  &p.mu_w,   &p.mu_b,   &p.logvar_w,
                        &p.logvar_b, &p.dec_w1, &p.dec_b1, &p.dec_w2, &p.dec_b2,
                        &p.clf_w1, &p.clf_b1, &p.clf_w2, &p.clf_b2};
    for (std::size_t i = 0; i < shapes.size(); ++i)
        *slots[i] = init_param(shapes[i], seed, i);
    return p;
}

std::vector<NodePtr> ModelParams::vae_params() const {
    return {enc_w, enc_b, mu_w, mu_b, logvar_w, logvar_b, dec_w1, dec_b1, dec_w2, dec_b2};
}

std::vector<NodePtr> ModelParams::classifier_params() const {
    return {clf_w1, clf_b1, clf_w2, clf_b2};
}

std::vector<std::pair<std::string, NodePtr>> ModelParams::named_params() const {
    return {{"enc_w", enc_w},   {"enc_b", enc_b},   {"mu_w", mu_w},
            {"mu_b", mu_b},     {"logvar_w", logvar_w}, {"logvar_b", logvar_b},
            {"dec_w1", dec_w1}, {"dec_b1", dec_b1}, {"dec_w2", dec_w2},
            {"dec_b2", dec_b2}, {"clf_w1", clf_w1}, {"clf_b1", clf_b1},
            {"clf_w2", clf_w2}, {"clf_b2", clf_b2}};
}

std::vector<NodePtr> ModelParams::all_params() const {
    auto out = vae_params();
    auto clf = classifier_params();
    out.insert(out.end(), clf.begin(), clf.end());
    return out;
}

ModelParams ModelParams::clone() const {
    ModelParams out;
    out.config = config;
    NodePtr* dst[] = {&out.enc_w,  &out.enc_b,  &out.mu_w,   &out.mu_b,   &out.logvar_w,
                      &out.logvar_b, &out.dec_w1, &out.dec_b1, &out.dec_w2, &out.dec_b2,
                      &out.clf_w1, &out.clf_b1, &out.clf_w2, &out.clf_b2};
    const NodePtr src[] = {enc_w,  enc_b,  mu_w,   mu_b,   logvar_w, logvar_b, dec_w1,
                           dec_b1, dec_w2, dec_b2, clf_w1, clf_b1,   clf_w2,   clf_b2};
    for (int i = 0; i < 14; ++i) *dst[i] = leaf(src[i]->value);
    return out;
}

void ModelParams::reinit_classifier(std::uint64_t seed) {
    auto shapes = param_shapes(config);
    shapes[13] = {"clf_b2", 1, 2, true};
    clf_w1 = init_param(shapes[10], seed, 10);
    clf_b1 = init_param(shapes[11], seed, 11);
    clf_w2 = init_param(shapes[12], seed, 12);
    clf_b2 = init_param(shapes[13], seed, 13);
}

bool ModelParams::all_finite() const {
    for (const auto& p : all_params())
        if (!p->value.all_finite()) return false;
    return true;
}

Tensor frame_to_onehot(const std::vector<std::uint8_t>& pixels, int height, int width,
                       int n_classes) {
    if (static_cast<int>(pixels.size()) != height * width)
        throw validation_error("frame has " + std::to_string(pixels.size()) +
                               " pixels, expected " + std::to_string(height * width));
    Tensor t = Tensor::zeros({height, width, n_classes});
    for (int p = 0; p < height * width; ++p) {
        if (pixels[p] >= n_classes)
            throw validation_error("pixel value " + std::to_string(pixels[p]) +
                                   " out of range for C=" + std::to_string(n_classes));
        t.data[static_cast<std::size_t>(p) * n_classes + pixels[p]] = 1.0;
    }
    return t;
}

namespace {

// recovers the class index per pixel; rejects anything that is not one-hot
std::vector<int> onehot_indices(const Tensor& frame, const ModelConfig& cfg) {
    if (frame.shape != std::vector<int>{cfg.frame_height, cfg.frame_width, cfg.n_classes})
        throw validation_error("frame shape " + frame.shape_str() + " does not match config");
    const int n_pixels = cfg.n_pixels();
    const int c = cfg.n_classes;
    std::vector<int> idx(static_cast<std::size_t>(n_pixels));
    for (int p = 0; p < n_pixels; ++p) {
        int hot = -1;
        for (int k = 0; k < c; ++k) {
            const double v = frame.data[static_cast<std::size_t>(p) * c + k];
            if (v == 1.0) {
                if (hot >= 0) throw validation_error("frame is not one-hot: two classes set");
                hot = k;
            } else if (v != 0.0) {
                throw validation_error("frame is not one-hot: entry neither 0 nor 1");
            }
        }
        if (hot < 0) throw validation_error("frame is not one-hot: no class set");
        // flattened one-hot layout: pixel-major, class within pixel
        idx[p] = p * c + hot;
    }
    return idx;
}

}  // namespace

std::pair<NodePtr, NodePtr> encode(const Tensor& frame, const ModelParams& params) {
    const auto idx = onehot_indices(frame, params.config);
    // x @ enc_w for a one-hot x is a row-gather over enc_w
    NodePtr h = relu(add(embed_sum(params.enc_w, idx), params.enc_b));
    NodePtr mu = add(matmul(h, params.mu_w), params.mu_b);
    NodePtr logvar = add(matmul(h, params.logvar_w), params.logvar_b);
    return {mu, logvar};
}

NodePtr reparameterize(const NodePtr& mu, const NodePtr& logvar, const Tensor& noise) {
    if (!mu->value.same_shape(logvar->value) || !mu->value.same_shape(noise))
        throw validation_error("reparameterize: mu/logvar/noise shapes disagree");
    return add(mu, mul(exp_(mul_scalar(logvar, 0.5)), constant(noise)));
}

NodePtr decode(const NodePtr& z, const ModelParams& params) {
    NodePtr h = relu(add(matmul(z, params.dec_w1), params.dec_b1));
    NodePtr flat = add(matmul(h, params.dec_w2), params.dec_b2);
    return reshape(flat, {params.config.n_pixels(), params.config.n_classes});
}

ClassifierOut classify(const NodePtr& latents, const ModelParams& params) {
    const auto& cfg = params.config;
    if (latents->value.numel() != static_cast<std::int64_t>(cfg.n_frames) * cfg.latent_dim)
        throw validation_error("classifier input has " + std::to_string(latents->value.numel()) +
                               " values, expected T*d = " +
                               std::to_string(cfg.n_frames * cfg.latent_dim));
    NodePtr flat = reshape(latents, {1, cfg.n_frames * cfg.latent_dim});
    NodePtr h = relu(add(matmul(flat, params.clf_w1), params.clf_b1));
    NodePtr logits = add(matmul(h, params.clf_w2), params.clf_b2);

    ClassifierOut out;
    out.probs = softmax_rows(logits);
    out.p_pos = dot_const(out.probs, Tensor({1, 2}, {1.0, 0.0}));
    out.p_neg = dot_const(out.probs, Tensor({1, 2}, {0.0, 1.0}));
    return out;
}

SubjectForward forward_subject(const SegSequence& record, const ModelParams& params,
                               const std::optional<Tensor>& noise) {
    const auto& cfg = params.config;
    if (record.n_frames != cfg.n_frames ||
        static_cast<int>(record.frames.size()) != cfg.n_frames)
        throw validation_error("record has " + std::to_string(record.frames.size()) +
                               " frames, model expects " + std::to_string(cfg.n_frames));
    if (record.height != cfg.frame_height || record.width != cfg.frame_width ||
        record.n_classes != cfg.n_classes)
        throw validation_error("record dimensions do not match model config");
    if (noise && noise->shape != std::vector<int>{cfg.n_frames, cfg.latent_dim})
        throw validation_error("noise must have shape [T, d]");

    SubjectForward fwd;
    std::vector<NodePtr> mus, logvars;
    mus.reserve(cfg.n_frames);
    logvars.reserve(cfg.n_frames);
    fwd.latents.reserve(cfg.n_frames);
    fwd.recon_logits.reserve(cfg.n_frames);

    for (int t = 0; t < cfg.n_frames; ++t) {
        const Tensor onehot =
            frame_to_onehot(record.frames[t], cfg.frame_height, cfg.frame_width, cfg.n_classes);
        auto [mu_t, logvar_t] = encode(onehot, params);
        mus.push_back(mu_t);
        logvars.push_back(logvar_t);

        NodePtr z_t = mu_t;
        if (noise) {
            Tensor noise_t = Tensor::zeros({1, cfg.latent_dim});
            for (int j = 0; j < cfg.latent_dim; ++j) noise_t.data[j] = noise->at(t, j);
            z_t = reparameterize(mu_t, logvar_t, noise_t);
        }
        fwd.latents.push_back(z_t);
        fwd.recon_logits.push_back(decode(z_t, params));
    }

    fwd.mu = concat_rows(mus);
    fwd.logvar = concat_rows(logvars);
    ClassifierOut clf = classify(concat_rows(fwd.latents), params);
    fwd.p_pos = clf.p_pos;
    fwd.p_neg = clf.p_neg;
    return fwd;
}

// --- checkpoint ----------------------------------------------------------

namespace {

void put_le64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

nlohmann::json config_json(const ModelConfig& c) {
    return {{"frame_height", c.frame_height}, {"frame_width", c.frame_width},
            {"n_classes", c.n_classes},       {"n_frames", c.n_frames},
            {"latent_dim", c.latent_dim},     {"enc_hidden", c.enc_hidden},
            {"dec_hidden", c.dec_hidden},     {"clf_hidden", c.clf_hidden}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.frame_height = j.at("frame_height").get<int>();
    c.frame_width = j.at("frame_width").get<int>();
    c.n_classes = j.at("n_classes").get<int>();
    c.n_frames = j.at("n_frames").get<int>();
    c.latent_dim = j.at("latent_dim").get<int>();
    c.enc_hidden = j.at("enc_hidden").get<int>();
    c.dec_hidden = j.at("dec_hidden").get<int>();
    c.clf_hidden = j.at("clf_hidden").get<int>();
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params, std::uint64_t seed,
                     int epoch) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot open for writing: " + path);

    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& [name, node] : params.named_params())
        manifest.push_back({{"name", name}, {"shape", node->value.shape}});
    nlohmann::json header{{"format", "uat-checkpoint"},
                          {"version", 1},
                          {"seed", seed},
                          {"epoch", epoch},
                          {"config", config_json(params.config)},
                          {"tensors", manifest}};
    out << header.dump() << '\n';

    std::string payload;
    for (const auto& [name, node] : params.named_params())
        for (double v : node->value.data) put_le64(payload, std::bit_cast<std::uint64_t>(v));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw validation_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open: " + path);

    std::string line;
    if (!std::getline(in, line)) throw validation_error("malformed checkpoint: empty file");

    Checkpoint ckpt;
    nlohmann::json manifest;
    try {
        nlohmann::json header = nlohmann::json::parse(line);
        if (header.at("format") != "uat-checkpoint")
            throw validation_error("malformed checkpoint: unknown format tag");
        if (header.at("version") != 1)
            throw validation_error("malformed checkpoint: unsupported version");
        ckpt.seed = header.at("seed").get<std::uint64_t>();
        ckpt.epoch = header.at("epoch").get<int>();
        ckpt.params.config = config_from_json(header.at("config"));
        manifest = header.at("tensors");
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("malformed checkpoint: ") + e.what());
    }
    ckpt.params.config.validate();

    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
    std::size_t offset = 0;

    ModelParams fresh = ModelParams::init(ckpt.params.config, 0);
    auto expected = fresh.named_params();
    if (manifest.size() != expected.size())
        throw validation_error("checkpoint manifest lists " + std::to_string(manifest.size()) +
                               " tensors, expected " + std::to_string(expected.size()));

    NodePtr* slots[] = {&ckpt.params.enc_w,  &ckpt.params.enc_b,  &ckpt.params.mu_w,
                        &ckpt.params.mu_b,   &ckpt.params.logvar_w, &ckpt.params.logvar_b,
                        &ckpt.params.dec_w1, &ckpt.params.dec_b1, &ckpt.params.dec_w2,
                        &ckpt.params.dec_b2, &ckpt.params.clf_w1, &ckpt.params.clf_b1,
                        &ckpt.params.clf_w2, &ckpt.params.clf_b2};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& [name, node] = expected[i];
        std::string m_name;
        std::vector<int> m_shape;
        try {
            m_name = manifest[i].at("name").get<std::string>();
            m_shape = manifest[i].at("shape").get<std::vector<int>>();
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(std::string("malformed checkpoint manifest: ") + e.what());
        }
        if (m_name != name || m_shape != node->value.shape)
            throw validation_error("checkpoint tensor " + std::to_string(i) + " is " + m_name +
                                   ", expected " + name + " with matching shape");
        const std::size_t n = static_cast<std::size_t>(shape_numel(m_shape));
        if (offset + n * 8 > payload.size())
            throw validation_error("truncated checkpoint payload at tensor " + m_name);
        Tensor t = Tensor::zeros(m_shape);
        for (std::size_t k = 0; k < n; ++k, offset += 8)
            t.data[k] = std::bit_cast<double>(get_le64(bytes + offset));
        *slots[i] = leaf(std::move(t));
    }
    if (offset != payload.size())
        throw validation_error("checkpoint payload has trailing bytes");
    return ckpt;
}

}  // namespace uat
