#include "uat/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "uat/errors.hpp"

namespace uat {

namespace {

// Region layout shared by all frames of a grid: the LV disc (pool + ring)
// slightly right of centre, a smaller side pool near the left edge. LV pixels
// come back sorted by distance from the disc centre so the contracting pool
// is always the innermost k pixels.
struct Layout {
    std::vector<int> lv_order;
    std::vector<int> side;
    int k0 = 0;  // initial pool size in pixels
};

Layout plan_layout(int height, int width) {
    const double m = static_cast<double>(std::min(height, width));
    const double cy = 0.5 * (height - 1);
    const double cx = 0.58 * (width - 1);
    const double sy = cy;
    const double sx = 0.14 * (width - 1);
    const double r_lv = 0.26 * m;
    const double r_side = 0.10 * m;

    std::vector<std::pair<double, int>> lv;
    std::vector<int> side;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int idx = y * width + x;
            const double d_lv = std::hypot(y - cy, x - cx);
            const double d_side = std::hypot(y - sy, x - sx);
            if (d_lv <= r_lv && d_side <= r_side)
                throw validation_error("grid too small to render shapes: regions overlap at " +
                                       std::to_string(height) + "x" + std::to_string(width));
            if (d_lv <= r_lv)
                lv.emplace_back(d_lv, idx);
            else if (d_side <= r_side)
                side.push_back(idx);
        }
    }
    std::sort(lv.begin(), lv.end());  // ties resolve by pixel index

    Layout layout;
    layout.lv_order.reserve(lv.size());
    for (auto& [d, idx] : lv) layout.lv_order.push_back(idx);
    layout.side = std::move(side);
    layout.k0 = static_cast<int>(std::llround(0.55 * static_cast<double>(lv.size())));

    if (lv.size() < 8 || layout.k0 < 2 || layout.k0 >= static_cast<int>(lv.size()) ||
        layout.side.empty())
        throw validation_error("grid too small to render shapes: " + std::to_string(height) +
                               "x" + std::to_string(width));
    return layout;
}

constexpr double kPi = 3.14159265358979323846;

// seed-stream ids, kept distinct from every other module's
enum : std::uint64_t { kStreamSubject = 1 };

SegSequence render_subject(const GenConfig& cfg, const Layout& layout, int subject_index) {
    Rng rng(derive_seed(cfg.seed, kStreamSubject, static_cast<std::uint64_t>(subject_index)));

    const bool responder_draw = rng.bernoulli(cfg.responder_fraction);
    const double mean = responder_draw ? cfg.f_responder_mean : cfg.f_nonresponder_mean;
    double f = rng.normal(mean, cfg.f_sigma);
    f = std::clamp(f, 0.0, 0.9);

    SegSequence rec;
    {
        std::ostringstream id;
        id << "s" << std::setw(4) << std::setfill('0') << subject_index;
        rec.id = id.str();
    }
    rec.n_frames = cfg.n_frames;
    rec.height = cfg.height;
    rec.width = cfg.width;
    rec.n_classes = cfg.n_classes;
    rec.label = f >= cfg.threshold ? 1 : 0;
    rec.meta.contraction_fraction = f;
    rec.meta.pixel_noise = cfg.pixel_noise;

    const int n_pixels = cfg.height * cfg.width;
    rec.frames.reserve(cfg.n_frames);
    for (int t = 0; t < cfg.n_frames; ++t) {
        const double s = (1.0 - std::cos(kPi * t / (cfg.n_frames - 1))) / 2.0;
        const int k = static_cast<int>(std::llround(layout.k0 * (1.0 - f * s)));

        std::vector<std::uint8_t> frame(static_cast<std::size_t>(n_pixels), 0);
        for (int i = 0; i < static_cast<int>(layout.lv_order.size()); ++i)
            frame[layout.lv_order[i]] = i < k ? 1 : 2;
        for (int idx : layout.side) frame[idx] = 3;

        if (cfg.pixel_noise > 0.0) {
            for (int p = 0; p < n_pixels; ++p) {
                if (!rng.bernoulli(cfg.pixel_noise)) continue;
                const auto shift = 1 + rng.below(static_cast<std::uint64_t>(cfg.n_classes - 1));
                frame[p] = static_cast<std::uint8_t>((frame[p] + shift) % cfg.n_classes);
            }
        }
        rec.frames.push_back(std::move(frame));
    }
    return rec;
}

}  // namespace

void GenConfig::validate() const {
    if (n_subjects < 4) throw validation_error("n_subjects must be >= 4");
    if (n_frames < 2) throw validation_error("n_frames must be >= 2");
    if (height < 1 || width < 1) throw validation_error("frame dimensions must be positive");
    if (n_classes < 4)
        throw validation_error("n_classes must be >= 4 to render the four regions");
    if (n_classes > 256) throw validation_error("n_classes must fit one byte per pixel");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw validation_error("threshold must lie in (0,1)");
    if (responder_fraction < 0.0 || responder_fraction > 1.0)
        throw validation_error("responder_fraction must lie in [0,1]");
    if (f_sigma < 0.0) throw validation_error("f_sigma must be >= 0");
    if (f_nonresponder_mean < 0.0 || f_nonresponder_mean > 0.9 || f_responder_mean < 0.0 ||
        f_responder_mean > 0.9)
        throw validation_error("contraction-fraction means must lie in [0, 0.9]");
    if (pixel_noise < 0.0 || pixel_noise > 1.0)
        throw validation_error("pixel_noise must lie in [0,1]");
    plan_layout(height, width);  // surfaces grid-too-small here
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(subjects.size());
    for (const auto& s : subjects) out.push_back(s.label);
    return out;
}

Dataset generate_dataset(const GenConfig& cfg) {
    cfg.validate();
    const Layout layout = plan_layout(cfg.height, cfg.width);

    Dataset data;
    data.n_frames = cfg.n_frames;
    data.height = cfg.height;
    data.width = cfg.width;
    data.n_classes = cfg.n_classes;
    data.seed = cfg.seed;
    data.subjects.reserve(cfg.n_subjects);
    for (int i = 0; i < cfg.n_subjects; ++i)
        data.subjects.push_back(render_subject(cfg, layout, i));
    return data;
}

SegSequence perturb_input(const SegSequence& record, double p, Rng& rng) {
    if (p < 0.0 || p > 1.0) throw validation_error("perturbation probability must lie in [0,1]");

    SegSequence out = record;
    const int h = record.height, w = record.width;
    for (int t = 0; t < record.n_frames; ++t) {
        const auto& src = record.frames[t];  // membership decided on the input frame
        auto& dst = out.frames[t];
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::uint8_t own = src[y * w + x];
                std::uint8_t neigh[4];
                int n_neigh = 0;
                if (y > 0) neigh[n_neigh++] = src[(y - 1) * w + x];
                if (y + 1 < h) neigh[n_neigh++] = src[(y + 1) * w + x];
                if (x > 0) neigh[n_neigh++] = src[y * w + x - 1];
                if (x + 1 < w) neigh[n_neigh++] = src[y * w + x + 1];

                std::uint8_t choices[4];
                int n_choices = 0;
                for (int i = 0; i < n_neigh; ++i) {
                    if (neigh[i] == own) continue;
                    bool seen = false;
                    for (int j = 0; j < n_choices; ++j) seen = seen || choices[j] == neigh[i];
                    if (!seen) choices[n_choices++] = neigh[i];
                }
                if (n_choices == 0) continue;
                std::sort(choices, choices + n_choices);
                if (rng.bernoulli(p))
                    dst[y * w + x] = choices[rng.below(static_cast<std::uint64_t>(n_choices))];
            }
        }
    }
    return out;
}

// --- base64 ------------------------------------------------------------

static const char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::uint8_t* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= len; i += 3) {
        const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back(kB64[(v >> 6) & 63]);
        out.push_back(kB64[v & 63]);
    }
    if (i + 1 == len) {
        const std::uint32_t v = data[i] << 16;
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == len) {
        const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back(kB64[(v >> 6) & 63]);
        out += "=";
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw validation_error("invalid base64: length not a multiple of 4");
    static const auto decode_one = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        const bool last = i + 4 == text.size();
        int pad = 0;
        std::uint32_t v = 0;
        for (int j = 0; j < 4; ++j) {
            const char c = text[i + j];
            if (c == '=') {
                if (!last || j < 2 || (j == 2 && text[i + 3] != '='))
                    throw validation_error("invalid base64: misplaced padding");
                ++pad;
                v <<= 6;
                continue;
            }
            const int d = decode_one(c);
            if (d < 0 || pad > 0) throw validation_error("invalid base64: bad character");
            v = (v << 6) | static_cast<std::uint32_t>(d);
        }
        out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    return out;
}

// --- file format ---------------------------------------------------------
//
// Line 1: header {"format":"uat-dataset","version":1,...dims,seed,n_subjects}
// Then one JSON object per subject with frames base64-encoded row-major,
// frame after frame.

void write_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot open for writing: " + path);

    nlohmann::json header{{"format", "uat-dataset"},  {"version", 1},
                          {"n_subjects", dataset.subjects.size()},
                          {"T", dataset.n_frames},    {"H", dataset.height},
                          {"W", dataset.width},       {"C", dataset.n_classes},
                          {"seed", dataset.seed}};
    out << header.dump() << '\n';

    std::vector<std::uint8_t> buf;
    for (const auto& rec : dataset.subjects) {
        buf.clear();
        for (const auto& frame : rec.frames) buf.insert(buf.end(), frame.begin(), frame.end());
        nlohmann::json line{{"id", rec.id},
                            {"label", rec.label},
                            {"meta",
                             {{"contraction_fraction", rec.meta.contraction_fraction},
                              {"pixel_noise", rec.meta.pixel_noise}}},
                            {"frames", base64_encode(buf.data(), buf.size())}};
        out << line.dump() << '\n';
    }
    if (!out) throw validation_error("write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open: " + path);

    std::string line;
    if (!std::getline(in, line)) throw validation_error("malformed header: empty file");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("malformed header: ") + e.what());
    }

    Dataset data;
    std::size_t n_subjects = 0;
    try {
        if (header.at("format") != "uat-dataset")
            throw validation_error("malformed header: unknown format tag");
        if (header.at("version") != 1)
            throw validation_error("malformed header: unsupported version");
        n_subjects = header.at("n_subjects").get<std::size_t>();
        data.n_frames = header.at("T").get<int>();
        data.height = header.at("H").get<int>();
        data.width = header.at("W").get<int>();
        data.n_classes = header.at("C").get<int>();
        data.seed = header.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("malformed header: ") + e.what());
    }

    const std::size_t frame_bytes =
        static_cast<std::size_t>(data.height) * static_cast<std::size_t>(data.width);
    const std::size_t expected = static_cast<std::size_t>(data.n_frames) * frame_bytes;

    for (std::size_t k = 0; k < n_subjects; ++k) {
        const std::string where = "record " + std::to_string(k);
        if (!std::getline(in, line))
            throw validation_error(where + ": truncated file, expected " +
                                   std::to_string(n_subjects) + " records");
        SegSequence rec;
        std::string encoded;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            rec.id = j.at("id").get<std::string>();
            rec.label = j.at("label").get<int>();
            rec.meta.contraction_fraction = j.at("meta").at("contraction_fraction").get<double>();
            rec.meta.pixel_noise = j.at("meta").at("pixel_noise").get<double>();
            encoded = j.at("frames").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(where + ": malformed record: " + e.what());
        }
        if (rec.label != 0 && rec.label != 1)
            throw validation_error(where + ": label must be 0 or 1");

        std::vector<std::uint8_t> bytes;
        try {
            bytes = base64_decode(encoded);
        } catch (const validation_error& e) {
            throw validation_error(where + ": " + e.what());
        }
        if (bytes.size() != expected)
            throw validation_error(where + ": expected " + std::to_string(expected) +
                                   " pixel bytes, got " + std::to_string(bytes.size()));
        for (std::size_t p = 0; p < bytes.size(); ++p)
            if (bytes[p] >= data.n_classes)
                throw validation_error(where + ": pixel value " + std::to_string(bytes[p]) +
                                       " out of range for C=" + std::to_string(data.n_classes));

        rec.n_frames = data.n_frames;
        rec.height = data.height;
        rec.width = data.width;
        rec.n_classes = data.n_classes;
        rec.frames.reserve(static_cast<std::size_t>(data.n_frames));
        for (int t = 0; t < data.n_frames; ++t)
            rec.frames.emplace_back(bytes.begin() + t * frame_bytes,
                                    bytes.begin() + (t + 1) * frame_bytes);
        data.subjects.push_back(std::move(rec));
    }
    if (std::getline(in, line) && !line.empty())
        throw validation_error("trailing data after record " + std::to_string(n_subjects - 1));
    return data;
}

}  // namespace uat
