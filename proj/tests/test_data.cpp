#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "uat/errors.hpp"
#include "uat/data.hpp"

using namespace uat;

namespace {

struct TempPath {
    std::string path;
    explicit TempPath(const std::string& name) : path("/tmp/uat_test_" + name) {}
    ~TempPath() { std::remove(path.c_str()); }
};

GenConfig small_config() {
    GenConfig cfg;
    cfg.n_subjects = 8;
    cfg.n_frames = 4;
    cfg.height = 12;
    cfg.width = 12;
    cfg.seed = 7;
    return cfg;
}

int count_class(const std::vector<std::uint8_t>& frame, std::uint8_t cls) {
    int n = 0;
    for (auto px : frame) n += (px == cls);
    return n;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    for (const auto& l : lines) out << l << '\n';
}

nlohmann::json default_header(int n, int t, int h, int w, int c) {
    return {{"format", "uat-dataset"}, {"version", 1}, {"n_subjects", n},
            {"T", t},                  {"H", h},       {"W", w},
            {"C", c},                  {"seed", 1}};
}

nlohmann::json record_json(const std::string& id, int label,
                           const std::vector<std::uint8_t>& bytes) {
    return {{"id", id},
            {"label", label},
            {"meta", {{"contraction_fraction", 0.2}, {"pixel_noise", 0.0}}},
            {"frames", base64_encode(bytes.data(), bytes.size())}};
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
    const GenConfig cfg = small_config();
    const Dataset a = generate_dataset(cfg);
    const Dataset b = generate_dataset(cfg);
    CHECK(a == b);

    GenConfig other = cfg;
    other.seed = 8;
    CHECK_FALSE(generate_dataset(other) == a);
}

TEST_CASE("records carry consistent shapes, ids and metadata") {
    const GenConfig cfg = small_config();
    const Dataset data = generate_dataset(cfg);
    REQUIRE(data.subjects.size() == 8);
    CHECK(data.subjects[0].id == "s0000");
    CHECK(data.subjects[7].id == "s0007");
    for (const auto& s : data.subjects) {
        CHECK(s.n_frames == cfg.n_frames);
        CHECK(s.height == cfg.height);
        CHECK(s.width == cfg.width);
        CHECK(s.n_classes == cfg.n_classes);
        REQUIRE(s.frames.size() == static_cast<std::size_t>(cfg.n_frames));
        for (const auto& f : s.frames) {
            REQUIRE(f.size() == static_cast<std::size_t>(cfg.height * cfg.width));
            for (auto px : f) CHECK(px < cfg.n_classes);
        }
        CHECK(s.meta.contraction_fraction >= 0.0);
        CHECK(s.meta.contraction_fraction <= 0.9);
        CHECK((s.label == (s.meta.contraction_fraction >= cfg.threshold ? 1 : 0)));
    }
    CHECK(data.labels().size() == 8);
}

TEST_CASE("degenerate thresholds pin all labels") {
    GenConfig cfg = small_config();
    cfg.threshold = 0.95;  // above the contraction-fraction clamp
    for (int label : generate_dataset(cfg).labels()) CHECK(label == 0);

    cfg.threshold = 0.15;
    cfg.f_nonresponder_mean = 0.3;
    cfg.f_responder_mean = 0.3;
    cfg.f_sigma = 0.0;  // every subject contracts exactly 0.3 >= threshold
    for (int label : generate_dataset(cfg).labels()) CHECK(label == 1);
}

TEST_CASE("default config hits the responder fraction within ten percent") {
    const GenConfig cfg;  // 73 subjects, responder_fraction 0.5
    const Dataset data = generate_dataset(cfg);
    int positives = 0;
    for (int label : data.labels()) positives += label;
    const double fraction = static_cast<double>(positives) / cfg.n_subjects;
    CHECK(fraction >= cfg.responder_fraction - 0.1);
    CHECK(fraction <= cfg.responder_fraction + 0.1);
}

TEST_CASE("inner pool contracts monotonically by the subject's fraction") {
    GenConfig cfg = small_config();
    cfg.pixel_noise = 0.0;
    cfg.n_frames = 6;
    const Dataset data = generate_dataset(cfg);
    for (const auto& s : data.subjects) {
        std::vector<int> areas;
        for (const auto& f : s.frames) areas.push_back(count_class(f, 1));
        for (std::size_t t = 1; t < areas.size(); ++t) CHECK(areas[t] <= areas[t - 1]);
        CHECK(areas.front() > 0);
        // final/initial pool ratio tracks 1 - f up to pixel rounding
        const double expected = (1.0 - s.meta.contraction_fraction) * areas.front();
        CHECK(std::abs(areas.back() - expected) <= 2.0);
    }
}

TEST_CASE("frames contain all four region classes") {
    GenConfig cfg = small_config();
    cfg.pixel_noise = 0.0;
    const Dataset data = generate_dataset(cfg);
    const auto& first = data.subjects[0].frames[0];
    for (std::uint8_t cls = 0; cls < 4; ++cls) CHECK(count_class(first, cls) > 0);
}

TEST_CASE("generation config validation") {
    GenConfig cfg = small_config();
    cfg.n_subjects = 3;
    CHECK_THROWS_AS(generate_dataset(cfg), validation_error);

    cfg = small_config();
    cfg.height = 5;
    cfg.width = 5;
    CHECK_THROWS_WITH_AS(generate_dataset(cfg),
                         doctest::Contains("grid too small to render shapes"),
                         validation_error);

    cfg = small_config();
    cfg.threshold = 0.0;
    CHECK_THROWS_AS(generate_dataset(cfg), validation_error);

    cfg = small_config();
    cfg.n_classes = 3;
    CHECK_THROWS_AS(generate_dataset(cfg), validation_error);

    cfg = small_config();
    cfg.n_frames = 1;
    CHECK_THROWS_AS(generate_dataset(cfg), validation_error);
}

TEST_CASE("boundary jitter") {
    GenConfig cfg = small_config();
    cfg.pixel_noise = 0.0;
    const Dataset data = generate_dataset(cfg);
    const SegSequence& rec = data.subjects[0];

    // boundary membership per frame, decided on the input
    auto boundary_mask = [&](const std::vector<std::uint8_t>& f) {
        std::vector<bool> mask(f.size(), false);
        for (int r = 0; r < cfg.height; ++r)
            for (int c = 0; c < cfg.width; ++c) {
                const std::size_t p = static_cast<std::size_t>(r) * cfg.width + c;
                const auto differs = [&](int rr, int cc) {
                    return rr >= 0 && rr < cfg.height && cc >= 0 && cc < cfg.width &&
                           f[static_cast<std::size_t>(rr) * cfg.width + cc] != f[p];
                };
                mask[p] = differs(r - 1, c) || differs(r + 1, c) || differs(r, c - 1) ||
                          differs(r, c + 1);
            }
        return mask;
    };

    SUBCASE("p = 0 is the identity") {
        Rng rng(1);
        CHECK(perturb_input(rec, 0.0, rng) == rec);
    }
    SUBCASE("p = 1 changes every boundary pixel and nothing else") {
        Rng rng(2);
        const SegSequence out = perturb_input(rec, 1.0, rng);
        CHECK(out.id == rec.id);
        CHECK(out.label == rec.label);
        for (int t = 0; t < rec.n_frames; ++t) {
            const auto& before = rec.frames[static_cast<std::size_t>(t)];
            const auto& after = out.frames[static_cast<std::size_t>(t)];
            REQUIRE(after.size() == before.size());
            const auto mask = boundary_mask(before);
            for (std::size_t p = 0; p < before.size(); ++p) {
                if (mask[p])
                    CHECK(after[p] != before[p]);
                else
                    CHECK(after[p] == before[p]);
                CHECK(after[p] < cfg.n_classes);
            }
        }
    }
    SUBCASE("p = 0.5 changes about half the boundary on average") {
        int boundary_total = 0;
        for (const auto& f : rec.frames) {
            const auto mask = boundary_mask(f);
            for (bool b : mask) boundary_total += b;
        }
        REQUIRE(boundary_total > 0);

        Rng rng(3);
        std::int64_t changed = 0;
        const int trials = 400;
        for (int k = 0; k < trials; ++k) {
            const SegSequence out = perturb_input(rec, 0.5, rng);
            for (int t = 0; t < rec.n_frames; ++t) {
                const auto& before = rec.frames[static_cast<std::size_t>(t)];
                const auto& after = out.frames[static_cast<std::size_t>(t)];
                for (std::size_t p = 0; p < before.size(); ++p)
                    changed += (after[p] != before[p]);
            }
        }
        const double rate =
            static_cast<double>(changed) / (static_cast<double>(trials) * boundary_total);
        CHECK(rate > 0.42);
        CHECK(rate < 0.58);
    }
    SUBCASE("replacement classes come from differing neighbors") {
        Rng rng(4);
        const SegSequence out = perturb_input(rec, 1.0, rng);
        for (int t = 0; t < rec.n_frames; ++t) {
            const auto& before = rec.frames[static_cast<std::size_t>(t)];
            const auto& after = out.frames[static_cast<std::size_t>(t)];
            for (int r = 0; r < cfg.height; ++r)
                for (int c = 0; c < cfg.width; ++c) {
                    const std::size_t p = static_cast<std::size_t>(r) * cfg.width + c;
                    if (after[p] == before[p]) continue;
                    std::set<std::uint8_t> neighbors;
                    if (r > 0) neighbors.insert(before[p - cfg.width]);
                    if (r + 1 < cfg.height) neighbors.insert(before[p + cfg.width]);
                    if (c > 0) neighbors.insert(before[p - 1]);
                    if (c + 1 < cfg.width) neighbors.insert(before[p + 1]);
                    CHECK(neighbors.count(after[p]) == 1);
                }
        }
    }
    SUBCASE("probability outside [0,1] is rejected") {
        Rng rng(5);
        CHECK_THROWS_AS(perturb_input(rec, -0.1, rng), validation_error);
        CHECK_THROWS_AS(perturb_input(rec, 1.1, rng), validation_error);
    }
}

TEST_CASE("base64 round trip and error handling") {
    const std::vector<std::uint8_t> man = {'M', 'a', 'n'};
    CHECK(base64_encode(man.data(), 3) == "TWFu");
    CHECK(base64_encode(man.data(), 2) == "TWE=");
    CHECK(base64_encode(man.data(), 1) == "TQ==");
    CHECK(base64_encode(nullptr, 0) == "");

    Rng rng(9);
    for (int len : {0, 1, 2, 3, 4, 57, 128, 1000}) {
        std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
        for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.below(256));
        const std::string text = base64_encode(bytes.data(), bytes.size());
        CHECK(base64_decode(text) == bytes);
    }

    CHECK_THROWS_AS(base64_decode("abc"), validation_error);     // bad length
    CHECK_THROWS_AS(base64_decode("ab!d"), validation_error);    // bad character
    CHECK_THROWS_AS(base64_decode("=abc"), validation_error);    // misplaced padding
    CHECK_THROWS_AS(base64_decode("a==="), validation_error);
}

TEST_CASE("dataset files round trip bit-exactly") {
    SUBCASE("generated datasets of assorted shapes") {
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            GenConfig cfg = small_config();
            cfg.seed = seed;
            cfg.n_subjects = 4 + static_cast<int>(seed);
            const Dataset data = generate_dataset(cfg);
            TempPath tmp("roundtrip.jsonl");
            write_dataset(data, tmp.path);
            CHECK(read_dataset(tmp.path) == data);
        }
    }
    SUBCASE("empty dataset") {
        Dataset empty;
        empty.n_frames = 4;
        empty.height = 12;
        empty.width = 12;
        empty.n_classes = 4;
        empty.seed = 3;
        TempPath tmp("empty.jsonl");
        write_dataset(empty, tmp.path);
        CHECK(read_dataset(tmp.path) == empty);
    }
    SUBCASE("writer output is byte-stable") {
        const Dataset data = generate_dataset(small_config());
        TempPath a("bytes_a.jsonl"), b("bytes_b.jsonl");
        write_dataset(data, a.path);
        write_dataset(data, b.path);
        std::ifstream fa(a.path, std::ios::binary), fb(b.path, std::ios::binary);
        const std::string sa((std::istreambuf_iterator<char>(fa)), {});
        const std::string sb((std::istreambuf_iterator<char>(fb)), {});
        CHECK(sa == sb);
        CHECK(!sa.empty());
    }
}

TEST_CASE("malformed dataset files name the failing record") {
    TempPath tmp("malformed.jsonl");
    const int t = 2, h = 2, w = 2, c = 4;
    const std::vector<std::uint8_t> good(static_cast<std::size_t>(t) * h * w, 1);

    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_dataset("/tmp/uat_test_no_such_file.jsonl"), validation_error);
    }
    SUBCASE("empty file") {
        write_lines(tmp.path, {});
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path), "malformed header: empty file",
                             validation_error);
    }
    SUBCASE("header is not structured text") {
        write_lines(tmp.path, {"garbage"});
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path), doctest::Contains("malformed header"),
                             validation_error);
    }
    SUBCASE("wrong format tag") {
        auto hdr = default_header(0, t, h, w, c);
        hdr["format"] = "something-else";
        write_lines(tmp.path, {hdr.dump()});
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path), "malformed header: unknown format tag",
                             validation_error);
    }
    SUBCASE("unsupported version") {
        auto hdr = default_header(0, t, h, w, c);
        hdr["version"] = 2;
        write_lines(tmp.path, {hdr.dump()});
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path), "malformed header: unsupported version",
                             validation_error);
    }
    SUBCASE("pixel value out of class range") {
        std::vector<std::uint8_t> bad = good;
        bad[3] = 7;
        write_lines(tmp.path, {default_header(2, t, h, w, c).dump(),
                               record_json("s0000", 0, good).dump(),
                               record_json("s0001", 1, bad).dump()});
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path),
                             "record 1: pixel value 7 out of range for C=4",
                             validation_error);
    }
    SUBCASE("truncated file") {
        write_lines(tmp.path, {default_header(3, t, h, w, c).dump(),
                               record_json("s0000", 0, good).dump()});
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path),
                             "record 1: truncated file, expected 3 records",
                             validation_error);
    }
    SUBCASE("corrupt pixel encoding") {
        auto rec = record_json("s0000", 0, good);
        rec["frames"] = "!!!!";
        write_lines(tmp.path, {default_header(1, t, h, w, c).dump(), rec.dump()});
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path), doctest::Contains("record 0: invalid base64"),
                             validation_error);
    }
    SUBCASE("wrong pixel byte count") {
        std::vector<std::uint8_t> short_bytes(good.begin(), good.end() - 2);
        write_lines(tmp.path, {default_header(1, t, h, w, c).dump(),
                               record_json("s0000", 0, short_bytes).dump()});
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path),
                             "record 0: expected 8 pixel bytes, got 6", validation_error);
    }
    SUBCASE("label outside {0,1}") {
        write_lines(tmp.path, {default_header(1, t, h, w, c).dump(),
                               record_json("s0000", 2, good).dump()});
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path), "record 0: label must be 0 or 1",
                             validation_error);
    }
    SUBCASE("record with missing field") {
        auto rec = record_json("s0000", 0, good);
        rec.erase("frames");
        write_lines(tmp.path, {default_header(1, t, h, w, c).dump(), rec.dump()});
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path),
                             doctest::Contains("record 0: malformed record"),
                             validation_error);
    }
    SUBCASE("trailing data") {
        write_lines(tmp.path, {default_header(1, t, h, w, c).dump(),
                               record_json("s0000", 0, good).dump(), "{\"extra\":1}"});
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path), "trailing data after record 0",
                             validation_error);
    }
}
