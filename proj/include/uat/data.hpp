// data.hpp - synthetic segmentation sequences: generation, perturbation,
// and the line-oriented dataset file format.
//
// Each subject is a sequence of T class maps (H x W, one byte per pixel) with
// a binary response label. Frames contain four regions: background, an inner
// pool inside a surrounding ring, and a separate side pool. The inner pool
// contracts over the sequence by a per-subject fraction f; label = 1 iff
// f >= threshold.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uat/rng.hpp"

namespace uat {

struct SubjectMeta {
    double contraction_fraction = 0.0;
    double pixel_noise = 0.0;

    bool operator==(const SubjectMeta&) const = default;
};

struct SegSequence {
    std::string id;
    int n_frames = 0, height = 0, width = 0, n_classes = 0;
    std::vector<std::vector<std::uint8_t>> frames;  // T maps, each H*W row-major
    int label = 0;  // 1 = responder, 0 = non-responder
    SubjectMeta meta;

    bool operator==(const SegSequence&) const = default;
};

struct GenConfig {
    int n_subjects = 73;
    int n_frames = 8;   // T
    int height = 16;    // H
    int width = 16;     // W
    int n_classes = 4;  // C
    double responder_fraction = 0.5;
    double threshold = 0.15;  // label = 1 iff contraction fraction >= threshold
    // bimodal contraction-fraction draw; the gap/sigma ratio sets class overlap
    double f_nonresponder_mean = 0.05;
    double f_responder_mean = 0.30;
    double f_sigma = 0.03;
    double pixel_noise = 0.01;  // per-pixel probability of a random class flip
    std::uint64_t seed = 42;

    void validate() const;
};

struct Dataset {
    int n_frames = 0, height = 0, width = 0, n_classes = 0;
    std::uint64_t seed = 0;
    std::vector<SegSequence> subjects;

    bool operator==(const Dataset&) const = default;
    std::vector<int> labels() const;
};

// Deterministic given cfg.seed; per-subject streams derived from
// (seed, subject index) so generation order is immaterial.
Dataset generate_dataset(const GenConfig& cfg);

// Boundary jitter: every pixel with a 4-neighbor of a different class is
// reassigned, with probability p, to a class chosen uniformly among its
// differing neighbor classes. Membership is decided on the input frame, so
// one pass cannot cascade. Frame count, shape and label are preserved.
SegSequence perturb_input(const SegSequence& record, double p, Rng& rng);

void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

// serialization helpers shared with the checkpoint writer
std::string base64_encode(const std::uint8_t* data, std::size_t len);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace uat
