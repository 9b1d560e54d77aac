#include "uat/uncertainty.hpp"

#include <sstream>

#include <json.hpp>

#include "uat/errors.hpp"

namespace uat {

const char* kind_name(UncertaintyKind kind) {
    return kind == UncertaintyKind::epistemic ? "epistemic" : "aleatoric";
}

Outcome outcome_of(int predicted, int label) {
    if ((predicted != 0 && predicted != 1) || (label != 0 && label != 1))
        throw validation_error("outcome: predicted and label must be 0 or 1");
    if (predicted == 1) return label == 1 ? Outcome::TP : Outcome::FP;
    return label == 1 ? Outcome::FN : Outcome::TN;
}

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::TP: return "TP";
        case Outcome::FN: return "FN";
        case Outcome::FP: return "FP";
        case Outcome::TN: return "TN";
    }
    throw validation_error("outcome: bad enum value");
}

int BandedReport::total() const {
    int n = 0;
    for (const auto& row : counts)
        for (int v : row) n += v;
    return n;
}

int BandedReport::column_sum(Outcome o) const {
    const int c = static_cast<int>(o);
    return counts[0][c] + counts[1][c] + counts[2][c];
}

const char* BandedReport::band_name(int band) {
    switch (band) {
        case 0: return "0-30";
        case 1: return "31-70";
        case 2: return "71-100";
    }
    throw validation_error("band index out of range");
}

int confidence_band(double confidence) {
    if (confidence < 0.0 || confidence > 100.0)
        throw validation_error("confidence " + std::to_string(confidence) +
                               " outside [0, 100]");
    if (confidence <= 30.0) return 0;
    if (confidence <= 70.0) return 1;
    return 2;
}

namespace {

// stream id for MC sample draws; sample 0 is the unmodified forward
enum : std::uint64_t { kStreamSample = 1 };

ConfidenceResult tabulate(const SegSequence& record, UncertaintyKind kind,
                          std::vector<int> preds) {
    ConfidenceResult res;
    res.subject_id = record.id;
    res.label = record.label;
    res.kind = kind;
    res.n_samples = static_cast<int>(preds.size());
    res.predicted = preds[0];  // the unperturbed forward decides the class
    int agree = 0;
    for (int p : preds) agree += p == res.predicted ? 1 : 0;
    res.confidence = 100.0 * agree / static_cast<double>(preds.size());
    res.sample_predictions = std::move(preds);
    return res;
}

}  // namespace

ConfidenceResult estimate_epistemic(const ModelParams& params, const SegSequence& record,
                                    int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw validation_error("n_samples must be >= 1");
    const auto& cfg = params.config;

    std::vector<int> preds;
    preds.reserve(static_cast<std::size_t>(n_samples));
    preds.push_back(forward_subject(record, params).predicted_positive() ? 1 : 0);

    for (int s = 1; s < n_samples; ++s) {
        Rng rng(derive_seed(seed, kStreamSample, static_cast<std::uint64_t>(s)));
        Tensor noise = Tensor::zeros({cfg.n_frames, cfg.latent_dim});
        for (auto& v : noise.data) v = rng.normal();
        preds.push_back(forward_subject(record, params, noise).predicted_positive() ? 1 : 0);
    }
    return tabulate(record, UncertaintyKind::epistemic, std::move(preds));
}

ConfidenceResult estimate_aleatoric(const ModelParams& params, const SegSequence& record,
                                    const InputSampler& sampler, int n_samples,
                                    std::uint64_t seed) {
    if (n_samples < 1) throw validation_error("n_samples must be >= 1");
    if (!sampler) throw validation_error("input sampler is empty");

    std::vector<int> preds;
    preds.reserve(static_cast<std::size_t>(n_samples));
    preds.push_back(forward_subject(record, params).predicted_positive() ? 1 : 0);

    for (int s = 1; s < n_samples; ++s) {
        Rng rng(derive_seed(seed, kStreamSample, static_cast<std::uint64_t>(s)));
        const SegSequence perturbed = sampler(record, rng);
        preds.push_back(forward_subject(perturbed, params).predicted_positive() ? 1 : 0);
    }
    return tabulate(record, UncertaintyKind::aleatoric, std::move(preds));
}

InputSampler boundary_jitter_sampler(double p) {
    if (p < 0.0 || p > 1.0) throw validation_error("jitter probability must lie in [0,1]");
    return [p](const SegSequence& record, Rng& rng) { return perturb_input(record, p, rng); };
}

BandedReport banded_report(const std::vector<ConfidenceResult>& results,
                           UncertaintyKind kind) {
    BandedReport report;
    report.kind = kind;
    for (const auto& r : results) {
        if (r.kind != kind)
            throw validation_error(std::string("mixed uncertainty kinds in report: expected ") +
                                   kind_name(kind) + ", saw " + kind_name(r.kind));
        const int band = confidence_band(r.confidence);
        const int col = static_cast<int>(outcome_of(r.predicted, r.label));
        ++report.counts[band][col];
    }
    return report;
}

std::string format_report_table(const BandedReport& report) {
    std::ostringstream out;
    out << kind_name(report.kind) << " confidence\n";
    out << "band      TP   FN   FP   TN\n";
    for (int b = 0; b < 3; ++b) {
        out << BandedReport::band_name(b);
        for (std::size_t pad = std::string(BandedReport::band_name(b)).size(); pad < 8; ++pad)
            out << ' ';
        for (int c = 0; c < 4; ++c) {
            std::string v = std::to_string(report.counts[b][c]);
            for (std::size_t pad = v.size(); pad < 5; ++pad) out << ' ';
            out << v;
        }
        out << '\n';
    }
    return out.str();
}

std::string report_json(const BandedReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 4; ++c)
            cells.push_back({{"band", BandedReport::band_name(b)},
                             {"outcome", outcome_name(static_cast<Outcome>(c))},
                             {"count", report.counts[b][c]}});
    nlohmann::json j{{"kind", kind_name(report.kind)}, {"counts", cells}};
    return j.dump();
}

}  // namespace uat
