#include "acat/metrics.hpp"

#include "acat/errors.hpp"
#include "acat/pipeline.hpp"

namespace acat {

double mask_iou(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw ConfigError("mask_iou: dimension mismatch");
    long inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data[i] == 0;
        const bool g = gt.data[i] == 0;
        inter += p && g;
        uni += p || g;
    }
    if (uni == 0) return 1.0;  // both adversarial regions empty
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double miou(const std::vector<std::uint8_t>& pred_labels,
            const std::vector<std::uint8_t>& gt_labels, int class_count) {
    if (pred_labels.size() != gt_labels.size())
        throw ConfigError("miou: dimension mismatch");
    std::vector<long> inter(class_count, 0), uni(class_count, 0);
    for (std::size_t i = 0; i < pred_labels.size(); ++i) {
        const int p = pred_labels[i];
        const int g = gt_labels[i];
        if (p >= class_count || g >= class_count)
            throw DataError("miou: label out of range");
        if (p == g) {
            ++inter[p];
            ++uni[p];
        } else {
            ++uni[p];
            ++uni[g];
        }
    }
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < class_count; ++c) {
        if (uni[c] == 0) continue;  // class absent from both maps
        sum += static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
        ++present;
    }
    return present == 0 ? 1.0 : sum / present;
}

PassAccount count_passes(const std::vector<FrameOutcome>& outcomes) {
    PassAccount acc;
    for (const FrameOutcome& o : outcomes) {
        acc.units += o.pass_units;
        // Reference: a single-frame defense pays a detector pass plus a
        // defended pass whenever the defense engages.
        const bool defended = o.mode == FrameMode::Detected || o.mode == FrameMode::Traced;
        acc.baseline_units += defended ? 2.0 : 1.0;
    }
    acc.ratio = acc.baseline_units > 0.0 ? acc.units / acc.baseline_units : 0.0;
    return acc;
}

}  // namespace acat
