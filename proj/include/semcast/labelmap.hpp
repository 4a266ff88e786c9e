#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semcast/scenario.hpp"

namespace semcast {

/// Pixel statistics of an ingested semantic label map.
struct LabelMapStats {
    SignalGeometry geometry;
    std::vector<std::int64_t> class_pixel_counts;  // size num_classes
    int width = 0;
    int height = 0;
};

/// Read a semantic label map and derive its signal geometry. Supported
/// inputs: portable graymap (P2 ASCII or P5 binary) and integer-grid CSV.
/// Labels must lie in [0, num_classes). The per-class pixel share is the
/// average over all declared classes, |X_bar| = sum_l |X_l| / L, so a full
/// partition always yields fraction 1/L regardless of how many labels are
/// actually used.
LabelMapStats ingest_label_map(const std::string& path, int num_classes);

}  // namespace semcast
