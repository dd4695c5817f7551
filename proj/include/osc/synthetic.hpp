#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "osc/dataio.hpp"

namespace osc {

/// Knobs for the seeded synthetic OSC corpus.
///
/// Each transition has prototypes for its initial and end states plus a shared
/// motion direction; transitioning frames drift linearly from the initial
/// appearance to the end appearance while offset by the motion direction, the
/// same way for every object. Objects add a constant offset and an
/// object-specific appearance for each state. Novel objects reuse the
/// transition prototypes with offsets never seen in training.
struct SyntheticConfig {
    std::size_t num_transitions = 2;
    std::size_t objects_known = 3;  // per transition
    std::size_t objects_novel = 2;  // per transition
    std::size_t videos_per_osc = 8;
    std::size_t min_frames = 24;
    std::size_t max_frames = 40;
    std::size_t feature_dim = 32;
    std::size_t object_dim = 0;  // 0: no object-centric features
    double separation = 1.0;     // scale of state prototypes
    double noise = 0.5;          // per-dimension feature noise
    double object_offset = 0.5;  // per-object constant offset scale
    double object_state = 0.0;   // per-(object, state) appearance scale
    double background_fraction = 0.3;
    double score_noise = 0.1;    // additive noise on similarity scores
    double confusion = 0.0;      // share of initial frames scored as end; the feature
                                 // noise decides which ones
    double val_fraction = 0.2;   // of known-OSC videos
    double test_fraction = 0.25; // of known-OSC videos; novel videos are all test
    std::uint64_t seed = 42;

    void validate() const;
};

struct SyntheticDataset {
    std::filesystem::path manifest_path;
    Manifest manifest;
    std::map<std::string, AnnotationDocument> annotations;  // by video id
};

/// Writes features/, scores/, annotations/ (and objects/ when object_dim > 0)
/// plus manifest.jsonl under `out_dir`. Identical config => identical bytes.
SyntheticDataset generate_synthetic(const SyntheticConfig& config,
                                    const std::filesystem::path& out_dir);

}  // namespace osc
