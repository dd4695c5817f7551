#pragma once

// End-to-end stages shared by the CLI, the Python module and the acceptance
// suite: pseudo-labeling, threshold sweeps, training, inference, evaluation.

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "osc/core.hpp"
#include "osc/dataio.hpp"
#include "osc/decode.hpp"
#include "osc/metrics.hpp"
#include "osc/model.hpp"
#include "osc/pseudolabel.hpp"
#include "osc/train.hpp"

namespace osc {

// --- pseudo labels ---------------------------------------------------------

struct PseudoLabelOptions {
    Thresholds thresholds;
    bool ordering = true;
    std::optional<Subset> subset = Subset::Train;
    std::size_t workers = 1;
};

struct PseudoLabelRun {
    std::map<std::string, LabelSequence> labels;  // by video id
    LabelStats stats;
};

/// Thresholds (and optionally orders) the score file of every selected record.
PseudoLabelRun compute_pseudo_labels(const Manifest& manifest, const PseudoLabelOptions& options);

/// One `<video_id>.json` label file per video under `dir`.
void write_pseudo_labels(const std::filesystem::path& dir, const PseudoLabelRun& run);
std::map<std::string, LabelSequence> read_pseudo_labels(const std::filesystem::path& dir,
                                                        const Manifest& manifest,
                                                        std::optional<Subset> subset = Subset::Train);

// --- threshold sweep -------------------------------------------------------

/// Grid search on records of `subset` (default val) that carry both scores
/// and annotations.
GridSearchResult sweep_thresholds(const Manifest& manifest, const std::vector<double>& tau_grid,
                                  const std::vector<double>& delta_grid, bool ordering = true,
                                  Subset subset = Subset::Val);

/// CSV with header "tau,delta,f1", one row per grid point.
std::string surface_csv(const GridSearchResult& result);

// --- training --------------------------------------------------------------

struct TrainOptions {
    VocabMode vocab = VocabMode::SharedPerTransition;
    ModelConfig model;  // input_dim / num_classes / max_frames are filled in
    TrainConfig train;
    bool object_features = false;
};

struct TrainedModels {
    StateVocabulary vocab;
    std::vector<VocabEntry> table;
    bool object_features = false;
    std::map<std::string, Checkpoint> models;  // transition name, or "all"
    std::map<std::string, std::vector<double>> epoch_loss;

    /// Model that scores videos of `transition`.
    const Checkpoint& model_for(const std::string& transition) const;
};

/// Vocabulary table from a manifest: objects of known train records are
/// known, objects of novel records are novel.
std::vector<VocabEntry> vocabulary_table(const Manifest& manifest);

/// Model input for one record: global features, optionally concatenated with
/// object-centric features.
Matrix load_model_inputs(const Manifest& manifest, const ManifestRecord& record, bool object_features);

/// Trains one model per transition (shared vocabulary) or a single model
/// (per-OSC and multitask vocabularies) on the train subset.
TrainedModels train_models(const Manifest& manifest,
                           const std::map<std::string, LabelSequence>& pseudo_labels,
                           const TrainOptions& options);

/// Writes vocab.json, one .oscm checkpoint per model and train_log.csv.
void save_models(const std::filesystem::path& dir, const TrainedModels& models);
TrainedModels load_models(const std::filesystem::path& dir);

// --- inference -------------------------------------------------------------

enum class DecodeMode { Argmax, Ordered, Hierarchical };

std::string_view decode_mode_name(DecodeMode mode) noexcept;
DecodeMode parse_decode_mode(std::string_view name);

struct Prediction {
    std::string video_id;
    std::string transition;  // decoded transition (hierarchical) or the record's
    LabelSequence labels;
    std::array<std::size_t, 3> top1{};
    FrameScores scores;  // 4 columns: background, initial, transitioning, end
};

struct InferOptions {
    DecodeMode decode = DecodeMode::Ordered;
    std::optional<Subset> subset = Subset::Test;
    std::size_t workers = 1;
};

std::vector<Prediction> run_inference(const Manifest& manifest, const TrainedModels& models,
                                      const InferOptions& options);

/// `<id>.json` ({video_id, transition, labels, top1}) and `<id>.scores.oscs`.
void write_predictions(const std::filesystem::path& dir, const std::vector<Prediction>& predictions);
std::map<std::string, Prediction> read_predictions(const std::filesystem::path& dir,
                                                   const Manifest& manifest,
                                                   std::optional<Subset> subset = Subset::Test);

// --- evaluation ------------------------------------------------------------

/// Scores every selected record that has a prediction and an annotation.
Report evaluate(const Manifest& manifest, const std::map<std::string, Prediction>& predictions,
                std::optional<Subset> subset = Subset::Test);

Report evaluate(const Manifest& manifest, const std::vector<Prediction>& predictions,
                std::optional<Subset> subset = Subset::Test);

}  // namespace osc
