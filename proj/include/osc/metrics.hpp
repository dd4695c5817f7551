#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "osc/core.hpp"

namespace osc {

enum class Split { Known, Novel };

std::string_view split_name(Split split) noexcept;
Split parse_split(std::string_view name);

/// Per-video scores. Arrays are indexed by stage (initial, transitioning, end);
/// entries for states absent from the ground truth are zero and ignored.
struct VideoResult {
    std::array<bool, 3> present{};
    std::array<double, 3> precision{};
    std::array<double, 3> recall{};
    std::array<double, 3> f1{};
    std::array<bool, 3> hit_at_1{};
    bool has_precision_at_1 = false;

    std::size_t present_count() const noexcept;
    bool evaluable() const noexcept { return present_count() > 0; }

    /// Means over present states.
    double mean_f1() const noexcept;
    double mean_precision() const noexcept;
    double mean_recall() const noexcept;
    double mean_precision_at_1() const noexcept;
};

/// Frame-level precision / recall / F1 for each state present in `gt`.
/// Empty denominators yield 0. Background is never scored.
VideoResult frame_metrics(const LabelSequence& pred, const LabelSequence& gt);

struct PrecisionAt1 {
    std::array<bool, 3> present{};
    std::array<bool, 3> hit{};
    double mean = 0.0;
};

/// A selected frame t covers [t, t+1); it hits when that interval meets any
/// annotated range of the same state. `top1` is indexed by stage.
PrecisionAt1 state_precision_at_1(const std::array<std::size_t, 3>& top1,
                                  const AnnotationSet& annotation);

/// Copies the precision@1 outcome into a VideoResult.
void attach_precision_at_1(VideoResult& result, const PrecisionAt1& p1);

struct ScoredResult {
    VideoResult result;
    OscCategory osc;
    Split split = Split::Known;
};

struct MetricMeans {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double precision_at_1 = 0.0;
    std::size_t videos = 0;       // videos averaged
    std::size_t transitions = 0;  // transitions averaged (overall blocks only)
};

/// Three-level averaging: states -> video -> transition (per split) ->
/// unweighted overall mean across transitions.
struct Report {
    std::map<std::string, std::map<std::string, MetricMeans>> per_transition;  // transition -> split
    std::map<std::string, MetricMeans> overall;                                // split
    std::size_t excluded_videos = 0;  // no state frames in ground truth

    std::string to_json() const;
    std::string to_table() const;
};

Report aggregate(const std::vector<ScoredResult>& results);

struct RetrievalEntry {
    std::vector<double> embedding;
    OscCategory osc;
};

struct RetrievalResult {
    std::size_t nearest = 0;
    std::size_t furthest = 0;
    double nearest_distance = 0.0;
    double furthest_distance = 0.0;
};

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b);

/// Nearest and furthest pool entries by cosine distance; ties go to the first
/// occurrence.
RetrievalResult retrieve_by_state(const std::vector<double>& query,
                                  const std::vector<RetrievalEntry>& pool);

}  // namespace osc
