#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "osc/core.hpp"

namespace osc {

/// Pseudo-label thresholds. `tau` is compared against the raw row sum of the
/// three scores; `delta` is the margin a state must win by against both others.
struct Thresholds {
    double delta = 0.0;
    double tau = 0.0;

    void validate() const;
    bool operator==(const Thresholds&) const = default;
};

/// Background if the row sum is below tau; otherwise the state whose score beats
/// both others by strictly more than delta; otherwise Ambiguous.
StateLabel assign_frame_label(const std::array<double, 3>& row, const Thresholds& th);

LabelSequence assign_video_labels(const ScoreMatrix& scores, const Thresholds& th);

/// Keeps a maximum-size subset of the state frames whose stages are
/// non-decreasing in time and demotes every other state frame to Ambiguous.
/// Background and Ambiguous frames pass through untouched. Ties are resolved
/// by choosing the lowest stage at each frame while backtracking.
LabelSequence enforce_causal_order(const LabelSequence& labels);

/// Full pseudo-labeling for one video: threshold rule, then (optionally) the
/// ordering refinement.
LabelSequence pseudo_label(const ScoreMatrix& scores, const Thresholds& th, bool ordering = true);

struct ScoredVideo {
    ScoreMatrix scores;
    LabelSequence ground_truth;
};

struct SurfacePoint {
    double tau = 0.0;
    double delta = 0.0;
    double f1 = 0.0;
};

struct GridSearchResult {
    Thresholds best;
    double best_f1 = 0.0;
    std::vector<SurfacePoint> surface;  // tau-major, grid order
};

/// Mean video F1 of pseudo labels against ground truth, with frames the
/// pseudo labeler left Ambiguous removed from both sides. The states a video is
/// scored on are those present in its full ground truth; videos without any
/// state frames are skipped.
double pseudo_label_f1(std::span<const ScoredVideo> videos, const Thresholds& th,
                       bool ordering = true);

/// Exhaustive search over tau_grid x delta_grid. Ties prefer the smaller tau,
/// then the smaller delta.
GridSearchResult grid_search_thresholds(std::span<const ScoredVideo> videos,
                                        std::span<const double> tau_grid,
                                        std::span<const double> delta_grid,
                                        bool ordering = true);

struct LabelStats {
    std::array<std::size_t, 5> counts{};  // indexed by StateLabel value

    std::size_t total() const noexcept;
    std::size_t count(StateLabel l) const noexcept { return counts[static_cast<std::size_t>(l)]; }
    double fraction(StateLabel l) const noexcept;

    LabelStats& operator+=(const LabelStats& other) noexcept;
    bool operator==(const LabelStats&) const = default;
};

LabelStats label_stats(const LabelSequence& labels);

}  // namespace osc
