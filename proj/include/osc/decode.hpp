#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "osc/core.hpp"

namespace osc {

/// T x C per-frame class scores (higher is better). Column 0 is Background.
class FrameScores {
public:
    FrameScores() = default;
    explicit FrameScores(Matrix values);

    const Matrix& values() const noexcept { return values_; }
    std::size_t frames() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t classes() const noexcept { return static_cast<std::size_t>(values_.cols()); }

private:
    Matrix values_;
};

/// Per-frame argmax class index; ties go to the lower index.
std::vector<std::size_t> argmax_classes(const FrameScores& scores);

/// Per-frame argmax mapped to labels. Class c > 0 maps to stage (c - 1) % 3,
/// which matches every vocabulary layout.
LabelSequence argmax_decode(const FrameScores& scores);

/// Sum of the chosen column per frame, for a 4-column score matrix.
double sequence_score(const FrameScores& scores, const LabelSequence& labels);

/// True when Background-free frames run Initial* Transitioning* End*.
bool is_ordered(const LabelSequence& labels);

/// Highest-scoring label sequence in which every Initial frame precedes every
/// Transitioning frame, which precedes every End frame; Background may appear
/// anywhere. Requires exactly 4 columns. O(T) dynamic program.
LabelSequence ordered_decode(const FrameScores& scores);

/// Frame with the highest score in columns 1..3 (initial, transitioning, end);
/// ties go to the earliest frame.
std::array<std::size_t, 3> top1_frames(const FrameScores& scores);

/// Collapses a full vocabulary score matrix to the 4 columns (background,
/// initial, transitioning, end) of one transition. MultiTask selects that
/// transition's block; PerOsc takes the max over its known objects' blocks;
/// SharedPerTransition is the identity.
FrameScores restrict_to_transition(const FrameScores& scores, const StateVocabulary& vocab,
                                   std::string_view transition);

struct HierarchicalResult {
    std::size_t transition_index = 0;
    std::string transition;
    std::vector<double> transition_scores;
    LabelSequence labels;
};

/// Multi-task decoding: picks the transition whose three state columns have
/// the largest sum over frames of their per-frame max, then runs
/// ordered_decode on that transition's 4 columns.
HierarchicalResult hierarchical_decode(const FrameScores& scores, const StateVocabulary& vocab);

/// Same as above for a bare C = 3N + 1 matrix; transition names are indices.
HierarchicalResult hierarchical_decode(const FrameScores& scores);

}  // namespace osc
