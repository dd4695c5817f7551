#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "osc/errors.hpp"

namespace osc {

using Matrix = Eigen::MatrixXd;

/// Per-frame label. Ambiguous only ever appears in pseudo-label sequences.
enum class StateLabel : std::uint8_t {
    Background = 0,
    Initial = 1,
    Transitioning = 2,
    End = 3,
    Ambiguous = 4,
};

inline constexpr std::array<StateLabel, 3> kStates{
    StateLabel::Initial, StateLabel::Transitioning, StateLabel::End};

constexpr bool is_state(StateLabel l) noexcept {
    return l == StateLabel::Initial || l == StateLabel::Transitioning || l == StateLabel::End;
}

/// Position of a state in the Initial < Transitioning < End order (0, 1, 2).
/// Only meaningful when `is_state(l)`.
constexpr int stage_of(StateLabel l) noexcept { return static_cast<int>(l) - 1; }

constexpr StateLabel state_from_stage(int stage) noexcept {
    return static_cast<StateLabel>(stage + 1);
}

/// One-letter code: B, I, T, E, A.
char label_code(StateLabel l) noexcept;
StateLabel label_from_code(char c);
std::string_view label_name(StateLabel l) noexcept;

/// Frame labels on the 1 fps grid.
using LabelSequence = std::vector<StateLabel>;

std::string encode_labels(const LabelSequence& labels);
LabelSequence decode_labels(std::string_view codes);

/// Trim + lower-case.
std::string canonical_name(std::string_view name);

/// An object state change category, e.g. chicken + shredding.
struct OscCategory {
    std::string object;
    std::string transition;

    /// Canonicalizes both names; throws ValidationError if either is empty.
    static OscCategory make(std::string_view object, std::string_view transition);

    std::string key() const { return object + "+" + transition; }

    auto operator<=>(const OscCategory&) const = default;
    bool operator==(const OscCategory&) const = default;
};

/// T x 3 similarity scores against the (initial, transitioning, end) texts.
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    explicit ScoreMatrix(Matrix values);

    const Matrix& values() const noexcept { return values_; }
    std::size_t frames() const noexcept { return static_cast<std::size_t>(values_.rows()); }

private:
    Matrix values_;
};

/// Global frame embeddings plus optional object-centric embeddings.
struct FeatureSequence {
    Matrix global;
    std::optional<Matrix> object;

    std::size_t frames() const noexcept { return static_cast<std::size_t>(global.rows()); }
    void validate() const;
};

/// Closed time range in seconds.
struct TimeRange {
    double start = 0.0;
    double end = 0.0;

    bool operator==(const TimeRange&) const = default;
};

/// Human-annotated state ranges for one video.
struct AnnotationSet {
    double duration_s = 0.0;
    std::array<std::vector<TimeRange>, 3> ranges;  // indexed by stage

    std::vector<TimeRange>& of(StateLabel s) { return ranges.at(stage_of(s)); }
    const std::vector<TimeRange>& of(StateLabel s) const { return ranges.at(stage_of(s)); }

    bool has_state(StateLabel s) const { return !of(s).empty(); }

    /// Bounds, per-state ordering and cross-state overlap checks.
    void validate() const;

    bool operator==(const AnnotationSet&) const = default;
};

/// Number of 1 fps frames covering a video: ceil(duration_s).
std::size_t frame_count_for(double duration_s);

/// Rasterizes ranges onto the frame grid. Frame t takes the state whose range
/// contains second t, with ranges treated as [start, end); a shared boundary
/// second goes to the later-starting range. Uncovered frames are Background.
LabelSequence labels_from_ranges(const AnnotationSet& annotation, std::size_t frames);

/// Inverse of labels_from_ranges: each maximal run of a state becomes one
/// range [first, last + 1].
AnnotationSet ranges_from_labels(const LabelSequence& labels);

// ---------------------------------------------------------------------------
// Label space

enum class VocabMode { SharedPerTransition, PerOsc, MultiTask };

std::string_view vocab_mode_name(VocabMode mode) noexcept;
VocabMode parse_vocab_mode(std::string_view name);

struct VocabEntry {
    OscCategory osc;
    bool novel = false;
};

struct TransitionObjects {
    std::vector<std::string> known;  // sorted
    std::vector<std::string> novel;  // sorted

    bool operator==(const TransitionObjects&) const = default;
};

/// Decomposition of a class index.
struct ClassInfo {
    StateLabel state = StateLabel::Background;
    std::optional<std::string> transition;
    std::optional<std::string> object;
};

/// Maps (transition, object, state) onto classifier output indices.
/// Background is always index 0. Transitions are ordered lexicographically;
/// within a PerOsc transition, known objects are ordered lexicographically;
/// states run initial, transitioning, end.
class StateVocabulary {
public:
    StateVocabulary() = default;

    VocabMode mode() const noexcept { return mode_; }
    const std::vector<std::string>& transitions() const noexcept { return transitions_; }
    const std::map<std::string, TransitionObjects>& objects() const noexcept { return objects_; }

    /// K: number of state classes (excluding background).
    std::size_t label_count() const noexcept { return label_count_; }
    /// K + 1.
    std::size_t num_classes() const noexcept { return label_count_ + 1; }

    std::size_t transition_index(std::string_view transition) const;
    bool is_known(const OscCategory& osc) const;

    /// Class index for a frame of `osc` carrying `label`. Background -> 0.
    /// Ambiguous, an unknown transition, or (PerOsc) a novel object throw.
    std::size_t class_index(const OscCategory& osc, StateLabel label) const;

    ClassInfo decompose(std::size_t class_index) const;

    /// First state class (initial) of a transition in MultiTask mode, or of an
    /// (object, transition) pair in PerOsc mode.
    std::size_t block_start(const OscCategory& osc) const;

    bool operator==(const StateVocabulary&) const = default;

private:
    friend StateVocabulary build_vocabulary(VocabMode, const std::vector<VocabEntry>&);

    VocabMode mode_ = VocabMode::SharedPerTransition;
    std::vector<std::string> transitions_;
    std::map<std::string, TransitionObjects> objects_;
    std::size_t label_count_ = 3;
    std::vector<std::size_t> per_osc_offsets_;  // PerOsc: first block per transition
};

/// Deterministic class-index assignment from a (object, transition, known/novel)
/// table. Throws on duplicates or on objects that are both known and novel.
StateVocabulary build_vocabulary(VocabMode mode, const std::vector<VocabEntry>& table);

}  // namespace osc
