#include "osc/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace osc {

char label_code(StateLabel l) noexcept {
    switch (l) {
    case StateLabel::Background: return 'B';
    case StateLabel::Initial: return 'I';
    case StateLabel::Transitioning: return 'T';
    case StateLabel::End: return 'E';
    case StateLabel::Ambiguous: return 'A';
    }
    return '?';
}

StateLabel label_from_code(char c) {
    switch (c) {
    case 'B': return StateLabel::Background;
    case 'I': return StateLabel::Initial;
    case 'T': return StateLabel::Transitioning;
    case 'E': return StateLabel::End;
    case 'A': return StateLabel::Ambiguous;
    default: break;
    }
    throw ValidationError(std::string("unknown label code '") + c + "'");
}

std::string_view label_name(StateLabel l) noexcept {
    switch (l) {
    case StateLabel::Background: return "background";
    case StateLabel::Initial: return "initial";
    case StateLabel::Transitioning: return "transitioning";
    case StateLabel::End: return "end";
    case StateLabel::Ambiguous: return "ambiguous";
    }
    return "?";
}

std::string encode_labels(const LabelSequence& labels) {
    std::string out;
    out.reserve(labels.size());
    for (auto l : labels) out.push_back(label_code(l));
    return out;
}

LabelSequence decode_labels(std::string_view codes) {
    LabelSequence out;
    out.reserve(codes.size());
    for (char c : codes) out.push_back(label_from_code(c));
    return out;
}

std::string canonical_name(std::string_view name) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    auto first = std::find_if_not(name.begin(), name.end(), is_space);
    auto last = std::find_if_not(name.rbegin(), name.rend(), is_space).base();
    std::string out;
    if (first < last) out.assign(first, last);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

OscCategory OscCategory::make(std::string_view object, std::string_view transition) {
    OscCategory osc{canonical_name(object), canonical_name(transition)};
    if (osc.object.empty() || osc.transition.empty())
        throw ValidationError("OSC category needs a non-empty object and transition");
    return osc;
}

ScoreMatrix::ScoreMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.cols() != 3)
        throw ValidationError("score matrix must have 3 columns, got " +
                              std::to_string(values_.cols()));
    if (values_.rows() < 1) throw ValidationError("score matrix has no frames");
    if (!values_.allFinite()) throw ValidationError("score matrix has non-finite entries");
}

void FeatureSequence::validate() const {
    if (global.rows() < 1 || global.cols() < 1)
        throw ValidationError("feature sequence is empty");
    if (!global.allFinite()) throw ValidationError("global features have non-finite entries");
    if (object) {
        if (object->rows() != global.rows())
            throw ValidationError("object features have " + std::to_string(object->rows()) +
                                  " frames, global features " + std::to_string(global.rows()));
        if (object->cols() < 1) throw ValidationError("object features have zero width");
        if (!object->allFinite())
            throw ValidationError("object features have non-finite entries");
    }
}

void AnnotationSet::validate() const {
    if (!std::isfinite(duration_s) || duration_s <= 0.0)
        throw ValidationError("annotation duration must be positive");
    for (int s = 0; s < 3; ++s) {
        const auto& rs = ranges[s];
        for (std::size_t i = 0; i < rs.size(); ++i) {
            const auto& r = rs[i];
            if (!(r.start >= 0.0 && r.start <= r.end && r.end <= duration_s))
                throw ValidationError("range [" + std::to_string(r.start) + ", " +
                                      std::to_string(r.end) + "] of state " +
                                      std::string(label_name(state_from_stage(s))) +
                                      " is outside [0, duration]");
            if (i > 0 && rs[i - 1].end > r.start)
                throw ValidationError("ranges of state " +
                                      std::string(label_name(state_from_stage(s))) +
                                      " overlap or are unsorted");
        }
    }
    // Different states may touch at a boundary second but not overlap.
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            for (const auto& ra : ranges[a])
                for (const auto& rb : ranges[b])
                    if (std::max(ra.start, rb.start) < std::min(ra.end, rb.end))
                        throw ValidationError(
                            "ranges of " + std::string(label_name(state_from_stage(a))) +
                            " and " + std::string(label_name(state_from_stage(b))) + " overlap");
}

std::size_t frame_count_for(double duration_s) {
    return static_cast<std::size_t>(std::ceil(duration_s));
}

LabelSequence labels_from_ranges(const AnnotationSet& annotation, std::size_t frames) {
    annotation.validate();
    if (frames < 1) throw ValidationError("frame count must be positive");
    if (frames != frame_count_for(annotation.duration_s))
        throw ValidationError("frame count " + std::to_string(frames) +
                              " does not match duration " +
                              std::to_string(annotation.duration_s));

    LabelSequence labels(frames, StateLabel::Background);
    std::vector<double> owner_start(frames, -1.0);
    for (int s = 0; s < 3; ++s) {
        for (const auto& r : annotation.ranges[s]) {
            auto first = static_cast<std::size_t>(std::ceil(r.start));
            for (std::size_t t = first; t < frames && static_cast<double>(t) < r.end; ++t) {
                if (r.start > owner_start[t]) {
                    owner_start[t] = r.start;
                    labels[t] = state_from_stage(s);
                }
            }
        }
    }
    return labels;
}

AnnotationSet ranges_from_labels(const LabelSequence& labels) {
    AnnotationSet out;
    out.duration_s = static_cast<double>(labels.size());
    std::size_t t = 0;
    while (t < labels.size()) {
        const auto l = labels[t];
        std::size_t u = t + 1;
        while (u < labels.size() && labels[u] == l) ++u;
        if (is_state(l))
            out.of(l).push_back({static_cast<double>(t), static_cast<double>(u)});
        t = u;
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view vocab_mode_name(VocabMode mode) noexcept {
    switch (mode) {
    case VocabMode::SharedPerTransition: return "shared";
    case VocabMode::PerOsc: return "per-osc";
    case VocabMode::MultiTask: return "multitask";
    }
    return "?";
}

VocabMode parse_vocab_mode(std::string_view name) {
    if (name == "shared") return VocabMode::SharedPerTransition;
    if (name == "per-osc") return VocabMode::PerOsc;
    if (name == "multitask") return VocabMode::MultiTask;
    throw ValidationError("unknown vocabulary mode '" + std::string(name) + "'");
}

StateVocabulary build_vocabulary(VocabMode mode, const std::vector<VocabEntry>& table) {
    if (table.empty()) throw ValidationError("vocabulary table is empty");

    std::set<OscCategory> seen;
    std::map<std::string, TransitionObjects> objects;
    for (const auto& entry : table) {
        auto osc = OscCategory::make(entry.osc.object, entry.osc.transition);
        if (!seen.insert(osc).second)
            throw ValidationError("duplicate vocabulary entry " + osc.key());
        auto& slot = objects[osc.transition];
        (entry.novel ? slot.novel : slot.known).push_back(osc.object);
    }
    for (auto& [transition, objs] : objects) {
        std::sort(objs.known.begin(), objs.known.end());
        std::sort(objs.novel.begin(), objs.novel.end());
        if (objs.known.empty())
            throw ValidationError("transition '" + transition + "' has no known objects");
        // Duplicates were rejected above, so a shared name means known and novel overlap.
        std::vector<std::string> both;
        std::set_intersection(objs.known.begin(), objs.known.end(), objs.novel.begin(),
                              objs.novel.end(), std::back_inserter(both));
        if (!both.empty())
            throw ValidationError("object '" + both.front() + "' is both known and novel for '" +
                                  transition + "'");
    }

    StateVocabulary vocab;
    vocab.mode_ = mode;
    vocab.objects_ = std::move(objects);
    for (const auto& [transition, objs] : vocab.objects_) vocab.transitions_.push_back(transition);

    switch (mode) {
    case VocabMode::SharedPerTransition: vocab.label_count_ = 3; break;
    case VocabMode::MultiTask: vocab.label_count_ = 3 * vocab.transitions_.size(); break;
    case VocabMode::PerOsc: {
        std::size_t blocks = 0;
        for (const auto& transition : vocab.transitions_) {
            vocab.per_osc_offsets_.push_back(blocks);
            blocks += vocab.objects_.at(transition).known.size();
        }
        vocab.label_count_ = 3 * blocks;
        break;
    }
    }
    return vocab;
}

std::size_t StateVocabulary::transition_index(std::string_view transition) const {
    auto it = std::lower_bound(transitions_.begin(), transitions_.end(), transition);
    if (it == transitions_.end() || *it != transition)
        throw ValidationError("transition '" + std::string(transition) + "' not in vocabulary");
    return static_cast<std::size_t>(it - transitions_.begin());
}

bool StateVocabulary::is_known(const OscCategory& osc) const {
    auto it = objects_.find(osc.transition);
    if (it == objects_.end()) return false;
    return std::binary_search(it->second.known.begin(), it->second.known.end(), osc.object);
}

std::size_t StateVocabulary::block_start(const OscCategory& osc) const {
    const std::size_t n = transition_index(osc.transition);
    switch (mode_) {
    case VocabMode::SharedPerTransition: return 1;
    case VocabMode::MultiTask: return 1 + 3 * n;
    case VocabMode::PerOsc: {
        const auto& known = objects_.at(osc.transition).known;
        auto it = std::lower_bound(known.begin(), known.end(), osc.object);
        if (it == known.end() || *it != osc.object)
            throw ValidationError("object '" + osc.object + "' is not a known object of '" +
                                  osc.transition + "'");
        return 1 + 3 * (per_osc_offsets_[n] + static_cast<std::size_t>(it - known.begin()));
    }
    }
    return 1;
}

std::size_t StateVocabulary::class_index(const OscCategory& osc, StateLabel label) const {
    if (label == StateLabel::Background) return 0;
    if (!is_state(label)) throw ValidationError("ambiguous frames have no class index");
    return block_start(osc) + static_cast<std::size_t>(stage_of(label));
}

ClassInfo StateVocabulary::decompose(std::size_t class_index) const {
    if (class_index > label_count_)
        throw ValidationError("class index " + std::to_string(class_index) + " out of range");
    ClassInfo info;
    if (class_index == 0) return info;
    const std::size_t block = (class_index - 1) / 3;
    info.state = state_from_stage(static_cast<int>((class_index - 1) % 3));
    switch (mode_) {
    case VocabMode::SharedPerTransition: break;
    case VocabMode::MultiTask: info.transition = transitions_[block]; break;
    case VocabMode::PerOsc: {
        auto it = std::upper_bound(per_osc_offsets_.begin(), per_osc_offsets_.end(), block);
        const auto n = static_cast<std::size_t>(it - per_osc_offsets_.begin()) - 1;
        info.transition = transitions_[n];
        info.object = objects_.at(transitions_[n]).known[block - per_osc_offsets_[n]];
        break;
    }
    }
    return info;
}

}  // namespace osc
