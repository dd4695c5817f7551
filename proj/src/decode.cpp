#include "osc/decode.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>

namespace osc {

FrameScores::FrameScores(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1) throw ValidationError("frame scores have no frames");
    if (values_.cols() < 4)
        throw ValidationError("frame scores need at least 4 classes, got " +
                              std::to_string(values_.cols()));
    if (!values_.allFinite()) throw ValidationError("frame scores have non-finite entries");
}

std::vector<std::size_t> argmax_classes(const FrameScores& scores) {
    const Matrix& v = scores.values();
    std::vector<std::size_t> out(scores.frames());
    for (Eigen::Index t = 0; t < v.rows(); ++t) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < v.cols(); ++c)
            if (v(t, c) > v(t, best)) best = c;
        out[static_cast<std::size_t>(t)] = static_cast<std::size_t>(best);
    }
    return out;
}

LabelSequence argmax_decode(const FrameScores& scores) {
    LabelSequence out;
    for (auto c : argmax_classes(scores))
        out.push_back(c == 0 ? StateLabel::Background
                             : state_from_stage(static_cast<int>((c - 1) % 3)));
    return out;
}

double sequence_score(const FrameScores& scores, const LabelSequence& labels) {
    if (scores.classes() != 4) throw ValidationError("sequence_score needs 4 columns");
    if (labels.size() != scores.frames()) throw ValidationError("label/score length mismatch");
    double sum = 0.0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] == StateLabel::Ambiguous)
            throw ValidationError("ambiguous label has no score column");
        sum += scores.values()(static_cast<Eigen::Index>(t), static_cast<int>(labels[t]));
    }
    return sum;
}

bool is_ordered(const LabelSequence& labels) {
    int stage = 0;
    for (auto l : labels) {
        if (!is_state(l)) continue;
        if (stage_of(l) < stage) return false;
        stage = stage_of(l);
    }
    return true;
}

LabelSequence ordered_decode(const FrameScores& scores) {
    if (scores.classes() != 4)
        throw ValidationError("ordered decoding needs exactly 4 classes, got " +
                              std::to_string(scores.classes()));
    const Matrix& v = scores.values();
    const std::size_t T = scores.frames();

    // Stage k = last non-background label so far (0: none, 1..3: I/T/E).
    // At stage k a frame is either Background (stay) or label k, entered from
    // any stage <= k. Only the previous row of scores is kept; `from[t][k]`
    // records the stage at t - 1, or kStay when frame t is Background.
    constexpr std::uint8_t kStay = 0xff;
    std::array<double, 4> prev{}, cur{};
    std::vector<std::array<std::uint8_t, 4>> from(T);
    for (int k = 0; k < 4; ++k) prev[k] = v(0, k);
    for (std::size_t t = 1; t < T; ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        const double bg = v(row, 0);
        int best = 0;  // argmax of prev[0..k]; ties go to the highest stage
        cur[0] = prev[0] + bg;
        from[t][0] = kStay;
        for (int k = 1; k < 4; ++k) {
            best = prev[k] >= prev[best] ? k : best;
            const double stay = prev[k] + bg;
            const double enter = prev[best] + v(row, k);
            const bool keep = stay >= enter;
            cur[k] = keep ? stay : enter;
            from[t][k] = keep ? kStay : static_cast<std::uint8_t>(best);
        }
        prev = cur;
    }

    int k = 0;
    for (int c = 1; c < 4; ++c)
        if (prev[c] > prev[k]) k = c;

    LabelSequence out(T, StateLabel::Background);
    for (std::size_t t = T - 1; t > 0; --t) {
        const std::uint8_t f = from[t][k];
        const bool stay = f == kStay;
        out[t] = stay ? StateLabel::Background : static_cast<StateLabel>(k);
        k = stay ? k : f;
    }
    out[0] = static_cast<StateLabel>(k);
    return out;
}

std::array<std::size_t, 3> top1_frames(const FrameScores& scores) {
    const Matrix& v = scores.values();
    std::array<std::size_t, 3> out{};
    for (int s = 0; s < 3; ++s) {
        Eigen::Index best = 0;
        for (Eigen::Index t = 1; t < v.rows(); ++t)
            if (v(t, s + 1) > v(best, s + 1)) best = t;
        out[s] = static_cast<std::size_t>(best);
    }
    return out;
}

FrameScores restrict_to_transition(const FrameScores& scores, const StateVocabulary& vocab,
                                   std::string_view transition) {
    if (scores.classes() != vocab.num_classes())
        throw ValidationError("frame scores have " + std::to_string(scores.classes()) +
                              " classes, vocabulary " + std::to_string(vocab.num_classes()));
    const Matrix& v = scores.values();
    switch (vocab.mode()) {
    case VocabMode::SharedPerTransition:
        vocab.transition_index(transition);
        return scores;
    case VocabMode::MultiTask: {
        const auto n = static_cast<Eigen::Index>(vocab.transition_index(transition));
        Matrix out(v.rows(), 4);
        out.col(0) = v.col(0);
        out.rightCols(3) = v.middleCols(1 + 3 * n, 3);
        return FrameScores(std::move(out));
    }
    case VocabMode::PerOsc: {
        const auto& known = vocab.objects().at(std::string(transition)).known;
        Matrix out = Matrix::Constant(v.rows(), 4, -std::numeric_limits<double>::infinity());
        out.col(0) = v.col(0);
        for (const auto& object : known) {
            const auto start =
                static_cast<Eigen::Index>(vocab.block_start({object, std::string(transition)}));
            out.rightCols(3) = out.rightCols(3).cwiseMax(v.middleCols(start, 3));
        }
        return FrameScores(std::move(out));
    }
    }
    return scores;
}

namespace {

HierarchicalResult hierarchical_impl(const FrameScores& scores, std::size_t transitions) {
    const Matrix& v = scores.values();
    HierarchicalResult result;
    result.transition_scores.assign(transitions, 0.0);
    for (std::size_t n = 0; n < transitions; ++n) {
        const auto block = v.middleCols(1 + 3 * static_cast<Eigen::Index>(n), 3);
        result.transition_scores[n] = block.rowwise().maxCoeff().sum();
    }
    result.transition_index = static_cast<std::size_t>(
        std::max_element(result.transition_scores.begin(), result.transition_scores.end()) -
        result.transition_scores.begin());

    const auto n = static_cast<Eigen::Index>(result.transition_index);
    Matrix restricted(v.rows(), 4);
    restricted.col(0) = v.col(0);
    restricted.rightCols(3) = v.middleCols(1 + 3 * n, 3);
    result.labels = ordered_decode(FrameScores(std::move(restricted)));
    return result;
}

}  // namespace

HierarchicalResult hierarchical_decode(const FrameScores& scores, const StateVocabulary& vocab) {
    if (vocab.mode() != VocabMode::MultiTask)
        throw ValidationError("hierarchical decoding needs a multitask vocabulary");
    if (scores.classes() != vocab.num_classes())
        throw ValidationError("frame scores have " + std::to_string(scores.classes()) +
                              " classes, vocabulary " + std::to_string(vocab.num_classes()));
    auto result = hierarchical_impl(scores, vocab.transitions().size());
    result.transition = vocab.transitions()[result.transition_index];
    return result;
}

HierarchicalResult hierarchical_decode(const FrameScores& scores) {
    if ((scores.classes() - 1) % 3 != 0)
        throw ValidationError("hierarchical decoding needs 3N + 1 classes, got " +
                              std::to_string(scores.classes()));
    auto result = hierarchical_impl(scores, (scores.classes() - 1) / 3);
    result.transition = std::to_string(result.transition_index);
    return result;
}

}  // namespace osc
