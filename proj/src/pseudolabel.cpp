#include "osc/pseudolabel.hpp"

#include <cmath>

#include "osc/metrics.hpp"

namespace osc {

void Thresholds::validate() const {
    if (!std::isfinite(delta) || delta < 0.0)
        throw ValidationError("delta must be finite and non-negative");
    if (!std::isfinite(tau)) throw ValidationError("tau must be finite");
}

StateLabel assign_frame_label(const std::array<double, 3>& row, const Thresholds& th) {
    const double sum = row[0] + row[1] + row[2];
    if (sum < th.tau) return StateLabel::Background;
    for (int s = 0; s < 3; ++s) {
        const int a = (s + 1) % 3;
        const int b = (s + 2) % 3;
        if (row[s] - row[a] > th.delta && row[s] - row[b] > th.delta) return state_from_stage(s);
    }
    return StateLabel::Ambiguous;
}

LabelSequence assign_video_labels(const ScoreMatrix& scores, const Thresholds& th) {
    th.validate();
    const Matrix& v = scores.values();
    LabelSequence labels(scores.frames());
    for (Eigen::Index t = 0; t < v.rows(); ++t)
        labels[static_cast<std::size_t>(t)] = assign_frame_label({v(t, 0), v(t, 1), v(t, 2)}, th);
    return labels;
}

LabelSequence enforce_causal_order(const LabelSequence& labels) {
    std::vector<std::size_t> frames;
    for (std::size_t t = 0; t < labels.size(); ++t)
        if (is_state(labels[t])) frames.push_back(t);
    if (frames.empty()) return labels;

    // best[i][s]: most frames kept among the first i+1 state frames when the
    // running stage at frame i is s (stage never decreases).
    const std::size_t m = frames.size();
    std::vector<std::array<int, 3>> best(m);
    for (std::size_t i = 0; i < m; ++i) {
        const int stage = stage_of(labels[frames[i]]);
        int prefix = -1;
        for (int s = 0; s < 3; ++s) {
            const int prev = i == 0 ? 0 : best[i - 1][s];
            prefix = std::max(prefix, prev);
            best[i][s] = prefix + (stage == s ? 1 : 0);
        }
    }

    LabelSequence out = labels;
    int s = 0;
    for (int c = 1; c < 3; ++c)
        if (best[m - 1][c] > best[m - 1][s]) s = c;
    for (std::size_t i = m; i-- > 0;) {
        if (stage_of(labels[frames[i]]) != s) out[frames[i]] = StateLabel::Ambiguous;
        if (i == 0) break;
        // Lowest predecessor stage that realizes best[i][s].
        const int gain = stage_of(labels[frames[i]]) == s ? 1 : 0;
        for (int p = 0; p <= s; ++p) {
            if (best[i - 1][p] + gain == best[i][s]) {
                s = p;
                break;
            }
        }
    }
    return out;
}

LabelSequence pseudo_label(const ScoreMatrix& scores, const Thresholds& th, bool ordering) {
    auto labels = assign_video_labels(scores, th);
    return ordering ? enforce_causal_order(labels) : labels;
}

double pseudo_label_f1(std::span<const ScoredVideo> videos, const Thresholds& th, bool ordering) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& video : videos) {
        if (video.ground_truth.size() != video.scores.frames())
            throw ValidationError("ground truth and score matrix differ in length");
        const auto pred = pseudo_label(video.scores, th, ordering);

        LabelSequence kept_pred, kept_gt;
        for (std::size_t t = 0; t < pred.size(); ++t) {
            if (pred[t] == StateLabel::Ambiguous) continue;
            kept_pred.push_back(pred[t]);
            kept_gt.push_back(video.ground_truth[t]);
        }
        VideoResult r = kept_pred.empty() ? VideoResult{} : frame_metrics(kept_pred, kept_gt);
        for (auto s : kStates) {
            const auto i = static_cast<std::size_t>(stage_of(s));
            for (auto g : video.ground_truth)
                if (g == s) r.present[i] = true;
        }
        if (!r.evaluable()) continue;
        sum += r.mean_f1();
        ++count;
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

GridSearchResult grid_search_thresholds(std::span<const ScoredVideo> videos,
                                        std::span<const double> tau_grid,
                                        std::span<const double> delta_grid, bool ordering) {
    if (tau_grid.empty() || delta_grid.empty()) throw ValidationError("threshold grid is empty");
    if (videos.empty()) throw ValidationError("no videos to search thresholds on");

    GridSearchResult result;
    bool have_best = false;
    for (double tau : tau_grid) {
        for (double delta : delta_grid) {
            const Thresholds th{delta, tau};
            th.validate();
            const double f1 = pseudo_label_f1(videos, th, ordering);
            result.surface.push_back({tau, delta, f1});
            const bool better =
                !have_best || f1 > result.best_f1 ||
                (f1 == result.best_f1 &&
                 (tau < result.best.tau || (tau == result.best.tau && delta < result.best.delta)));
            if (better) {
                result.best = th;
                result.best_f1 = f1;
                have_best = true;
            }
        }
    }
    return result;
}

std::size_t LabelStats::total() const noexcept {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
}

double LabelStats::fraction(StateLabel l) const noexcept {
    const auto n = total();
    return n == 0 ? 0.0 : static_cast<double>(count(l)) / static_cast<double>(n);
}

LabelStats& LabelStats::operator+=(const LabelStats& other) noexcept {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    return *this;
}

LabelStats label_stats(const LabelSequence& labels) {
    LabelStats stats;
    for (auto l : labels) ++stats.counts[static_cast<std::size_t>(l)];
    return stats;
}

}  // namespace osc
