#include "osc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace osc {

std::string_view split_name(Split split) noexcept {
    return split == Split::Known ? "known" : "novel";
}

Split parse_split(std::string_view name) {
    if (name == "known") return Split::Known;
    if (name == "novel") return Split::Novel;
    throw ValidationError("unknown split '" + std::string(name) + "'");
}

namespace {

double mean_over_present(const std::array<bool, 3>& present, const std::array<double, 3>& v) {
    double sum = 0.0;
    int n = 0;
    for (int s = 0; s < 3; ++s) {
        if (!present[s]) continue;
        sum += v[s];
        ++n;
    }
    return n == 0 ? 0.0 : sum / n;
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::size_t VideoResult::present_count() const noexcept {
    std::size_t n = 0;
    for (bool p : present) n += p ? 1 : 0;
    return n;
}

double VideoResult::mean_f1() const noexcept { return mean_over_present(present, f1); }
double VideoResult::mean_precision() const noexcept { return mean_over_present(present, precision); }
double VideoResult::mean_recall() const noexcept { return mean_over_present(present, recall); }

double VideoResult::mean_precision_at_1() const noexcept {
    std::array<double, 3> hits{};
    for (int s = 0; s < 3; ++s) hits[s] = hit_at_1[s] ? 1.0 : 0.0;
    return mean_over_present(present, hits);
}

VideoResult frame_metrics(const LabelSequence& pred, const LabelSequence& gt) {
    if (pred.size() != gt.size())
        throw ValidationError("prediction has " + std::to_string(pred.size()) +
                              " frames, ground truth " + std::to_string(gt.size()));
    std::array<std::size_t, 3> tp{}, fp{}, fn{};
    for (std::size_t t = 0; t < gt.size(); ++t) {
        if (pred[t] == StateLabel::Ambiguous || gt[t] == StateLabel::Ambiguous)
            throw ValidationError("ambiguous labels cannot be evaluated");
        const bool ps = is_state(pred[t]);
        const bool gs = is_state(gt[t]);
        if (ps && gs && pred[t] == gt[t]) {
            ++tp[stage_of(gt[t])];
            continue;
        }
        if (ps) ++fp[stage_of(pred[t])];
        if (gs) ++fn[stage_of(gt[t])];
    }
    VideoResult r;
    for (int s = 0; s < 3; ++s) {
        r.present[s] = tp[s] + fn[s] > 0;
        r.precision[s] = ratio(tp[s], tp[s] + fp[s]);
        r.recall[s] = ratio(tp[s], tp[s] + fn[s]);
        const double pr = r.precision[s] + r.recall[s];
        r.f1[s] = pr == 0.0 ? 0.0 : 2.0 * r.precision[s] * r.recall[s] / pr;
    }
    return r;
}

PrecisionAt1 state_precision_at_1(const std::array<std::size_t, 3>& top1,
                                  const AnnotationSet& annotation) {
    PrecisionAt1 out;
    std::array<double, 3> hits{};
    for (int s = 0; s < 3; ++s) {
        const auto& ranges = annotation.ranges[s];
        out.present[s] = !ranges.empty();
        const double lo = static_cast<double>(top1[s]);
        const double hi = lo + 1.0;
        for (const auto& r : ranges) {
            if (lo <= r.end && r.start < hi) {
                out.hit[s] = true;
                break;
            }
        }
        hits[s] = out.hit[s] ? 1.0 : 0.0;
    }
    out.mean = mean_over_present(out.present, hits);
    return out;
}

void attach_precision_at_1(VideoResult& result, const PrecisionAt1& p1) {
    result.hit_at_1 = p1.hit;
    result.has_precision_at_1 = true;
}

namespace {

struct Accumulator {
    double f1 = 0.0, precision = 0.0, recall = 0.0, p1 = 0.0;
    std::size_t videos = 0, p1_videos = 0;

    void add(const VideoResult& r) {
        f1 += r.mean_f1();
        precision += r.mean_precision();
        recall += r.mean_recall();
        ++videos;
        if (r.has_precision_at_1) {
            p1 += r.mean_precision_at_1();
            ++p1_videos;
        }
    }

    MetricMeans means() const {
        MetricMeans m;
        const double n = static_cast<double>(videos);
        m.f1 = f1 / n;
        m.precision = precision / n;
        m.recall = recall / n;
        m.precision_at_1 = p1_videos == 0 ? 0.0 : p1 / static_cast<double>(p1_videos);
        m.videos = videos;
        return m;
    }
};

}  // namespace

Report aggregate(const std::vector<ScoredResult>& results) {
    if (results.empty()) throw ValidationError("nothing to aggregate");

    // Sum in a canonical order so the output does not depend on input order.
    std::map<std::string, std::map<std::string, std::vector<const VideoResult*>>> groups;
    Report report;
    std::vector<const ScoredResult*> sorted;
    for (const auto& r : results) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const ScoredResult* a, const ScoredResult* b) {
        auto key = [](const ScoredResult* r) {
            return std::make_tuple(r->osc, r->split, r->result.mean_f1(), r->result.mean_precision(),
                                   r->result.mean_recall(), r->result.mean_precision_at_1());
        };
        return key(a) < key(b);
    });
    for (const auto* r : sorted) {
        if (!r->result.evaluable()) {
            ++report.excluded_videos;
            continue;
        }
        groups[r->osc.transition][std::string(split_name(r->split))].push_back(&r->result);
    }

    std::map<std::string, Accumulator> overall;
    for (const auto& [transition, splits] : groups) {
        for (const auto& [split, videos] : splits) {
            Accumulator acc;
            for (const auto* v : videos) acc.add(*v);
            const MetricMeans m = acc.means();
            report.per_transition[transition][split] = m;

            auto& o = overall[split];
            o.f1 += m.f1;
            o.precision += m.precision;
            o.recall += m.recall;
            o.p1 += m.precision_at_1;
            ++o.videos;  // counts transitions here
            o.p1_videos += m.videos;
        }
    }
    for (const auto& [split, acc] : overall) {
        const double n = static_cast<double>(acc.videos);
        MetricMeans m;
        m.f1 = acc.f1 / n;
        m.precision = acc.precision / n;
        m.recall = acc.recall / n;
        m.precision_at_1 = acc.p1 / n;
        m.transitions = acc.videos;
        m.videos = acc.p1_videos;
        report.overall[split] = m;
    }
    return report;
}

namespace {

nlohmann::json means_json(const MetricMeans& m, bool with_transitions) {
    nlohmann::json j;
    j["f1"] = m.f1;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["precision_at_1"] = m.precision_at_1;
    j["videos"] = m.videos;
    if (with_transitions) j["transitions"] = m.transitions;
    return j;
}

}  // namespace

std::string Report::to_json() const {
    nlohmann::json j;
    j["per_transition"] = nlohmann::json::object();
    for (const auto& [transition, splits] : per_transition)
        for (const auto& [split, m] : splits) j["per_transition"][transition][split] = means_json(m, false);
    j["overall"] = nlohmann::json::object();
    for (const auto& [split, m] : overall) j["overall"][split] = means_json(m, true);
    j["diagnostics"]["excluded_videos"] = excluded_videos;
    return j.dump(2) + "\n";
}

std::string Report::to_table() const {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-24s %-6s %7s %7s %7s %7s %6s\n", "transition", "split", "F1",
                  "prec", "recall", "P@1", "videos");
    os << line;
    auto row = [&](const std::string& name, const std::string& split, const MetricMeans& m) {
        std::snprintf(line, sizeof line, "%-24s %-6s %7.4f %7.4f %7.4f %7.4f %6zu\n", name.c_str(),
                      split.c_str(), m.f1, m.precision, m.recall, m.precision_at_1, m.videos);
        os << line;
    };
    for (const auto& [transition, splits] : per_transition)
        for (const auto& [split, m] : splits) row(transition, split, m);
    for (const auto& [split, m] : overall) row("overall", split, m);
    if (excluded_videos > 0) os << "excluded videos (no state frames): " << excluded_videos << "\n";
    return os.str();
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("embedding dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ValidationError("zero-norm embedding");
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

RetrievalResult retrieve_by_state(const std::vector<double>& query,
                                  const std::vector<RetrievalEntry>& pool) {
    if (pool.empty()) throw ValidationError("retrieval pool is empty");
    RetrievalResult out;
    out.nearest_distance = std::numeric_limits<double>::infinity();
    out.furthest_distance = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const double d = cosine_distance(query, pool[i].embedding);
        if (d < out.nearest_distance) {
            out.nearest_distance = d;
            out.nearest = i;
        }
        if (d > out.furthest_distance) {
            out.furthest_distance = d;
            out.furthest = i;
        }
    }
    return out;
}

}  // namespace osc
