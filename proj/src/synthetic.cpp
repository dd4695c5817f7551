#include "osc/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

namespace osc {

void SyntheticConfig::validate() const {
    if (num_transitions == 0 || objects_known == 0 || videos_per_osc == 0 || feature_dim == 0)
        throw ValidationError("synthetic counts and dimensions must be positive");
    if (min_frames < 6 || min_frames > max_frames)
        throw ValidationError("frame range must satisfy 6 <= min_frames <= max_frames "
                              "(three state segments of at least 2 frames)");
    if (noise < 0.0 || score_noise < 0.0 || object_offset < 0.0 || object_state < 0.0 ||
        separation <= 0.0)
        throw ValidationError("synthetic scales must be non-negative (separation positive)");
    if (background_fraction < 0.0 || background_fraction >= 1.0)
        throw ValidationError("background fraction must lie in [0, 1)");
    if (confusion < 0.0 || confusion > 1.0) throw ValidationError("confusion must lie in [0, 1]");
    if (val_fraction < 0.0 || test_fraction < 0.0 || val_fraction + test_fraction >= 1.0)
        throw ValidationError("val and test fractions must leave room for training videos");
}

namespace {

const std::array<const char*, 10> kTransitionNames{
    "slicing", "peeling", "melting", "shredding", "mashing",
    "browning", "whisking", "grating", "chopping", "frying"};

const std::array<const char*, 24> kObjectNames{
    "apple",  "potato", "onion",   "cheese", "chicken", "carrot", "bread",    "butter",
    "garlic", "tomato", "cabbage", "pepper", "cucumber", "lemon", "mushroom", "egg",
    "ginger", "banana", "pumpkin", "tofu",   "zucchini", "beef",  "avocado",  "mango"};

using Vec = Eigen::VectorXd;

struct TransitionModel {
    std::string name;
    Vec initial, end, motion;
};

struct ObjectModel {
    std::string name;
    bool novel = false;
    Vec offset;
    Vec initial_look, end_look;
};

class Generator {
public:
    explicit Generator(const SyntheticConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

    Vec gaussian(double scale) {
        Vec v(static_cast<Eigen::Index>(cfg_.feature_dim));
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = scale * normal_(rng_);
        return v;
    }

    double normal() { return normal_(rng_); }
    double uniform() { return uniform_(rng_); }

    std::size_t uniform_int(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }

    // Splits `total` into `parts` non-negative integers (uniform cut points).
    std::vector<std::size_t> composition(std::size_t total, std::size_t parts) {
        std::vector<std::size_t> cuts;
        for (std::size_t i = 0; i + 1 < parts; ++i) cuts.push_back(uniform_int(0, total));
        std::sort(cuts.begin(), cuts.end());
        std::vector<std::size_t> out;
        std::size_t prev = 0;
        for (auto c : cuts) {
            out.push_back(c - prev);
            prev = c;
        }
        out.push_back(total - prev);
        return out;
    }

    std::mt19937_64& rng() { return rng_; }

private:
    const SyntheticConfig& cfg_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// B* I+ B* T+ B* E+ B*, each state segment at least 2 frames.
LabelSequence sample_layout(Generator& gen, std::size_t frames, double background_fraction) {
    std::size_t background =
        static_cast<std::size_t>(std::lround(background_fraction * static_cast<double>(frames)));
    background = std::min(background, frames - 6);
    const auto states = gen.composition(frames - background - 6, 3);
    const auto gaps = gen.composition(background, 4);

    LabelSequence labels;
    auto push = [&](StateLabel l, std::size_t n) { labels.insert(labels.end(), n, l); };
    for (int s = 0; s < 3; ++s) {
        push(StateLabel::Background, gaps[s]);
        push(state_from_stage(s), states[s] + 2);
    }
    push(StateLabel::Background, gaps[3]);
    return labels;
}

// z with P(N(0,1) > z) = p.
double upper_quantile(double p) {
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    if (p >= 1.0) return -std::numeric_limits<double>::infinity();
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(mid / std::numbers::sqrt2) > p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::string object_name(std::size_t transition, std::size_t j, std::size_t per_transition) {
    if (per_transition <= kObjectNames.size())
        return kObjectNames[(transition * 5 + j) % kObjectNames.size()];
    return "object" + std::to_string(transition) + "x" + std::to_string(j);
}

std::string transition_name(std::size_t n) {
    if (n < kTransitionNames.size()) return kTransitionNames[n];
    return "transition" + std::to_string(n);
}

std::string video_id(const OscCategory& osc, std::size_t k) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%03zu", k);
    return osc.transition + "-" + osc.object + "-" + buf;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    Generator gen(cfg);
    const double dim = static_cast<double>(cfg.feature_dim);
    const std::size_t per_transition = cfg.objects_known + cfg.objects_novel;

    // Background lives well away from every state prototype.
    const Vec background = gen.gaussian(3.0 * cfg.separation);

    std::vector<TransitionModel> transitions;
    for (std::size_t n = 0; n < cfg.num_transitions; ++n) {
        TransitionModel t;
        t.name = transition_name(n);
        t.initial = gen.gaussian(cfg.separation);
        t.end = gen.gaussian(cfg.separation);
        // Motion is orthogonal to the initial->end direction and at least as
        // long, so the transitioning anchor is nearest for every drift point.
        const Vec span = t.end - t.initial;
        Vec m = gen.gaussian(cfg.separation);
        m -= (m.dot(span) / span.squaredNorm()) * span;
        t.motion = m.normalized() * span.norm() * 1.1;
        transitions.push_back(std::move(t));
    }

    std::map<std::string, ObjectModel> objects;
    std::vector<std::vector<std::string>> roster(cfg.num_transitions);
    for (std::size_t n = 0; n < cfg.num_transitions; ++n) {
        for (std::size_t j = 0; j < per_transition; ++j) {
            const std::string name = object_name(n, j, per_transition);
            roster[n].push_back(name);
            if (objects.count(name)) continue;
            ObjectModel o;
            o.name = name;
            o.offset = gen.gaussian(cfg.object_offset);
            o.initial_look = gen.gaussian(cfg.object_state);
            o.end_look = gen.gaussian(cfg.object_state);
            objects.emplace(name, std::move(o));
        }
    }

    const Vec confusion_axis = gen.gaussian(1.0).normalized();
    const double confusion_cut = upper_quantile(cfg.confusion);

    Matrix object_projection;
    if (cfg.object_dim > 0) {
        object_projection.resize(static_cast<Eigen::Index>(cfg.object_dim),
                                 static_cast<Eigen::Index>(cfg.feature_dim));
        for (Eigen::Index i = 0; i < object_projection.rows(); ++i)
            for (Eigen::Index j = 0; j < object_projection.cols(); ++j)
                object_projection(i, j) = gen.normal() / std::sqrt(dim);
    }

    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "features");
    fs::create_directories(out_dir / "scores");
    fs::create_directories(out_dir / "annotations");
    if (cfg.object_dim > 0) fs::create_directories(out_dir / "objects");

    SyntheticDataset ds;
    ds.manifest.base_dir = fs::absolute(out_dir);

    for (std::size_t n = 0; n < cfg.num_transitions; ++n) {
        const auto& tr = transitions[n];
        const std::array<Vec, 3> anchors{tr.initial, 0.5 * (tr.initial + tr.end) + tr.motion, tr.end};

        for (std::size_t j = 0; j < per_transition; ++j) {
            const auto& obj = objects.at(roster[n][j]);
            const bool novel = j >= cfg.objects_known;
            const OscCategory osc = OscCategory::make(obj.name, tr.name);

            // Known OSCs: split videos into train / val / test.
            std::vector<Subset> subsets(cfg.videos_per_osc, Subset::Test);
            if (!novel) {
                const auto v = static_cast<double>(cfg.videos_per_osc);
                const auto n_val = static_cast<std::size_t>(std::lround(cfg.val_fraction * v));
                const auto n_test = static_cast<std::size_t>(std::lround(cfg.test_fraction * v));
                for (std::size_t k = 0; k < cfg.videos_per_osc; ++k)
                    subsets[k] = k < n_val ? Subset::Val : (k < n_val + n_test ? Subset::Test : Subset::Train);
                std::shuffle(subsets.begin(), subsets.end(), gen.rng());
            }

            for (std::size_t k = 0; k < cfg.videos_per_osc; ++k) {
                const std::size_t frames = gen.uniform_int(cfg.min_frames, cfg.max_frames);
                const LabelSequence labels = sample_layout(gen, frames, cfg.background_fraction);

                Matrix features(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(cfg.feature_dim));
                Matrix scores(static_cast<Eigen::Index>(frames), 3);
                Matrix object_features;
                if (cfg.object_dim > 0)
                    object_features.resize(static_cast<Eigen::Index>(frames),
                                           static_cast<Eigen::Index>(cfg.object_dim));

                const Vec initial_look = tr.initial + obj.initial_look;
                const Vec end_look = tr.end + obj.end_look;
                const auto segment_begin = std::find(labels.begin(), labels.end(), StateLabel::Transitioning);
                const auto segment_len = static_cast<std::size_t>(
                    std::count(labels.begin(), labels.end(), StateLabel::Transitioning));

                for (std::size_t t = 0; t < frames; ++t) {
                    Vec clean;
                    switch (labels[t]) {
                    case StateLabel::Initial: clean = initial_look; break;
                    case StateLabel::End: clean = end_look; break;
                    case StateLabel::Transitioning: {
                        const auto pos = static_cast<double>(t - static_cast<std::size_t>(segment_begin - labels.begin()));
                        const double u = (pos + 1.0) / (static_cast<double>(segment_len) + 1.0);
                        clean = (1.0 - u) * initial_look + u * end_look + tr.motion;
                        break;
                    }
                    default: clean = background; break;
                    }
                    clean += obj.offset;
                    const Vec x = clean + gen.gaussian(cfg.noise);
                    const auto row = static_cast<Eigen::Index>(t);
                    features.row(row) = x.transpose();

                    for (int s = 0; s < 3; ++s)
                        scores(row, s) = -(x - anchors[s]).squaredNorm() / dim + cfg.score_noise * gen.normal();
                    if (labels[t] == StateLabel::Initial && cfg.confusion > 0.0) {
                        // The scorer mistakes initial for end on frames whose
                        // noise points along `confusion_axis`, so the mistake is
                        // visible in the features rather than a coin flip.
                        const double g = cfg.noise > 0.0 ? confusion_axis.dot(x - clean) / cfg.noise : gen.normal();
                        if (g > confusion_cut) std::swap(scores(row, 0), scores(row, 2));
                    }

                    if (cfg.object_dim > 0) {
                        Vec ox = object_projection * clean;
                        for (Eigen::Index i = 0; i < ox.size(); ++i) ox(i) += cfg.noise * gen.normal();
                        object_features.row(row) = ox.transpose();
                    }
                }

                ManifestRecord rec;
                rec.video_id = video_id(osc, k);
                rec.osc = osc;
                rec.split = novel ? Split::Novel : Split::Known;
                rec.subset = subsets[k];
                rec.duration_s = static_cast<double>(frames);
                rec.features = fs::path("features") / (rec.video_id + ".oscf");
                rec.scores = fs::path("scores") / (rec.video_id + ".oscs");
                rec.annotation = fs::path("annotations") / (rec.video_id + ".json");
                write_matrix_file(out_dir / rec.features, features, MatrixRole::Features);
                write_matrix_file(out_dir / *rec.scores, scores, MatrixRole::Scores);
                if (cfg.object_dim > 0) {
                    rec.object_features = fs::path("objects") / (rec.video_id + ".oscf");
                    write_matrix_file(out_dir / *rec.object_features, object_features, MatrixRole::Features);
                }

                AnnotationDocument doc{rec.video_id, osc, ranges_from_labels(labels)};
                write_annotation_file(out_dir / *rec.annotation, doc);
                ds.annotations.emplace(rec.video_id, std::move(doc));
                ds.manifest.records.push_back(std::move(rec));
            }
        }
    }

    ds.manifest_path = out_dir / "manifest.jsonl";
    write_manifest(ds.manifest_path, ds.manifest);
    return ds;
}

}  // namespace osc
