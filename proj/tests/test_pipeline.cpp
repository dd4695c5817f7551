#include <fstream>

#include <gtest/gtest.h>

#include "osc/pipeline.hpp"
#include "osc/synthetic.hpp"
#include "test_support.hpp"

using namespace osc;
using osc::testing::TempDir;

namespace {

SyntheticConfig tiny_data() {
    SyntheticConfig c;
    c.num_transitions = 2;
    c.objects_known = 2;
    c.objects_novel = 1;
    c.videos_per_osc = 6;
    c.min_frames = 12;
    c.max_frames = 18;
    c.feature_dim = 12;
    c.object_dim = 4;
    return c;
}

TrainOptions tiny_train(VocabMode mode) {
    TrainOptions o;
    o.vocab = mode;
    o.model.hidden_dim = 8;
    o.model.num_layers = 1;
    o.model.num_heads = 2;
    o.train.epochs = 3;
    o.train.batch_size = 4;
    o.train.learning_rate = 3e-3;
    return o;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
    return v;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Pipeline, PseudoLabelsCoverTrainVideos) {
    TempDir dir("pl");
    const auto ds = generate_synthetic(tiny_data(), dir / "data");
    PseudoLabelOptions opt;
    opt.thresholds = {0.1, -20.0};
    const auto run = compute_pseudo_labels(ds.manifest, opt);
    EXPECT_EQ(run.labels.size(), ds.manifest.select(Subset::Train).size());
    std::size_t frames = 0;
    for (const auto& [id, l] : run.labels) frames += l.size();
    EXPECT_EQ(run.stats.total(), frames);

    opt.ordering = false;
    const auto raw = compute_pseudo_labels(ds.manifest, opt);
    for (const auto& [id, l] : raw.labels) {
        const auto* rec = &*std::find_if(ds.manifest.records.begin(), ds.manifest.records.end(),
                                          [&](const ManifestRecord& r) { return r.video_id == id; });
        EXPECT_EQ(l, assign_video_labels(read_score_file(ds.manifest.resolve(*rec->scores)), opt.thresholds));
        EXPECT_EQ(run.labels.at(id), enforce_causal_order(l));
    }

    write_pseudo_labels(dir / "labels", run);
    EXPECT_EQ(read_pseudo_labels(dir / "labels", ds.manifest), run.labels);
}

TEST(Pipeline, SweepSurfaceMatchesGrid) {
    TempDir dir("sweep");
    const auto ds = generate_synthetic(tiny_data(), dir / "data");
    const auto taus = linspace(-30, 0, 7), deltas = linspace(0, 0.5, 3);
    const auto r = sweep_thresholds(ds.manifest, taus, deltas);
    EXPECT_EQ(r.surface.size(), taus.size() * deltas.size());
    double best = 0;
    for (const auto& p : r.surface) best = std::max(best, p.f1);
    EXPECT_EQ(r.best_f1, best);
    const auto csv = surface_csv(r);
    EXPECT_EQ(csv.rfind("tau,delta,f1\n", 0), 0u);
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.surface.size() + 1);
}

TEST(Pipeline, PerfectPredictionsScoreOne) {
    TempDir dir("perfect");
    const auto ds = generate_synthetic(tiny_data(), dir / "data");
    std::vector<Prediction> preds;
    for (const auto* r : ds.manifest.select(Subset::Test)) {
        const auto& ann = ds.annotations.at(r->video_id).annotation;
        Prediction p;
        p.video_id = r->video_id;
        p.transition = r->osc.transition;
        p.labels = labels_from_ranges(ann, r->frames());
        for (int s = 0; s < 3; ++s)
            p.top1[static_cast<std::size_t>(s)] = static_cast<std::size_t>(ann.ranges[static_cast<std::size_t>(s)].front().start);
        preds.push_back(p);
    }
    const auto rep = evaluate(ds.manifest, preds);
    for (const auto& [split, m] : rep.overall) {
        EXPECT_DOUBLE_EQ(m.f1, 1.0) << split;
        EXPECT_DOUBLE_EQ(m.precision, 1.0);
        EXPECT_DOUBLE_EQ(m.recall, 1.0);
        EXPECT_DOUBLE_EQ(m.precision_at_1, 1.0);
    }
    EXPECT_EQ(rep.overall.size(), 2u);

    // A prediction made for the wrong transition earns nothing.
    preds.front().transition = "elsewhere";
    const auto penalized = evaluate(ds.manifest, preds);
    EXPECT_LT(penalized.overall.at("known").f1 + penalized.overall.at("novel").f1, 2.0);
}

TEST(Pipeline, TrainInferEvaluateComposes) {
    TempDir dir("e2e");
    const auto ds = generate_synthetic(tiny_data(), dir / "data");
    PseudoLabelOptions pl;
    pl.thresholds = {0.05, -15.0};
    const auto labels = compute_pseudo_labels(ds.manifest, pl).labels;

    for (auto mode : {VocabMode::SharedPerTransition, VocabMode::PerOsc, VocabMode::MultiTask}) {
        auto opt = tiny_train(mode);
        opt.object_features = mode == VocabMode::PerOsc;
        const auto models = train_models(ds.manifest, labels, opt);
        EXPECT_EQ(models.models.size(), mode == VocabMode::SharedPerTransition ? 2u : 1u);
        const auto out = dir / ("models_" + std::string(vocab_mode_name(mode)));
        save_models(out, models);
        const auto loaded = load_models(out);
        EXPECT_EQ(loaded.vocab, models.vocab);

        std::vector<DecodeMode> decodes{DecodeMode::Argmax, DecodeMode::Ordered};
        if (mode == VocabMode::MultiTask) decodes.push_back(DecodeMode::Hierarchical);
        for (auto d : decodes) {
            InferOptions io;
            io.decode = d;
            const auto preds = run_inference(ds.manifest, loaded, io);
            const auto again = run_inference(ds.manifest, models, io);
            ASSERT_EQ(preds.size(), ds.manifest.select(Subset::Test).size());
            for (std::size_t i = 0; i < preds.size(); ++i) {
                EXPECT_EQ(preds[i].labels, again[i].labels);
                EXPECT_EQ(preds[i].scores.classes(), 4u);
                if (d != DecodeMode::Argmax) EXPECT_TRUE(is_ordered(preds[i].labels));
            }
            const auto pdir = out / ("pred_" + std::string(decode_mode_name(d)));
            write_predictions(pdir, preds);
            const auto back = read_predictions(pdir, ds.manifest);
            const auto rep = evaluate(ds.manifest, back);
            EXPECT_EQ(rep.to_json(), evaluate(ds.manifest, preds).to_json());
            EXPECT_TRUE(rep.overall.count("known"));
            EXPECT_TRUE(rep.overall.count("novel"));
        }
    }
    InferOptions bad;
    bad.decode = DecodeMode::Hierarchical;
    const auto shared = train_models(ds.manifest, labels, tiny_train(VocabMode::SharedPerTransition));
    EXPECT_THROW(run_inference(ds.manifest, shared, bad), ValidationError);
}

TEST(Pipeline, KnownOnlyManifestAgreesOnKnownSplit) {
    TempDir dir("known_only");
    const auto ds = generate_synthetic(tiny_data(), dir / "data");
    std::vector<Prediction> preds;
    for (const auto* r : ds.manifest.select(Subset::Test)) {
        Prediction p;
        p.video_id = r->video_id;
        p.transition = r->osc.transition;
        p.labels = LabelSequence(r->frames(), StateLabel::Initial);
        preds.push_back(p);
    }
    Manifest known = ds.manifest;
    std::erase_if(known.records, [](const ManifestRecord& r) { return r.split == Split::Novel; });
    const auto full = evaluate(ds.manifest, preds);
    const auto part = evaluate(known, preds);
    EXPECT_EQ(part.overall.count("novel"), 0u);
    EXPECT_EQ(part.overall.at("known").f1, full.overall.at("known").f1);
    EXPECT_EQ(part.overall.at("known").precision_at_1, full.overall.at("known").precision_at_1);
}

TEST(Pipeline, SaveModelsIsDeterministic) {
    TempDir dir("det");
    const auto ds = generate_synthetic(tiny_data(), dir / "data");
    PseudoLabelOptions pl;
    pl.thresholds = {0.05, -15.0};
    const auto labels = compute_pseudo_labels(ds.manifest, pl).labels;
    auto opt = tiny_train(VocabMode::SharedPerTransition);
    opt.train.workers = 2;
    save_models(dir / "a", train_models(ds.manifest, labels, opt));
    opt.train.workers = 1;
    save_models(dir / "b", train_models(ds.manifest, labels, opt));
    for (const auto& f : {"vocab.json", "train_log.csv", "model_slicing.oscm", "model_peeling.oscm"})
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}
