#include "osc/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "osc/parallel.hpp"

namespace osc {

using nlohmann::json;

namespace {

const char* const kAllModels = "all";

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(FormatError::Code::Io, "cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError(FormatError::Code::Io, "cannot open " + path.string() + " for writing");
    out << text;
}

json parse_json_file(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw FormatError(FormatError::Code::Parse, path.string() + ": " + e.what());
    }
}

ScoreMatrix scores_for(const Manifest& manifest, const ManifestRecord& r) {
    if (!r.scores) throw ValidationError("video '" + r.video_id + "' has no score file");
    auto scores = read_score_file(manifest.resolve(*r.scores));
    if (scores.frames() != r.frames())
        throw ValidationError("score file of '" + r.video_id + "' has " + std::to_string(scores.frames()) +
                              " frames, duration implies " + std::to_string(r.frames()));
    return scores;
}

LabelSequence ground_truth_for(const Manifest& manifest, const ManifestRecord& r,
                               AnnotationDocument* doc_out = nullptr) {
    if (!r.annotation) throw ValidationError("video '" + r.video_id + "' has no annotation");
    auto doc = read_annotation_file(manifest.resolve(*r.annotation));
    auto labels = labels_from_ranges(doc.annotation, r.frames());
    if (doc_out) *doc_out = std::move(doc);
    return labels;
}

}  // namespace

// ---------------------------------------------------------------------------

PseudoLabelRun compute_pseudo_labels(const Manifest& manifest, const PseudoLabelOptions& options) {
    options.thresholds.validate();
    const auto records = manifest.select(options.subset);
    std::vector<LabelSequence> labels(records.size());
    parallel_for(records.size(), options.workers, [&](std::size_t i) {
        labels[i] = pseudo_label(scores_for(manifest, *records[i]), options.thresholds, options.ordering);
    });
    PseudoLabelRun run;
    for (std::size_t i = 0; i < records.size(); ++i) {
        run.stats += label_stats(labels[i]);
        run.labels.emplace(records[i]->video_id, std::move(labels[i]));
    }
    return run;
}

void write_pseudo_labels(const fs::path& dir, const PseudoLabelRun& run) {
    fs::create_directories(dir);
    for (const auto& [id, labels] : run.labels) write_label_file(dir / (id + ".json"), id, labels);
}

std::map<std::string, LabelSequence> read_pseudo_labels(const fs::path& dir, const Manifest& manifest,
                                                        std::optional<Subset> subset) {
    std::map<std::string, LabelSequence> out;
    for (const auto* r : manifest.select(subset)) {
        const auto path = dir / (r->video_id + ".json");
        if (!fs::exists(path)) throw ValidationError("missing pseudo-label file " + path.string());
        auto labels = read_label_file(path);
        if (labels.size() != r->frames())
            throw ValidationError("pseudo labels of '" + r->video_id + "' have the wrong length");
        out.emplace(r->video_id, std::move(labels));
    }
    return out;
}

// ---------------------------------------------------------------------------

GridSearchResult sweep_thresholds(const Manifest& manifest, const std::vector<double>& tau_grid,
                                  const std::vector<double>& delta_grid, bool ordering, Subset subset) {
    std::vector<ScoredVideo> videos;
    for (const auto* r : manifest.select(subset)) {
        if (!r->scores || !r->annotation) continue;
        videos.push_back({scores_for(manifest, *r), ground_truth_for(manifest, *r)});
    }
    return grid_search_thresholds(videos, tau_grid, delta_grid, ordering);
}

std::string surface_csv(const GridSearchResult& result) {
    std::ostringstream os;
    os << "tau,delta,f1\n";
    for (const auto& p : result.surface)
        os << format_double(p.tau) << "," << format_double(p.delta) << "," << format_double(p.f1) << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------

const Checkpoint& TrainedModels::model_for(const std::string& transition) const {
    auto it = models.find(vocab.mode() == VocabMode::SharedPerTransition ? transition : kAllModels);
    if (it == models.end()) throw ValidationError("no trained model for transition '" + transition + "'");
    return it->second;
}

std::vector<VocabEntry> vocabulary_table(const Manifest& manifest) {
    std::set<OscCategory> known, novel;
    for (const auto& r : manifest.records) {
        if (r.split == Split::Novel) novel.insert(r.osc);
        else if (r.subset == Subset::Train) known.insert(r.osc);
    }
    std::vector<VocabEntry> table;
    for (const auto& osc : known) table.push_back({osc, false});
    for (const auto& osc : novel) table.push_back({osc, true});
    return table;
}

Matrix load_model_inputs(const Manifest& manifest, const ManifestRecord& record, bool object_features) {
    FeatureSequence fseq;
    fseq.global = read_matrix_file(manifest.resolve(record.features), MatrixRole::Features);
    if (fseq.frames() != record.frames())
        throw ValidationError("features of '" + record.video_id + "' have " + std::to_string(fseq.frames()) +
                              " frames, duration implies " + std::to_string(record.frames()));
    if (!object_features) {
        fseq.validate();
        return fseq.global;
    }
    if (!record.object_features)
        throw ValidationError("video '" + record.video_id + "' has no object features");
    fseq.object = read_matrix_file(manifest.resolve(*record.object_features), MatrixRole::Features);
    return concat_object_features(fseq);
}

TrainedModels train_models(const Manifest& manifest, const std::map<std::string, LabelSequence>& pseudo_labels,
                           const TrainOptions& options) {
    TrainedModels out;
    out.table = vocabulary_table(manifest);
    out.vocab = build_vocabulary(options.vocab, out.table);
    out.object_features = options.object_features;

    // Group train videos by the model that will learn from them.
    std::map<std::string, std::vector<const ManifestRecord*>> groups;
    for (const auto* r : manifest.select(Subset::Train, Split::Known)) {
        const std::string key = options.vocab == VocabMode::SharedPerTransition ? r->osc.transition : kAllModels;
        groups[key].push_back(r);
    }
    if (groups.empty()) throw ValidationError("manifest has no known training videos");

    for (const auto& [key, records] : groups) {
        std::vector<TrainingExample> data;
        std::size_t longest = 0;
        for (const auto* r : records) {
            auto it = pseudo_labels.find(r->video_id);
            if (it == pseudo_labels.end())
                throw ValidationError("no pseudo labels for training video '" + r->video_id + "'");
            TrainingExample ex;
            ex.inputs = load_model_inputs(manifest, *r, options.object_features);
            if (it->second.size() != static_cast<std::size_t>(ex.inputs.rows()))
                throw ValidationError("pseudo labels of '" + r->video_id + "' have the wrong length");
            for (auto l : it->second)
                ex.targets.push_back(l == StateLabel::Ambiguous ? kIgnoreClass : out.vocab.class_index(r->osc, l));
            longest = std::max(longest, it->second.size());
            data.push_back(std::move(ex));
        }

        ModelConfig cfg = options.model;
        cfg.input_dim = static_cast<std::size_t>(data.front().inputs.cols());
        cfg.num_classes = out.vocab.num_classes();
        cfg.max_frames = std::max(cfg.max_frames, longest);
        auto result = train(data, cfg, options.train);
        out.models.emplace(key, Checkpoint{cfg, std::move(result.params)});
        out.epoch_loss.emplace(key, std::move(result.epoch_loss));
    }
    return out;
}

namespace {

std::string model_file(const std::string& key) { return "model_" + key + ".oscm"; }

}  // namespace

void save_models(const fs::path& dir, const TrainedModels& models) {
    fs::create_directories(dir);
    json j;
    j["mode"] = std::string(vocab_mode_name(models.vocab.mode()));
    j["object_features"] = models.object_features;
    json table = json::array();
    for (const auto& e : models.table)
        table.push_back({{"object", e.osc.object}, {"transition", e.osc.transition}, {"novel", e.novel}});
    j["table"] = table;
    json files = json::object();
    for (const auto& [key, ck] : models.models) {
        save_checkpoint(dir / model_file(key), ck.config, ck.params);
        files[key] = model_file(key);
    }
    j["models"] = files;
    write_text(dir / "vocab.json", j.dump(2) + "\n");

    std::ostringstream log;
    log << "model,epoch,loss\n";
    for (const auto& [key, losses] : models.epoch_loss)
        for (std::size_t e = 0; e < losses.size(); ++e)
            log << key << "," << e + 1 << "," << format_double(losses[e]) << "\n";
    write_text(dir / "train_log.csv", log.str());
}

TrainedModels load_models(const fs::path& dir) {
    const json j = parse_json_file(dir / "vocab.json");
    TrainedModels out;
    try {
        for (const auto& e : j.at("table"))
            out.table.push_back({OscCategory::make(e.at("object").get<std::string>(),
                                                   e.at("transition").get<std::string>()),
                                 e.at("novel").get<bool>()});
        out.vocab = build_vocabulary(parse_vocab_mode(j.at("mode").get<std::string>()), out.table);
        out.object_features = j.at("object_features").get<bool>();
        for (const auto& [key, file] : j.at("models").items())
            out.models.emplace(key, load_checkpoint(dir / file.get<std::string>()));
    } catch (const json::exception& e) {
        throw FormatError(FormatError::Code::Parse, (dir / "vocab.json").string() + ": " + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view decode_mode_name(DecodeMode mode) noexcept {
    switch (mode) {
    case DecodeMode::Argmax: return "argmax";
    case DecodeMode::Ordered: return "ordered";
    case DecodeMode::Hierarchical: return "hierarchical";
    }
    return "?";
}

DecodeMode parse_decode_mode(std::string_view name) {
    if (name == "argmax") return DecodeMode::Argmax;
    if (name == "ordered") return DecodeMode::Ordered;
    if (name == "hierarchical") return DecodeMode::Hierarchical;
    throw ValidationError("unknown decode mode '" + std::string(name) + "'");
}

std::vector<Prediction> run_inference(const Manifest& manifest, const TrainedModels& models,
                                      const InferOptions& options) {
    if (options.decode == DecodeMode::Hierarchical && models.vocab.mode() != VocabMode::MultiTask)
        throw ValidationError("hierarchical decoding needs a multitask model");
    const auto records = manifest.select(options.subset);
    std::vector<Prediction> out(records.size());
    parallel_for(records.size(), options.workers, [&](std::size_t i) {
        const auto& r = *records[i];
        const auto& ck = models.model_for(r.osc.transition);
        const FrameScores full = infer(ck.params, ck.config, load_model_inputs(manifest, r, models.object_features));

        Prediction& p = out[i];
        p.video_id = r.video_id;
        p.transition = r.osc.transition;
        if (options.decode == DecodeMode::Hierarchical) {
            auto h = hierarchical_decode(full, models.vocab);
            p.transition = h.transition;
            p.labels = std::move(h.labels);
            p.scores = restrict_to_transition(full, models.vocab, p.transition);
        } else {
            p.scores = restrict_to_transition(full, models.vocab, r.osc.transition);
            p.labels = options.decode == DecodeMode::Ordered ? ordered_decode(p.scores) : argmax_decode(p.scores);
        }
        p.top1 = top1_frames(p.scores);
    });
    return out;
}

void write_predictions(const fs::path& dir, const std::vector<Prediction>& predictions) {
    fs::create_directories(dir);
    for (const auto& p : predictions) {
        json j;
        j["video_id"] = p.video_id;
        j["transition"] = p.transition;
        j["labels"] = encode_labels(p.labels);
        j["top1"] = {{"initial", p.top1[0]}, {"transitioning", p.top1[1]}, {"end", p.top1[2]}};
        write_text(dir / (p.video_id + ".json"), j.dump() + "\n");
        write_matrix_file(dir / (p.video_id + ".scores.oscs"), p.scores.values(), MatrixRole::Scores);
    }
}

std::map<std::string, Prediction> read_predictions(const fs::path& dir, const Manifest& manifest,
                                                   std::optional<Subset> subset) {
    std::map<std::string, Prediction> out;
    for (const auto* r : manifest.select(subset)) {
        const auto path = dir / (r->video_id + ".json");
        if (!fs::exists(path)) continue;
        const json j = parse_json_file(path);
        Prediction p;
        try {
            p.video_id = j.at("video_id").get<std::string>();
            p.transition = j.at("transition").get<std::string>();
            p.labels = decode_labels(j.at("labels").get<std::string>());
            const auto& top1 = j.at("top1");
            p.top1 = {top1.at("initial").get<std::size_t>(), top1.at("transitioning").get<std::size_t>(),
                      top1.at("end").get<std::size_t>()};
        } catch (const json::exception& e) {
            throw FormatError(FormatError::Code::Parse, path.string() + ": " + e.what());
        }
        const auto scores_path = dir / (r->video_id + ".scores.oscs");
        if (fs::exists(scores_path)) p.scores = FrameScores(read_matrix_file(scores_path, MatrixRole::Scores));
        out.emplace(r->video_id, std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------

Report evaluate(const Manifest& manifest, const std::map<std::string, Prediction>& predictions,
                std::optional<Subset> subset) {
    std::vector<ScoredResult> results;
    for (const auto* r : manifest.select(subset)) {
        auto it = predictions.find(r->video_id);
        if (it == predictions.end() || !r->annotation) continue;
        AnnotationDocument doc;
        const auto gt = ground_truth_for(manifest, *r, &doc);
        const Prediction& p = it->second;
        // States decoded for the wrong transition count as misses.
        const bool wrong_transition = !p.transition.empty() && p.transition != r->osc.transition;
        VideoResult v = frame_metrics(wrong_transition ? LabelSequence(gt.size(), StateLabel::Background) : p.labels, gt);
        auto p1 = state_precision_at_1(p.top1, doc.annotation);
        if (wrong_transition) p1.hit = {};
        attach_precision_at_1(v, p1);
        results.push_back({v, r->osc, r->split});
    }
    if (results.empty()) throw ValidationError("no predictions matched annotated manifest records");
    return aggregate(results);
}

Report evaluate(const Manifest& manifest, const std::vector<Prediction>& predictions,
                std::optional<Subset> subset) {
    std::map<std::string, Prediction> by_id;
    for (const auto& p : predictions) by_id.emplace(p.video_id, p);
    return evaluate(manifest, by_id, subset);
}

}  // namespace osc
