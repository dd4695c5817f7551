// Python module `oscloc`: label rules, decoders, metrics, file formats and
// the file-based pipeline stages. Label sequences cross the boundary as
// strings of B/I/T/E/A codes.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "osc/pipeline.hpp"
#include "osc/synthetic.hpp"

namespace py = pybind11;
using namespace osc;

namespace {

py::object parse_json(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

py::dict video_result_dict(const VideoResult& r) {
    py::dict d;
    d["present"] = r.present;
    d["precision"] = r.precision;
    d["recall"] = r.recall;
    d["f1"] = r.f1;
    d["mean_f1"] = r.mean_f1();
    d["evaluable"] = r.evaluable();
    return d;
}

py::dict grid_result_dict(const GridSearchResult& r) {
    py::dict d;
    d["tau"] = r.best.tau;
    d["delta"] = r.best.delta;
    d["f1"] = r.best_f1;
    py::list surface;
    for (const auto& p : r.surface) surface.append(py::make_tuple(p.tau, p.delta, p.f1));
    d["surface"] = surface;
    return d;
}

}  // namespace

PYBIND11_MODULE(oscloc, m) {
    m.doc() = "Open-world localization of object state changes";

    static py::exception<Error> base(m, "OscError", PyExc_RuntimeError);
    static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
    static py::exception<FormatError> format(m, "FormatError", base.ptr());
    static py::exception<TrainingError> training(m, "TrainingError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            py::set_error(validation, e.what());
        } catch (const FormatError& e) {
            py::object err = py::reinterpret_borrow<py::object>(format)(e.what());
            err.attr("kind") = e.kind();
            py::set_error(format, err);
        } catch (const TrainingError& e) {
            py::set_error(training, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    // --- labels and decoding

    m.def(
        "assign_frame_label",
        [](std::array<double, 3> row, double tau, double delta) {
            const Thresholds th{delta, tau};
            th.validate();
            return encode_labels({assign_frame_label(row, th)});
        },
        py::arg("scores"), py::arg("tau"), py::arg("delta"));

    m.def(
        "pseudo_label",
        [](const Matrix& scores, double tau, double delta, bool ordering) {
            return encode_labels(pseudo_label(ScoreMatrix(scores), Thresholds{delta, tau}, ordering));
        },
        py::arg("scores"), py::arg("tau"), py::arg("delta"), py::arg("ordering") = true,
        "T x 3 similarity scores to a label string");

    m.def(
        "enforce_causal_order",
        [](const std::string& labels) { return encode_labels(enforce_causal_order(decode_labels(labels))); },
        py::arg("labels"));

    m.def(
        "is_ordered", [](const std::string& labels) { return is_ordered(decode_labels(labels)); },
        py::arg("labels"));

    m.def(
        "argmax_decode", [](const Matrix& s) { return encode_labels(argmax_decode(FrameScores(s))); },
        py::arg("scores"));
    m.def(
        "ordered_decode", [](const Matrix& s) { return encode_labels(ordered_decode(FrameScores(s))); },
        py::arg("scores"), "Best ordered label string for T x 4 scores");
    m.def(
        "hierarchical_decode",
        [](const Matrix& s) {
            const auto r = hierarchical_decode(FrameScores(s));
            return py::make_tuple(r.transition_index, encode_labels(r.labels));
        },
        py::arg("scores"), "(transition index, labels) for T x (3N + 1) scores");
    m.def(
        "top1_frames", [](const Matrix& s) { return top1_frames(FrameScores(s)); }, py::arg("scores"));
    m.def(
        "sequence_score",
        [](const Matrix& s, const std::string& labels) { return sequence_score(FrameScores(s), decode_labels(labels)); },
        py::arg("scores"), py::arg("labels"));

    // --- metrics and threshold search

    m.def(
        "frame_metrics",
        [](const std::string& pred, const std::string& gt) {
            return video_result_dict(frame_metrics(decode_labels(pred), decode_labels(gt)));
        },
        py::arg("pred"), py::arg("gt"));

    m.def(
        "grid_search",
        [](const std::vector<Matrix>& scores, const std::vector<std::string>& ground_truth,
           const std::vector<double>& taus, const std::vector<double>& deltas, bool ordering) {
            if (scores.size() != ground_truth.size())
                throw ValidationError("scores and ground_truth differ in length");
            std::vector<ScoredVideo> videos;
            for (std::size_t i = 0; i < scores.size(); ++i)
                videos.push_back({ScoreMatrix(scores[i]), decode_labels(ground_truth[i])});
            return grid_result_dict(grid_search_thresholds(videos, taus, deltas, ordering));
        },
        py::arg("scores"), py::arg("ground_truth"), py::arg("taus"), py::arg("deltas"), py::arg("ordering") = true);

    // --- file formats

    m.def(
        "read_features", [](const fs::path& p) { return read_matrix_file(p, MatrixRole::Features); },
        py::arg("path"));
    m.def(
        "write_features", [](const fs::path& p, const Matrix& x) { write_matrix_file(p, x, MatrixRole::Features); },
        py::arg("path"), py::arg("matrix"));
    m.def(
        "read_scores", [](const fs::path& p) { return read_matrix_file(p, MatrixRole::Scores); }, py::arg("path"));
    m.def(
        "write_scores", [](const fs::path& p, const Matrix& x) { write_score_file(p, ScoreMatrix(x)); },
        py::arg("path"), py::arg("matrix"));
    m.def(
        "read_annotation", [](const fs::path& p) { return parse_json(annotation_to_json(read_annotation_file(p))); },
        py::arg("path"));
    m.def(
        "rasterize",
        [](const fs::path& annotation) {
            const auto a = read_annotation_file(annotation).annotation;
            return encode_labels(labels_from_ranges(a, frame_count_for(a.duration_s)));
        },
        py::arg("annotation"), "Per-second ground-truth labels of an annotation file");

    // --- pipeline stages (same artifacts as the command-line tool)

    m.def(
        "synth",
        [](const fs::path& out, std::uint64_t seed, std::size_t transitions, std::size_t known, std::size_t novel,
           std::size_t videos, std::size_t min_frames, std::size_t max_frames, std::size_t dim,
           std::size_t object_dim, double noise, double object_state, double confusion) {
            SyntheticConfig c;
            c.seed = seed;
            c.num_transitions = transitions;
            c.objects_known = known;
            c.objects_novel = novel;
            c.videos_per_osc = videos;
            c.min_frames = min_frames;
            c.max_frames = max_frames;
            c.feature_dim = dim;
            c.object_dim = object_dim;
            c.noise = noise;
            c.object_state = object_state;
            c.confusion = confusion;
            return generate_synthetic(c, out).manifest_path;
        },
        py::arg("out"), py::arg("seed") = 42, py::arg("transitions") = 2, py::arg("known") = 3,
        py::arg("novel") = 2, py::arg("videos") = 8, py::arg("min_frames") = 24, py::arg("max_frames") = 40,
        py::arg("dim") = 32, py::arg("object_dim") = 0, py::arg("noise") = 0.5, py::arg("object_state") = 0.0,
        py::arg("confusion") = 0.0, "Writes a synthetic corpus; returns the manifest path");

    m.def(
        "sweep",
        [](const fs::path& manifest, const std::vector<double>& taus, const std::vector<double>& deltas,
           bool ordering) { return grid_result_dict(sweep_thresholds(read_manifest(manifest), taus, deltas, ordering)); },
        py::arg("manifest"), py::arg("taus"), py::arg("deltas"), py::arg("ordering") = true);

    m.def(
        "label_dataset",
        [](const fs::path& manifest, const fs::path& out, double tau, double delta, bool ordering) {
            PseudoLabelOptions o;
            o.thresholds = {delta, tau};
            o.ordering = ordering;
            const auto run = compute_pseudo_labels(read_manifest(manifest), o);
            write_pseudo_labels(out, run);
            return run.labels.size();
        },
        py::arg("manifest"), py::arg("out"), py::arg("tau"), py::arg("delta"), py::arg("ordering") = true,
        "Pseudo-labels the train subset into `out`; returns the video count");

    m.def(
        "train",
        [](const fs::path& manifest_path, const fs::path& labels, const fs::path& out, const std::string& vocab,
           std::size_t epochs, double lr, double wd, std::size_t batch, std::size_t hidden, std::size_t layers,
           std::size_t heads, std::uint64_t seed, bool object_features, std::size_t workers) {
            const auto manifest = read_manifest(manifest_path);
            TrainOptions o;
            o.vocab = parse_vocab_mode(vocab);
            o.object_features = object_features;
            o.train.epochs = epochs;
            o.train.learning_rate = lr;
            o.train.weight_decay = wd;
            o.train.batch_size = batch;
            o.train.seed = seed;
            o.train.workers = workers;
            o.model.hidden_dim = hidden;
            o.model.num_layers = layers;
            o.model.num_heads = heads;
            const auto models = [&] {
                py::gil_scoped_release release;
                return train_models(manifest, read_pseudo_labels(labels, manifest), o);
            }();
            save_models(out, models);
            return models.epoch_loss;
        },
        py::arg("manifest"), py::arg("labels"), py::arg("out"), py::arg("vocab") = "shared", py::arg("epochs") = 50,
        py::arg("lr") = 1e-4, py::arg("wd") = 1e-4, py::arg("batch") = 64, py::arg("hidden") = 64,
        py::arg("layers") = 2, py::arg("heads") = 4, py::arg("seed") = 42, py::arg("object_features") = false,
        py::arg("workers") = 1, "Trains and saves models; returns per-model epoch losses");

    m.def(
        "infer",
        [](const fs::path& manifest, const fs::path& checkpoint, const fs::path& out, const std::string& decode,
           const std::string& subset) {
            InferOptions o;
            o.decode = parse_decode_mode(decode);
            o.subset = parse_subset(subset);
            const auto predictions = run_inference(read_manifest(manifest), load_models(checkpoint), o);
            write_predictions(out, predictions);
            return predictions.size();
        },
        py::arg("manifest"), py::arg("checkpoint"), py::arg("out"), py::arg("decode") = "ordered",
        py::arg("subset") = "test");

    m.def(
        "evaluate",
        [](const fs::path& manifest_path, const fs::path& predictions, const std::string& subset) {
            const auto manifest = read_manifest(manifest_path);
            const auto sub = parse_subset(subset);
            return parse_json(evaluate(manifest, read_predictions(predictions, manifest, sub), sub).to_json());
        },
        py::arg("manifest"), py::arg("predictions"), py::arg("subset") = "test", "Report as a dict");
}
