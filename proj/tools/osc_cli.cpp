// osc: command-line driver for the pseudo-label -> train -> infer -> eval pipeline.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "osc/pipeline.hpp"
#include "osc/synthetic.hpp"

namespace {

using namespace osc;

// "a,b,c" or "start:stop:step" (inclusive of stop within 1e-9).
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double start = 0, stop = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream is(text);
        if (!(is >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0)
            throw ValidationError("grid '" + text + "' is not start:stop:step");
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < n; ++i) out.push_back(start + static_cast<double>(i) * step);
        return out;
    }
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw ValidationError("grid value '" + item + "' is not a number");
        }
    }
    if (out.empty()) throw ValidationError("grid '" + text + "' is empty");
    return out;
}

bool parse_switch(const std::string& v) {
    if (v == "on") return true;
    if (v == "off") return false;
    throw ValidationError("expected on|off, got '" + v + "'");
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError(FormatError::Code::Io, "cannot open " + path.string() + " for writing");
    out << text;
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-world temporal localization of object state changes"};
    app.require_subcommand(1);

    std::string manifest_path, out_dir;
    std::size_t workers = 1;
    std::uint64_t seed = 42;

    // synth
    SyntheticConfig synth;
    auto* cmd_synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
    cmd_synth->add_option("--out", out_dir, "Output directory")->required();
    cmd_synth->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    cmd_synth->add_option("--transitions", synth.num_transitions)->capture_default_str();
    cmd_synth->add_option("--known", synth.objects_known, "Known objects per transition")->capture_default_str();
    cmd_synth->add_option("--novel", synth.objects_novel, "Novel objects per transition")->capture_default_str();
    cmd_synth->add_option("--videos", synth.videos_per_osc, "Videos per OSC")->capture_default_str();
    cmd_synth->add_option("--min-frames", synth.min_frames)->capture_default_str();
    cmd_synth->add_option("--max-frames", synth.max_frames)->capture_default_str();
    cmd_synth->add_option("--dim", synth.feature_dim, "Global feature width")->capture_default_str();
    cmd_synth->add_option("--object-dim", synth.object_dim, "Object feature width (0: none)")->capture_default_str();
    cmd_synth->add_option("--separation", synth.separation)->capture_default_str();
    cmd_synth->add_option("--noise", synth.noise)->capture_default_str();
    cmd_synth->add_option("--object-offset", synth.object_offset)->capture_default_str();
    cmd_synth->add_option("--object-state", synth.object_state)->capture_default_str();
    cmd_synth->add_option("--background", synth.background_fraction)->capture_default_str();
    cmd_synth->add_option("--score-noise", synth.score_noise)->capture_default_str();
    cmd_synth->add_option("--confusion", synth.confusion)->capture_default_str();

    // pseudo-label
    double tau = 0.0, delta = 0.0;
    std::string ordering = "on";
    auto* cmd_pl = app.add_subcommand("pseudo-label", "Threshold score files into pseudo labels");
    cmd_pl->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
    cmd_pl->add_option("--out", out_dir, "Label directory")->required();
    cmd_pl->add_option("--tau", tau, "Background cutoff on the row sum")->required();
    cmd_pl->add_option("--delta", delta, "State margin")->required();
    cmd_pl->add_option("--ordering", ordering, "on|off")->capture_default_str();
    cmd_pl->add_option("--workers", workers)->capture_default_str();

    // sweep
    std::string tau_grid, delta_grid;
    auto* cmd_sweep = app.add_subcommand("sweep", "Grid-search pseudo-label thresholds on val videos");
    cmd_sweep->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
    cmd_sweep->add_option("--out", out_dir, "Directory for surface.csv / best.json")->required();
    cmd_sweep->add_option("--tau-grid", tau_grid, "a,b,c or start:stop:step")->required();
    cmd_sweep->add_option("--delta-grid", delta_grid, "a,b,c or start:stop:step")->required();
    cmd_sweep->add_option("--ordering", ordering, "on|off")->capture_default_str();

    // train
    std::string labels_dir, vocab = "shared";
    TrainOptions topt;
    bool object_features = false;
    auto* cmd_train = app.add_subcommand("train", "Train frame classifiers on pseudo labels");
    cmd_train->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
    cmd_train->add_option("--labels", labels_dir, "Pseudo-label directory")->required()->check(CLI::ExistingDirectory);
    cmd_train->add_option("--out", out_dir, "Checkpoint directory")->required();
    cmd_train->add_option("--vocab", vocab, "shared|per-osc|multitask")->capture_default_str();
    cmd_train->add_option("--epochs", topt.train.epochs)->capture_default_str();
    cmd_train->add_option("--lr", topt.train.learning_rate)->capture_default_str();
    cmd_train->add_option("--wd", topt.train.weight_decay)->capture_default_str();
    cmd_train->add_option("--batch", topt.train.batch_size)->capture_default_str();
    cmd_train->add_option("--hidden", topt.model.hidden_dim)->capture_default_str();
    cmd_train->add_option("--layers", topt.model.num_layers)->capture_default_str();
    cmd_train->add_option("--heads", topt.model.num_heads)->capture_default_str();
    cmd_train->add_option("--seed", seed)->capture_default_str();
    cmd_train->add_flag("--object-features", object_features, "Concatenate object-centric features");
    cmd_train->add_option("--workers", workers)->capture_default_str();

    // infer
    std::string checkpoint_dir, decode = "ordered", subset = "test";
    auto* cmd_infer = app.add_subcommand("infer", "Score and decode videos with trained models");
    cmd_infer->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
    cmd_infer->add_option("--checkpoint", checkpoint_dir, "Directory written by train")
        ->required()->check(CLI::ExistingDirectory);
    cmd_infer->add_option("--out", out_dir, "Prediction directory")->required();
    cmd_infer->add_option("--decode", decode, "argmax|ordered|hierarchical")->capture_default_str();
    cmd_infer->add_option("--subset", subset, "train|val|test")->capture_default_str();
    cmd_infer->add_option("--workers", workers)->capture_default_str();

    // eval
    std::string predictions_dir, report_path;
    auto* cmd_eval = app.add_subcommand("eval", "Evaluate predictions against annotations");
    cmd_eval->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
    cmd_eval->add_option("--predictions", predictions_dir)->required()->check(CLI::ExistingDirectory);
    cmd_eval->add_option("--out", report_path, "Report JSON path");
    cmd_eval->add_option("--subset", subset, "train|val|test")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_synth) {
            const auto ds = generate_synthetic(synth, out_dir);
            std::cout << "wrote " << ds.manifest.records.size() << " videos to " << ds.manifest_path.string()
                      << "\n";
        } else if (*cmd_pl) {
            const auto manifest = read_manifest(manifest_path);
            PseudoLabelOptions opt;
            opt.thresholds = {delta, tau};
            opt.ordering = parse_switch(ordering);
            opt.workers = workers;
            const auto run = compute_pseudo_labels(manifest, opt);
            write_pseudo_labels(out_dir, run);
            std::printf("videos %zu frames %zu\n", run.labels.size(), run.stats.total());
            for (auto l : {StateLabel::Background, StateLabel::Initial, StateLabel::Transitioning,
                           StateLabel::End, StateLabel::Ambiguous})
                std::printf("%-14s %8zu  %.4f\n", std::string(label_name(l)).c_str(), run.stats.count(l),
                            run.stats.fraction(l));
        } else if (*cmd_sweep) {
            const auto manifest = read_manifest(manifest_path);
            const auto result =
                sweep_thresholds(manifest, parse_grid(tau_grid), parse_grid(delta_grid), parse_switch(ordering));
            fs::create_directories(out_dir);
            write_file(fs::path(out_dir) / "surface.csv", surface_csv(result));
            nlohmann::json best{{"tau", result.best.tau}, {"delta", result.best.delta}, {"f1", result.best_f1}};
            write_file(fs::path(out_dir) / "best.json", best.dump(2) + "\n");
            std::printf("best tau %.17g delta %.17g f1 %.6f\n", result.best.tau, result.best.delta, result.best_f1);
        } else if (*cmd_train) {
            const auto manifest = read_manifest(manifest_path);
            topt.vocab = parse_vocab_mode(vocab);
            topt.object_features = object_features;
            topt.train.seed = seed;
            topt.train.workers = workers;
            const auto labels = read_pseudo_labels(labels_dir, manifest);
            const auto models = train_models(manifest, labels, topt);
            save_models(out_dir, models);
            for (const auto& [key, losses] : models.epoch_loss)
                std::printf("model %s: %zu epochs, final loss %.6f\n", key.c_str(), losses.size(), losses.back());
        } else if (*cmd_infer) {
            const auto manifest = read_manifest(manifest_path);
            const auto models = load_models(checkpoint_dir);
            InferOptions opt;
            opt.decode = parse_decode_mode(decode);
            opt.subset = parse_subset(subset);
            opt.workers = workers;
            const auto predictions = run_inference(manifest, models, opt);
            write_predictions(out_dir, predictions);
            std::printf("wrote %zu predictions to %s\n", predictions.size(), out_dir.c_str());
        } else if (*cmd_eval) {
            const auto manifest = read_manifest(manifest_path);
            const auto sub = parse_subset(subset);
            const auto report = evaluate(manifest, read_predictions(predictions_dir, manifest, sub), sub);
            if (!report_path.empty()) write_file(report_path, report.to_json());
            std::cout << report.to_json() << report.to_table();
        }
    } catch (const osc::Error& e) {
        std::cerr << "error: " << e.kind() << ": " << one_line(e.what()) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << one_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
