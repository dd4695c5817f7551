#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "osc/core.hpp"
#include "osc/metrics.hpp"

namespace osc {

namespace fs = std::filesystem;

/// Which container a matrix file holds. The layout is identical; only the
/// magic differs ("OSCF" features, "OSCS" scores).
enum class MatrixRole { Features, Scores };

/// Header: magic, u32 version (1), u32 rows, u32 cols; then rows x cols
/// row-major little-endian float32. Total size 16 + 4 * rows * cols bytes.
void write_matrix_file(const fs::path& path, const Matrix& matrix, MatrixRole role);
Matrix read_matrix_file(const fs::path& path, MatrixRole role);

ScoreMatrix read_score_file(const fs::path& path);
void write_score_file(const fs::path& path, const ScoreMatrix& scores);

struct AnnotationDocument {
    std::string video_id;
    OscCategory osc;
    AnnotationSet annotation;
};

/// JSON: {video_id, osc:{object, transition}, duration_s,
///        ranges:{initial:[[s,e],...], transitioning:[...], end:[...]}}
AnnotationDocument read_annotation_file(const fs::path& path);
void write_annotation_file(const fs::path& path, const AnnotationDocument& doc);
AnnotationDocument parse_annotation_json(const std::string& text);
std::string annotation_to_json(const AnnotationDocument& doc);

enum class Subset { Train, Val, Test };

std::string_view subset_name(Subset subset) noexcept;
Subset parse_subset(std::string_view name);

/// One manifest line. Paths are stored as written; `resolve` makes them
/// absolute against the manifest's directory.
struct ManifestRecord {
    std::string video_id;
    fs::path features;
    std::optional<fs::path> object_features;
    std::optional<fs::path> scores;
    std::optional<fs::path> annotation;
    OscCategory osc;
    Split split = Split::Known;
    Subset subset = Subset::Train;
    double duration_s = 0.0;

    std::size_t frames() const { return frame_count_for(duration_s); }
};

struct Manifest {
    fs::path base_dir;
    std::vector<ManifestRecord> records;

    fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }

    /// Unique ids; novel records never in the train subset.
    void validate() const;

    std::vector<const ManifestRecord*> select(std::optional<Subset> subset,
                                              std::optional<Split> split = std::nullopt) const;
};

/// JSON lines, one record per line:
/// {"video_id", "features", "object_features"?, "scores"?, "annotation"?,
///  "osc":{"object","transition"}, "split", "subset", "duration_s"}
Manifest read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const Manifest& manifest);

/// Label file: {"video_id": ..., "labels": "BIITTEA..."} (one letter per frame).
void write_label_file(const fs::path& path, const std::string& video_id, const LabelSequence& labels);
LabelSequence read_label_file(const fs::path& path);

}  // namespace osc
