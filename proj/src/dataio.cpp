#include "osc/dataio.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"

namespace osc {

using nlohmann::json;

namespace {

constexpr std::uint32_t kMatrixVersion = 1;

const char (&magic_for(MatrixRole role))[5] {
    static const char features[5] = "OSCF";
    static const char scores[5] = "OSCS";
    return role == MatrixRole::Features ? features : scores;
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
    if (!out) throw FormatError(FormatError::Code::Io, "failed writing " + path.string());
}

// Field access that reports missing or mistyped keys as parse errors.
template <typename T>
T field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw FormatError(FormatError::Code::Parse, std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw FormatError(FormatError::Code::Parse, std::string("field '") + key + "' has the wrong type");
    }
}

json parse_json(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(FormatError::Code::Parse, where + ": " + e.what());
    }
}

}  // namespace

void write_matrix_file(const fs::path& path, const Matrix& matrix, MatrixRole role) {
    if (!matrix.allFinite()) throw ValidationError("cannot write a matrix with non-finite entries");
    if (matrix.rows() > std::numeric_limits<std::uint32_t>::max() ||
        matrix.cols() > std::numeric_limits<std::uint32_t>::max())
        throw ValidationError("matrix too large for the file format");
    detail::ByteWriter w;
    w.magic(magic_for(role));
    w.u32(kMatrixVersion);
    w.u32(static_cast<std::uint32_t>(matrix.rows()));
    w.u32(static_cast<std::uint32_t>(matrix.cols()));
    for (Eigen::Index i = 0; i < matrix.rows(); ++i)
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) w.f32(static_cast<float>(matrix(i, j)));
    w.write_to(path);
}

Matrix read_matrix_file(const fs::path& path, MatrixRole role) {
    detail::ByteReader r(path);
    r.expect_magic(magic_for(role));
    const auto version = r.u32();
    if (version != kMatrixVersion)
        throw FormatError(FormatError::Code::BadVersion,
                          r.path() + ": unsupported version " + std::to_string(version));
    const std::uint64_t rows = r.u32();
    const std::uint64_t cols = r.u32();
    const std::uint64_t payload = rows * cols * sizeof(float);
    if (r.remaining() < payload)
        throw FormatError(FormatError::Code::Truncated,
                          r.path() + ": payload shorter than " + std::to_string(rows) + " x " +
                              std::to_string(cols));
    if (r.remaining() > payload)
        throw FormatError(FormatError::Code::SizeMismatch, r.path() + ": trailing bytes after payload");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.f32();
    return m;
}

ScoreMatrix read_score_file(const fs::path& path) {
    return ScoreMatrix(read_matrix_file(path, MatrixRole::Scores));
}

void write_score_file(const fs::path& path, const ScoreMatrix& scores) {
    write_matrix_file(path, scores.values(), MatrixRole::Scores);
}

// ---------------------------------------------------------------------------
// Annotations

AnnotationDocument parse_annotation_json(const std::string& text) {
    const json j = parse_json(text, "annotation");
    AnnotationDocument doc;
    doc.video_id = field<std::string>(j, "video_id");
    const json osc = field<json>(j, "osc");
    doc.osc = OscCategory::make(field<std::string>(osc, "object"), field<std::string>(osc, "transition"));
    doc.annotation.duration_s = field<double>(j, "duration_s");
    const json ranges = field<json>(j, "ranges");
    if (!ranges.is_object()) throw FormatError(FormatError::Code::Parse, "'ranges' must be an object");
    for (auto s : kStates) {
        const std::string key(label_name(s));
        if (!ranges.contains(key)) continue;
        const auto pairs = field<std::vector<std::vector<double>>>(ranges, key.c_str());
        for (const auto& p : pairs) {
            if (p.size() != 2)
                throw FormatError(FormatError::Code::Parse, "range in '" + key + "' is not a [start, end] pair");
            doc.annotation.of(s).push_back({p[0], p[1]});
        }
    }
    doc.annotation.validate();
    return doc;
}

std::string annotation_to_json(const AnnotationDocument& doc) {
    doc.annotation.validate();
    json j;
    j["video_id"] = doc.video_id;
    j["osc"] = {{"object", doc.osc.object}, {"transition", doc.osc.transition}};
    j["duration_s"] = doc.annotation.duration_s;
    json ranges = json::object();
    for (auto s : kStates) {
        json list = json::array();
        for (const auto& r : doc.annotation.of(s)) list.push_back({r.start, r.end});
        ranges[std::string(label_name(s))] = list;
    }
    j["ranges"] = ranges;
    return j.dump(2) + "\n";
}

AnnotationDocument read_annotation_file(const fs::path& path) {
    try {
        return parse_annotation_json(read_text(path));
    } catch (const FormatError& e) {
        throw FormatError(e.code(), path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_annotation_file(const fs::path& path, const AnnotationDocument& doc) {
    write_text(path, annotation_to_json(doc));
}

// ---------------------------------------------------------------------------
// Manifest

std::string_view subset_name(Subset subset) noexcept {
    switch (subset) {
    case Subset::Train: return "train";
    case Subset::Val: return "val";
    case Subset::Test: return "test";
    }
    return "?";
}

Subset parse_subset(std::string_view name) {
    if (name == "train") return Subset::Train;
    if (name == "val") return Subset::Val;
    if (name == "test") return Subset::Test;
    throw ValidationError("unknown subset '" + std::string(name) + "'");
}

void Manifest::validate() const {
    std::set<std::string> ids;
    for (const auto& r : records) {
        if (r.video_id.empty()) throw ValidationError("manifest record without video_id");
        if (!ids.insert(r.video_id).second)
            throw ValidationError("duplicate video_id '" + r.video_id + "' in manifest");
        if (r.split == Split::Novel && r.subset == Subset::Train)
            throw ValidationError("novel video '" + r.video_id + "' is in the train subset");
        if (!std::isfinite(r.duration_s) || r.duration_s <= 0.0)
            throw ValidationError("video '" + r.video_id + "' has a non-positive duration");
    }
}

std::vector<const ManifestRecord*> Manifest::select(std::optional<Subset> subset,
                                                    std::optional<Split> split) const {
    std::vector<const ManifestRecord*> out;
    for (const auto& r : records)
        if ((!subset || r.subset == *subset) && (!split || r.split == *split)) out.push_back(&r);
    return out;
}

Manifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(FormatError::Code::Io, "cannot open " + path.string());
    Manifest manifest;
    manifest.base_dir = fs::absolute(path).parent_path();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        try {
            const json j = parse_json(line, where);
            ManifestRecord r;
            r.video_id = field<std::string>(j, "video_id");
            r.features = field<std::string>(j, "features");
            if (j.contains("object_features")) r.object_features = field<std::string>(j, "object_features");
            if (j.contains("scores")) r.scores = field<std::string>(j, "scores");
            if (j.contains("annotation")) r.annotation = field<std::string>(j, "annotation");
            const json osc = field<json>(j, "osc");
            r.osc = OscCategory::make(field<std::string>(osc, "object"), field<std::string>(osc, "transition"));
            r.split = parse_split(field<std::string>(j, "split"));
            r.subset = parse_subset(field<std::string>(j, "subset"));
            r.duration_s = field<double>(j, "duration_s");
            manifest.records.push_back(std::move(r));
        } catch (const FormatError& e) {
            throw FormatError(e.code(), where + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    manifest.validate();
    return manifest;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
    manifest.validate();
    std::ostringstream os;
    for (const auto& r : manifest.records) {
        json j;
        j["video_id"] = r.video_id;
        j["features"] = r.features.generic_string();
        if (r.object_features) j["object_features"] = r.object_features->generic_string();
        if (r.scores) j["scores"] = r.scores->generic_string();
        if (r.annotation) j["annotation"] = r.annotation->generic_string();
        j["osc"] = {{"object", r.osc.object}, {"transition", r.osc.transition}};
        j["split"] = std::string(split_name(r.split));
        j["subset"] = std::string(subset_name(r.subset));
        j["duration_s"] = r.duration_s;
        os << j.dump() << "\n";
    }
    write_text(path, os.str());
}

void write_label_file(const fs::path& path, const std::string& video_id, const LabelSequence& labels) {
    json j;
    j["video_id"] = video_id;
    j["labels"] = encode_labels(labels);
    write_text(path, j.dump() + "\n");
}

LabelSequence read_label_file(const fs::path& path) {
    const json j = parse_json(read_text(path), path.string());
    return decode_labels(field<std::string>(j, "labels"));
}

}  // namespace osc
