#include <cstring>
#include <fstream>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "osc/dataio.hpp"
#include "test_support.hpp"

using namespace osc;
using osc::testing::random_matrix;
using osc::testing::TempDir;

namespace {

std::vector<char> bytes_of(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<char>& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::trunc);
    out << s;
}

FormatError::Code code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const FormatError& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected a FormatError";
    return FormatError::Code::Io;
}

// float32-representable values so the round trip is exact.
Matrix float_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    Matrix m = random_matrix(r, c, rng);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(m.data()[i]);
    return m;
}

AnnotationDocument sample_doc() {
    AnnotationDocument d;
    d.video_id = "v1";
    d.osc = OscCategory::make("apple", "slicing");
    d.annotation.duration_s = 12.5;
    d.annotation.of(StateLabel::Initial) = {{0.25, 3.0}};
    d.annotation.of(StateLabel::Transitioning) = {{3.0, 7.1}};
    d.annotation.of(StateLabel::End) = {{7.1, 9.0}, {10.0, 12.5}};
    return d;
}

}  // namespace

TEST(MatrixFile, RoundTripAndSize) {
    TempDir dir("mat");
    std::mt19937_64 rng(1);
    const Matrix m = float_matrix(2, 3, rng);
    write_matrix_file(dir / "a.oscf", m, MatrixRole::Features);
    EXPECT_EQ(fs::file_size(dir / "a.oscf"), 16u + 4u * 2u * 3u);
    EXPECT_EQ(read_matrix_file(dir / "a.oscf", MatrixRole::Features), m);

    const auto b = bytes_of(dir / "a.oscf");
    EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "OSCF");
    std::uint32_t version = 0, rows = 0, cols = 0;
    std::memcpy(&version, b.data() + 4, 4);
    std::memcpy(&rows, b.data() + 8, 4);
    std::memcpy(&cols, b.data() + 12, 4);
    EXPECT_EQ(version, 1u);
    EXPECT_EQ(rows, 2u);
    EXPECT_EQ(cols, 3u);
    float first = 0;
    std::memcpy(&first, b.data() + 16, 4);
    EXPECT_EQ(first, static_cast<float>(m(0, 0)));
    float second = 0;
    std::memcpy(&second, b.data() + 20, 4);
    EXPECT_EQ(second, static_cast<float>(m(0, 1)));  // row-major

    write_matrix_file(dir / "b.oscf", read_matrix_file(dir / "a.oscf", MatrixRole::Features),
                      MatrixRole::Features);
    EXPECT_EQ(bytes_of(dir / "b.oscf"), b);
}

TEST(MatrixFile, ScoreRole) {
    TempDir dir("scores");
    std::mt19937_64 rng(2);
    const ScoreMatrix s(float_matrix(5, 3, rng));
    write_score_file(dir / "s.oscs", s);
    EXPECT_EQ(read_score_file(dir / "s.oscs").values(), s.values());
    EXPECT_EQ(code_of([&] { read_matrix_file(dir / "s.oscs", MatrixRole::Features); }),
              FormatError::Code::BadMagic);
    write_matrix_file(dir / "wide.oscs", float_matrix(2, 4, rng), MatrixRole::Scores);
    EXPECT_THROW(read_score_file(dir / "wide.oscs"), ValidationError);
}

TEST(MatrixFile, CorruptionGivesTypedErrors) {
    TempDir dir("mat_bad");
    std::mt19937_64 rng(3);
    write_matrix_file(dir / "a.oscf", float_matrix(3, 2, rng), MatrixRole::Features);
    const auto good = bytes_of(dir / "a.oscf");
    auto read = [&] { read_matrix_file(dir / "x.oscf", MatrixRole::Features); };

    auto b = good;
    b[1] = 'Z';
    write_bytes(dir / "x.oscf", b);
    EXPECT_EQ(code_of(read), FormatError::Code::BadMagic);

    b = good;
    b[4] = 2;
    write_bytes(dir / "x.oscf", b);
    EXPECT_EQ(code_of(read), FormatError::Code::BadVersion);

    write_bytes(dir / "x.oscf", std::vector<char>(good.begin(), good.begin() + 9));
    EXPECT_EQ(code_of(read), FormatError::Code::Truncated);

    write_bytes(dir / "x.oscf", std::vector<char>(good.begin(), good.end() - 4));
    EXPECT_EQ(code_of(read), FormatError::Code::Truncated);

    b = good;
    b.insert(b.end(), {0, 0, 0, 0});
    write_bytes(dir / "x.oscf", b);
    EXPECT_EQ(code_of(read), FormatError::Code::SizeMismatch);

    EXPECT_EQ(code_of([&] { read_matrix_file(dir / "nope.oscf", MatrixRole::Features); }), FormatError::Code::Io);
}

TEST(Annotation, RoundTrip) {
    TempDir dir("ann");
    const auto d = sample_doc();
    write_annotation_file(dir / "a.json", d);
    const auto back = read_annotation_file(dir / "a.json");
    EXPECT_EQ(back.video_id, d.video_id);
    EXPECT_EQ(back.osc, d.osc);
    EXPECT_EQ(back.annotation, d.annotation);
    write_annotation_file(dir / "b.json", back);
    EXPECT_EQ(bytes_of(dir / "a.json"), bytes_of(dir / "b.json"));
}

TEST(Annotation, Errors) {
    auto d = sample_doc();
    d.annotation.of(StateLabel::End).back().end = 13.0;
    EXPECT_THROW(annotation_to_json(d), ValidationError);

    const std::string head = R"({"video_id":"v","osc":{"object":"a","transition":"t"},"duration_s":4,)";
    EXPECT_THROW(parse_annotation_json(head + R"("ranges":{"initial":[[0,5]]}})"), ValidationError);
    EXPECT_THROW(parse_annotation_json(head + R"("ranges":{"initial":[[0,1,2]]}})"), FormatError);
    EXPECT_THROW(parse_annotation_json(head + R"("ranges":[]})"), FormatError);
    EXPECT_THROW(parse_annotation_json(R"({"video_id":"v"})"), FormatError);
    EXPECT_THROW(parse_annotation_json("{not json"), FormatError);

    const auto empty = parse_annotation_json(head + R"("ranges":{}})");
    for (auto s : kStates) EXPECT_FALSE(empty.annotation.has_state(s));
}

TEST(Manifest, RoundTripAndSelect) {
    TempDir dir("manifest");
    Manifest m;
    ManifestRecord a;
    a.video_id = "a";
    a.features = "features/a.oscf";
    a.scores = "scores/a.oscs";
    a.annotation = "annotations/a.json";
    a.osc = OscCategory::make("apple", "slicing");
    a.duration_s = 20;
    ManifestRecord b = a;
    b.video_id = "b";
    b.object_features = "objects/b.oscf";
    b.split = Split::Novel;
    b.subset = Subset::Test;
    b.duration_s = 7.5;
    m.records = {a, b};
    write_manifest(dir / "m.jsonl", m);

    const auto back = read_manifest(dir / "m.jsonl");
    ASSERT_EQ(back.records.size(), 2u);
    EXPECT_EQ(back.records[1].object_features, b.object_features);
    EXPECT_FALSE(back.records[0].object_features.has_value());
    EXPECT_EQ(back.records[1].frames(), 8u);
    EXPECT_EQ(back.resolve("features/a.oscf"), fs::absolute(dir.path()) / "features/a.oscf");
    EXPECT_EQ(back.select(Subset::Test).size(), 1u);
    EXPECT_EQ(back.select(std::nullopt, Split::Known).size(), 1u);
    EXPECT_EQ(back.select(std::nullopt).size(), 2u);

    write_manifest(dir / "m2.jsonl", back);
    EXPECT_EQ(bytes_of(dir / "m.jsonl"), bytes_of(dir / "m2.jsonl"));
}

TEST(Manifest, RejectsBadContent) {
    TempDir dir("manifest_bad");
    const std::string ok =
        R"({"video_id":"a","features":"f","osc":{"object":"o","transition":"t"},"split":"known","subset":"train","duration_s":3})";
    write_text(dir / "dup.jsonl", ok + "\n" + ok + "\n");
    EXPECT_THROW(read_manifest(dir / "dup.jsonl"), ValidationError);

    std::string novel_train = ok;
    novel_train.replace(novel_train.find("known"), 5, "novel");
    write_text(dir / "novel.jsonl", novel_train + "\n");
    EXPECT_THROW(read_manifest(dir / "novel.jsonl"), ValidationError);

    write_text(dir / "broken.jsonl", ok + "\n{\"video_id\": 3}\n");
    try {
        read_manifest(dir / "broken.jsonl");
        ADD_FAILURE();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.code(), FormatError::Code::Parse);
        EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
    }
    EXPECT_THROW(read_manifest(dir / "missing.jsonl"), FormatError);
}

TEST(LabelFile, RoundTrip) {
    TempDir dir("labels");
    const auto labels = decode_labels("BBIITAEEB");
    write_label_file(dir / "v.json", "v", labels);
    EXPECT_EQ(read_label_file(dir / "v.json"), labels);
}

TEST(Subset, Names) {
    for (auto s : {Subset::Train, Subset::Val, Subset::Test}) EXPECT_EQ(parse_subset(subset_name(s)), s);
    EXPECT_THROW(parse_subset("dev"), ValidationError);
}
