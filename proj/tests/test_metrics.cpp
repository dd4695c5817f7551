#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "osc/metrics.hpp"

using namespace osc;

namespace {

VideoResult metrics(const char* pred, const char* gt) { return frame_metrics(decode_labels(pred), decode_labels(gt)); }

ScoredResult with_f1(const std::string& transition, Split split, double f1, const std::string& object = "obj") {
    ScoredResult r;
    r.osc = OscCategory::make(object, transition);
    r.split = split;
    r.result.present[0] = true;
    r.result.f1[0] = f1;
    r.result.precision[0] = f1;
    r.result.recall[0] = f1;
    return r;
}

}  // namespace

TEST(FrameMetrics, WorkedExample) {
    const auto r = metrics("IITEB", "ITTEB");
    EXPECT_DOUBLE_EQ(r.f1[0], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.f1[1], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.f1[2], 1.0);
    EXPECT_DOUBLE_EQ(r.mean_f1(), 7.0 / 9.0);
}

TEST(FrameMetrics, HandCountedFixtures) {
    auto perfect = metrics("BITE", "BITE");
    EXPECT_DOUBLE_EQ(perfect.mean_f1(), 1.0);
    EXPECT_DOUBLE_EQ(perfect.mean_precision(), 1.0);
    EXPECT_DOUBLE_EQ(perfect.mean_recall(), 1.0);

    auto silent = metrics("BBBB", "IIEE");
    EXPECT_EQ(silent.present_count(), 2u);
    EXPECT_DOUBLE_EQ(silent.mean_f1(), 0.0);

    auto over = metrics("IIII", "IITT");
    EXPECT_DOUBLE_EQ(over.precision[0], 0.5);
    EXPECT_DOUBLE_EQ(over.recall[0], 1.0);
    EXPECT_DOUBLE_EQ(over.mean_f1(), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(over.mean_precision(), 0.25);
    EXPECT_DOUBLE_EQ(over.mean_recall(), 0.5);

    auto shifted = metrics("BITTEE", "IITEEB");
    EXPECT_DOUBLE_EQ(shifted.f1[2], 0.5);
    EXPECT_DOUBLE_EQ(shifted.mean_f1(), 11.0 / 18.0);

    auto end_only = metrics("TEB", "EEE");
    EXPECT_EQ(end_only.present_count(), 1u);
    EXPECT_DOUBLE_EQ(end_only.recall[2], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(end_only.mean_f1(), 0.5);

    auto empty = metrics("ITE", "BBB");
    EXPECT_FALSE(empty.evaluable());
}

TEST(FrameMetrics, RejectsBadInput) {
    EXPECT_THROW(metrics("IT", "ITE"), ValidationError);
    EXPECT_THROW(metrics("IAE", "ITE"), ValidationError);
}

TEST(FrameMetrics, MatchesConfusionOracle) {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> pick(0, 3), len(1, 20);
    for (int trial = 0; trial < 5000; ++trial) {
        LabelSequence p(static_cast<std::size_t>(len(rng))), g(p.size());
        for (auto& l : p) l = static_cast<StateLabel>(pick(rng));
        for (auto& l : g) l = static_cast<StateLabel>(pick(rng));
        const auto r = frame_metrics(p, g);
        const auto o = oracle::confusion_metrics(p, g);
        for (int s = 0; s < 3; ++s) {
            ASSERT_EQ(r.present[s], o.present[s]);
            if (!o.present[s]) continue;
            ASSERT_NEAR(r.precision[s], o.precision[s], 1e-15);
            ASSERT_NEAR(r.recall[s], o.recall[s], 1e-15);
            ASSERT_NEAR(r.f1[s], o.f1[s], 1e-15);
        }
        ASSERT_NEAR(r.mean_f1(), o.video_f1, 1e-15);
    }
}

TEST(PrecisionAt1, Examples) {
    AnnotationSet a;
    a.duration_s = 10;
    a.of(StateLabel::Initial) = {{1, 3}};
    a.of(StateLabel::End) = {{6, 9}};
    const auto hit = state_precision_at_1({2, 0, 7}, a);
    EXPECT_TRUE(hit.hit[0]);
    EXPECT_TRUE(hit.hit[2]);
    EXPECT_FALSE(hit.present[1]);
    EXPECT_DOUBLE_EQ(hit.mean, 1.0);

    const auto half = state_precision_at_1({2, 0, 5}, a);
    EXPECT_FALSE(half.hit[2]);
    EXPECT_DOUBLE_EQ(half.mean, 0.5);

    const auto miss = state_precision_at_1({5, 0, 0}, a);
    EXPECT_FALSE(miss.hit[0]);

    VideoResult r;
    r.present = {true, false, true};
    attach_precision_at_1(r, half);
    EXPECT_DOUBLE_EQ(r.mean_precision_at_1(), 0.5);
}

TEST(Aggregate, SingleTransitionMean) {
    const auto rep = aggregate({with_f1("peel", Split::Known, 0.4), with_f1("peel", Split::Known, 0.6)});
    EXPECT_DOUBLE_EQ(rep.per_transition.at("peel").at("known").f1, 0.5);
    EXPECT_DOUBLE_EQ(rep.overall.at("known").f1, 0.5);
}

TEST(Aggregate, TransitionsWeighEqually) {
    const auto rep = aggregate({with_f1("peel", Split::Known, 0.4), with_f1("peel", Split::Known, 0.4),
                                with_f1("peel", Split::Known, 0.4), with_f1("slice", Split::Known, 0.8)});
    EXPECT_DOUBLE_EQ(rep.overall.at("known").f1, 0.6);
    EXPECT_EQ(rep.overall.at("known").transitions, 2u);
    EXPECT_EQ(rep.overall.at("known").videos, 4u);
}

TEST(Aggregate, ThreeLevelTwoTransitionFixture) {
    // peel/known: videos 7/9 and 1/3 -> 5/9; slice/known: 1 -> overall known (5/9 + 1) / 2 = 7/9.
    // peel/novel: 11/18; slice/novel: 0.5 and 0 -> 0.25; overall novel (11/18 + 1/4) / 2 = 31/72.
    std::vector<ScoredResult> rs;
    auto add = [&](const char* tr, Split s, const char* p, const char* g) {
        rs.push_back({metrics(p, g), OscCategory::make("x", tr), s});
    };
    add("peel", Split::Known, "IITEB", "ITTEB");
    add("peel", Split::Known, "IIII", "IITT");
    add("slice", Split::Known, "BITE", "BITE");
    add("peel", Split::Novel, "BITTEE", "IITEEB");
    add("slice", Split::Novel, "TEB", "EEE");
    add("slice", Split::Novel, "BBBB", "IIEE");
    add("slice", Split::Novel, "ITE", "BBB");  // excluded
    const auto rep = aggregate(rs);
    EXPECT_NEAR(rep.per_transition.at("peel").at("known").f1, 5.0 / 9.0, 1e-15);
    EXPECT_NEAR(rep.overall.at("known").f1, 7.0 / 9.0, 1e-15);
    EXPECT_NEAR(rep.per_transition.at("slice").at("novel").f1, 0.25, 1e-15);
    EXPECT_NEAR(rep.overall.at("novel").f1, 31.0 / 72.0, 1e-15);
    EXPECT_EQ(rep.excluded_videos, 1u);
    EXPECT_EQ(rep.per_transition.at("slice").at("novel").videos, 2u);
}

TEST(Aggregate, OrderInvariant) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<ScoredResult> rs;
    for (int i = 0; i < 40; ++i)
        rs.push_back(with_f1(i % 3 == 0 ? "a" : "b", i % 2 ? Split::Known : Split::Novel, u(rng),
                             "o" + std::to_string(i % 5)));
    const auto ref = aggregate(rs).to_json();
    for (int k = 0; k < 5; ++k) {
        std::shuffle(rs.begin(), rs.end(), rng);
        EXPECT_EQ(aggregate(rs).to_json(), ref);
    }
    EXPECT_THROW(aggregate({}), ValidationError);
}

TEST(Retrieval, Examples) {
    std::vector<RetrievalEntry> pool{{{1, 0}, OscCategory::make("a", "t")},
                                     {{0, 1}, OscCategory::make("b", "t")},
                                     {{-1, 0}, OscCategory::make("c", "t")},
                                     {{1, 0}, OscCategory::make("d", "t")}};
    const auto r = retrieve_by_state({1, 0}, pool);
    EXPECT_EQ(r.nearest, 0u);
    EXPECT_NEAR(r.nearest_distance, 0.0, 1e-15);
    EXPECT_EQ(r.furthest, 2u);
    EXPECT_NEAR(r.furthest_distance, 2.0, 1e-15);

    for (auto& e : pool)
        for (auto& x : e.embedding) x *= 7.5;
    const auto s = retrieve_by_state({3, 0}, pool);
    EXPECT_EQ(s.nearest, r.nearest);
    EXPECT_EQ(s.furthest, r.furthest);

    EXPECT_THROW(cosine_distance({0, 0}, {1, 0}), ValidationError);
    EXPECT_THROW(cosine_distance({1}, {1, 0}), ValidationError);
    EXPECT_THROW(retrieve_by_state({1, 0}, {}), ValidationError);
}

TEST(Split, Names) {
    EXPECT_EQ(parse_split(split_name(Split::Novel)), Split::Novel);
    EXPECT_THROW(parse_split("unknown"), ValidationError);
}
