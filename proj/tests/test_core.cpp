#include <random>
#include <set>

#include <gtest/gtest.h>

#include "osc/core.hpp"

using namespace osc;

namespace {

std::vector<VocabEntry> table(const std::vector<std::pair<std::string, std::vector<std::string>>>& known,
                              const std::vector<std::pair<std::string, std::vector<std::string>>>& novel = {}) {
    std::vector<VocabEntry> out;
    for (const auto& [tr, objs] : known)
        for (const auto& o : objs) out.push_back({OscCategory::make(o, tr), false});
    for (const auto& [tr, objs] : novel)
        for (const auto& o : objs) out.push_back({OscCategory::make(o, tr), true});
    return out;
}

}  // namespace

TEST(Labels, CodesRoundTrip) {
    const auto seq = decode_labels("BITEA");
    ASSERT_EQ(seq.size(), 5u);
    EXPECT_EQ(seq[2], StateLabel::Transitioning);
    EXPECT_EQ(encode_labels(seq), "BITEA");
    EXPECT_THROW(decode_labels("BIX"), ValidationError);
    EXPECT_EQ(label_name(StateLabel::End), "end");
}

TEST(OscCategory, Canonicalizes) {
    const auto c = OscCategory::make("  Apple ", "SLICING");
    EXPECT_EQ(c.object, "apple");
    EXPECT_EQ(c.transition, "slicing");
    EXPECT_EQ(c.key(), "apple+slicing");
    EXPECT_THROW(OscCategory::make(" ", "slicing"), ValidationError);
}

TEST(Vocabulary, PerOscLabelCount) {
    const auto v = build_vocabulary(VocabMode::PerOsc,
                                    table({{"peeling", {"a", "b", "c"}}, {"slicing", {"d", "e"}}}, {{"slicing", {"z"}}}));
    EXPECT_EQ(v.label_count(), 15u);
    EXPECT_EQ(v.num_classes(), 16u);
}

TEST(Vocabulary, MultiTaskTwentyTransitions) {
    std::vector<std::pair<std::string, std::vector<std::string>>> known;
    for (int i = 0; i < 20; ++i) known.push_back({"t" + std::to_string(100 + i), {"obj"}});
    const auto v = build_vocabulary(VocabMode::MultiTask, table(known));
    EXPECT_EQ(v.label_count(), 60u);
    EXPECT_EQ(v.num_classes(), 61u);
}

TEST(Vocabulary, SharedIsThreeStates) {
    const auto v = build_vocabulary(VocabMode::SharedPerTransition,
                                    table({{"peeling", {"a", "b", "c"}}, {"slicing", {"d", "e"}}}));
    EXPECT_EQ(v.label_count(), 3u);
    EXPECT_EQ(v.num_classes(), 4u);
    const auto c = OscCategory::make("e", "slicing");
    EXPECT_EQ(v.class_index(c, StateLabel::Background), 0u);
    EXPECT_EQ(v.class_index(c, StateLabel::Initial), 1u);
    EXPECT_EQ(v.class_index(c, StateLabel::End), 3u);
}

TEST(Vocabulary, DeterministicUnderTablePermutation) {
    auto t = table({{"peeling", {"a", "b", "c"}}, {"slicing", {"d", "e"}}}, {{"peeling", {"q"}}});
    for (auto mode : {VocabMode::SharedPerTransition, VocabMode::PerOsc, VocabMode::MultiTask}) {
        const auto ref = build_vocabulary(mode, t);
        std::mt19937_64 rng(3);
        for (int i = 0; i < 10; ++i) {
            auto shuffled = t;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            EXPECT_EQ(build_vocabulary(mode, shuffled), ref);
        }
    }
}

TEST(Vocabulary, IndicesAreABijection) {
    for (auto mode : {VocabMode::PerOsc, VocabMode::MultiTask}) {
        const auto v = build_vocabulary(mode, table({{"peeling", {"a", "b", "c"}}, {"slicing", {"d", "e"}}}));
        std::set<std::size_t> seen;
        for (const auto& [tr, objs] : v.objects()) {
            for (const auto& o : objs.known) {
                for (auto s : kStates) {
                    const auto c = OscCategory::make(o, tr);
                    const auto idx = v.class_index(c, s);
                    ASSERT_GE(idx, 1u);
                    ASSERT_LT(idx, v.num_classes());
                    const auto info = v.decompose(idx);
                    EXPECT_EQ(info.state, s);
                    EXPECT_EQ(info.transition, tr);
                    if (mode == VocabMode::PerOsc) {
                        EXPECT_EQ(info.object, o);
                        seen.insert(idx);
                    }
                }
            }
        }
        if (mode == VocabMode::PerOsc) EXPECT_EQ(seen.size(), v.label_count());
        EXPECT_EQ(v.decompose(0).state, StateLabel::Background);
    }
}

TEST(Vocabulary, RejectsBadTables) {
    EXPECT_THROW(build_vocabulary(VocabMode::PerOsc, table({{"peeling", {"a", "a"}}})), ValidationError);
    EXPECT_THROW(build_vocabulary(VocabMode::PerOsc, table({{"peeling", {"a"}}}, {{"peeling", {"a"}}})),
                 ValidationError);
    const auto v = build_vocabulary(VocabMode::PerOsc, table({{"peeling", {"a"}}}, {{"peeling", {"n"}}}));
    EXPECT_THROW(v.class_index(OscCategory::make("n", "peeling"), StateLabel::Initial), ValidationError);
    EXPECT_THROW(v.class_index(OscCategory::make("a", "peeling"), StateLabel::Ambiguous), ValidationError);
    EXPECT_THROW(v.class_index(OscCategory::make("a", "melting"), StateLabel::Initial), ValidationError);
    EXPECT_FALSE(v.is_known(OscCategory::make("n", "peeling")));
    EXPECT_TRUE(v.is_known(OscCategory::make("a", "peeling")));
}

TEST(Vocabulary, ModeNames) {
    for (auto mode : {VocabMode::SharedPerTransition, VocabMode::PerOsc, VocabMode::MultiTask})
        EXPECT_EQ(parse_vocab_mode(vocab_mode_name(mode)), mode);
    EXPECT_THROW(parse_vocab_mode("bogus"), ValidationError);
}

TEST(Rasterize, Examples) {
    AnnotationSet a;
    a.duration_s = 5;
    a.of(StateLabel::Initial) = {{0, 2}};
    a.of(StateLabel::Transitioning) = {{2, 4}};
    a.of(StateLabel::End) = {{4, 5}};
    EXPECT_EQ(encode_labels(labels_from_ranges(a, 5)), "IITTE");

    AnnotationSet empty;
    empty.duration_s = 3;
    EXPECT_EQ(encode_labels(labels_from_ranges(empty, 3)), "BBB");

    AnnotationSet overlap;
    overlap.duration_s = 2;
    overlap.of(StateLabel::Initial) = {{0, 1}};
    overlap.of(StateLabel::End) = {{0, 1}};
    EXPECT_THROW(labels_from_ranges(overlap, 2), ValidationError);
}

TEST(Rasterize, RejectsBadRanges) {
    AnnotationSet a;
    a.duration_s = 4;
    a.of(StateLabel::Initial) = {{0, 5}};
    EXPECT_THROW(a.validate(), ValidationError);
    a.of(StateLabel::Initial) = {{2, 1}};
    EXPECT_THROW(a.validate(), ValidationError);
    a.of(StateLabel::Initial) = {{0, 1}};
    EXPECT_THROW(labels_from_ranges(a, 3), ValidationError);  // frame count disagrees with duration
    EXPECT_EQ(frame_count_for(4.2), 5u);
}

TEST(Rasterize, RangesRoundTripProperty) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> pick(0, 3);
    for (int trial = 0; trial < 500; ++trial) {
        LabelSequence seq(1 + trial % 17);
        for (auto& l : seq) l = static_cast<StateLabel>(pick(rng));
        const auto ann = ranges_from_labels(seq);
        EXPECT_NO_THROW(ann.validate());
        EXPECT_EQ(labels_from_ranges(ann, seq.size()), seq);
    }
}
