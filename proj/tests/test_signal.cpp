#include "termscout/signal.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace termscout;

TEST_CASE("cosine similarity: self, orthogonal and zero-norm frames") {
    const FeatureMatrix a = helpers::random_matrix(5, 30, 8);
    const SimilarityMatrix self = cosine_similarity_matrix(a, a);
    for (int i = 0; i < a.frames; ++i) CHECK(self.at(i, i) == doctest::Approx(1.0).epsilon(1e-6));

    FeatureMatrix x, y;
    x.frames = y.frames = 1;
    x.dims = y.dims = 2;
    x.values = {1.0f, 0.0f};
    y.values = {0.0f, 1.0f};
    CHECK(cosine_similarity_matrix(x, y).at(0, 0) == 0.0f);

    FeatureMatrix z = x;
    z.values = {0.0f, 0.0f};
    CHECK(cosine_similarity_matrix(z, y).at(0, 0) == 0.0f);
}

TEST_CASE("cosine similarity matches the scalar-loop oracle") {
    const FeatureMatrix a = helpers::random_matrix(21, 3, 2);
    const FeatureMatrix b = helpers::random_matrix(22, 4, 2);
    const SimilarityMatrix m = cosine_similarity_matrix(a, b);
    for (int i = 0; i < a.frames; ++i)
        for (int j = 0; j < b.frames; ++j)
            CHECK(m.at(i, j) == doctest::Approx(oracles::naive_cosine(a, i, b, j)).epsilon(1e-6));
}

TEST_CASE("cosine similarity transpose symmetry") {
    const FeatureMatrix a = helpers::random_matrix(31, 7, 5);
    const FeatureMatrix b = helpers::random_matrix(32, 9, 5);
    const SimilarityMatrix ab = cosine_similarity_matrix(a, b);
    const SimilarityMatrix ba = cosine_similarity_matrix(b, a);
    for (int i = 0; i < a.frames; ++i)
        for (int j = 0; j < b.frames; ++j) CHECK(ab.at(i, j) == ba.at(j, i));
}

TEST_CASE("cosine similarity rejects dimension mismatch") {
    const FeatureMatrix a = helpers::random_matrix(1, 3, 4);
    const FeatureMatrix b = helpers::random_matrix(2, 3, 5);
    CHECK_THROWS_AS(cosine_similarity_matrix(a, b), DataError);
}

TEST_CASE("rms energy vad") {
    SUBCASE("constant positive energy keeps everything") {
        const std::vector<float> energy(50, 1.0f);
        const auto r = rms_energy_vad(energy, 30.0, 0.20, 0.30, 0.010);
        REQUIRE(r.intervals.size() == 1);
        CHECK(r.intervals[0] == FrameInterval{0, 50});
    }
    SUBCASE("short gap is bridged") {
        const std::vector<float> energy = {1, 1, 0, 0, 0, 1, 1};
        const auto r = rms_energy_vad(energy, 20.0, 0.01, 0.05, 0.010);
        REQUIRE(r.intervals.size() == 1);
        CHECK(r.intervals[0] == FrameInterval{0, 7});
    }
    SUBCASE("long gap is not bridged") {
        const std::vector<float> energy = {1, 1, 0, 0, 0, 1, 1};
        const auto r = rms_energy_vad(energy, 20.0, 0.01, 0.01, 0.010);
        REQUIRE(r.intervals.size() == 2);
        CHECK(r.intervals[0] == FrameInterval{0, 2});
        CHECK(r.intervals[1] == FrameInterval{5, 7});
    }
    SUBCASE("runs shorter than min_speech_s are dropped") {
        const std::vector<float> energy = {1, 1};
        CHECK(rms_energy_vad(energy, 20.0, 0.05, 0.01, 0.010).intervals.empty());
    }
    SUBCASE("all-zero energy yields no regions") {
        CHECK(rms_energy_vad(std::vector<float>(10, 0.0f), 30.0, 0.01, 0.01, 0.010).intervals.empty());
    }
}

TEST_CASE("regions from alignment") {
    Transcript t;
    t.utterance = UtteranceId{"c", 0, 0};

    SUBCASE("single word converts to frames") {
        t.words = {{"w", 0.10, 0.50}};
        const auto r = regions_from_alignment(t, 0.010, 0.0, 1000);
        REQUIRE(r.intervals.size() == 1);
        CHECK(r.intervals[0] == FrameInterval{10, 50});
    }
    SUBCASE("padding merges adjacent words") {
        t.words = {{"w1", 0.0, 0.2}, {"w2", 0.25, 0.4}};
        const auto r = regions_from_alignment(t, 0.010, 0.05, 1000);
        REQUIRE(r.intervals.size() == 1);
        CHECK(r.intervals[0] == FrameInterval{0, 45});
    }
    SUBCASE("empty transcript yields no regions") {
        CHECK(regions_from_alignment(t, 0.010, 0.05, 1000).intervals.empty());
    }
    SUBCASE("pad 0 keeps the measure of the word-interval union") {
        t.words = {{"w1", 0.0, 0.2}, {"w2", 0.25, 0.4}, {"w3", 0.30, 0.6}};
        const auto r = regions_from_alignment(t, 0.010, 0.0, 1000);
        SpeechRegions copy = r;
        CHECK(copy.total_frames() == 20 + 35);  // [0,0.2) plus [0.25,0.6)
    }
    SUBCASE("clamps to the utterance frame count") {
        t.words = {{"w", 0.10, 0.50}};
        const auto r = regions_from_alignment(t, 0.010, 0.0, 30);
        REQUIRE(r.intervals.size() == 1);
        CHECK(r.intervals[0] == FrameInterval{10, 30});
    }
}

TEST_CASE("restrict_to_regions") {
    FeatureMatrix f = helpers::random_matrix(9, 6, 3);
    f.energy = std::vector<float>{0, 1, 2, 3, 4, 5};

    SUBCASE("full span is the identity") {
        const auto r = restrict_to_regions(f, full_span_regions({"c", 0, 0}, f.frames));
        CHECK(r.features.frames == f.frames);
        CHECK(r.features.values == f.values);
        for (int i = 0; i < f.frames; ++i) CHECK(r.remap[i] == i);
    }
    SUBCASE("a single interval remaps to original frames") {
        SpeechRegions regions;
        regions.intervals = {{2, 4}};
        const auto r = restrict_to_regions(f, regions);
        CHECK(r.features.frames == 2);
        CHECK(r.remap == std::vector<int>{2, 3});
        for (int d = 0; d < f.dims; ++d) {
            CHECK(r.features.row(0)[d] == f.row(2)[d]);
            CHECK(r.features.row(1)[d] == f.row(3)[d]);
        }
        CHECK((*r.features.energy) == std::vector<float>{2, 3});
    }
    SUBCASE("empty regions yield an empty matrix") {
        CHECK(restrict_to_regions(f, SpeechRegions{}).features.frames == 0);
    }
    SUBCASE("remap is the identity on frames inside regions") {
        SpeechRegions regions;
        regions.intervals = {{0, 2}, {3, 6}};
        const auto r = restrict_to_regions(f, regions);
        for (std::size_t k = 0; k < r.remap.size(); ++k) {
            const int orig = r.remap[k];
            for (int d = 0; d < f.dims; ++d) CHECK(r.features.row(static_cast<int>(k))[d] == f.row(orig)[d]);
        }
    }
    SUBCASE("invalid region throws") {
        SpeechRegions regions;
        regions.intervals = {{4, 9}};
        CHECK_THROWS_AS(restrict_to_regions(f, regions), DataError);
    }
}

TEST_CASE("regions TSV round trip") {
    helpers::TempDir dir("regions");
    std::map<UtteranceId, SpeechRegions> regions;
    SpeechRegions r;
    r.utterance = {"c", 0, 0};
    r.intervals = {{0, 5}, {8, 12}};
    regions.emplace(r.utterance, r);
    save_regions(dir.path() / "r.tsv", regions);
    const auto back = load_regions(dir.path() / "r.tsv");
    REQUIRE(back.size() == 1);
    CHECK(back.at(r.utterance).intervals == r.intervals);
}
