#include "termscout/discovery.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "termscout/synth.hpp"

using namespace termscout;

namespace {

DiscoveryConfig quick_config() {
    DiscoveryConfig cfg;
    cfg.min_diag_run = 40;
    return cfg;
}

Corpus two_utterance_corpus(const FeatureMatrix& a, const FeatureMatrix& b) {
    Corpus c;
    c.features.emplace(UtteranceId{"c", 0, 0}, a);
    c.features.emplace(UtteranceId{"c", 1, 0}, b);
    return c;
}

SynthConfig small_synth_config() {
    SynthConfig cfg;
    cfg.seed = 404;
    cfg.n_conversations = 2;
    cfg.utterances_per_channel = 2;
    cfg.vocab_size = 8;
    cfg.repeats_per_word = {2, 3};
    return cfg;
}

}  // namespace

TEST_CASE("find_candidate_diagonals on a self-similarity matrix") {
    const FeatureMatrix a = helpers::random_matrix(77, 60, 8);
    const SimilarityMatrix m = cosine_similarity_matrix(a, a);
    const auto runs = find_candidate_diagonals(m, quick_config());
    REQUIRE(!runs.empty());
    // The main diagonal dominates.
    CHECK(runs[0].i0 == runs[0].j0);
    CHECK(runs[0].length >= 59);
}

TEST_CASE("find_candidate_diagonals locates a planted diagonal") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> noise(-0.2, 0.2);
    SimilarityMatrix m;
    m.rows = m.cols = 120;
    m.values.resize(120 * 120);
    for (auto& v : m.values) v = static_cast<float>(noise(rng));
    for (int k = 0; k < 50; ++k) m.values[(20 + k) * 120 + (35 + k)] = 0.9f;

    const auto runs = find_candidate_diagonals(m, quick_config());
    REQUIRE(!runs.empty());
    bool covered = false;
    for (const auto& r : runs) {
        if (r.j0 - r.i0 != 15) continue;
        const int lo = std::max(r.i0, 20);
        const int hi = std::min(r.i0 + r.length, 70);
        if (hi - lo >= 40) covered = true;  // at least 80% of the planted cells
    }
    CHECK(covered);
}

TEST_CASE("find_candidate_diagonals on an all-zero matrix is empty") {
    SimilarityMatrix m;
    m.rows = m.cols = 80;
    m.values.assign(80 * 80, 0.0f);
    CHECK(find_candidate_diagonals(m, quick_config()).empty());
}

TEST_CASE("dtw_refine scores identical sequences as 1") {
    const FeatureMatrix a = helpers::random_matrix(5, 60, 8);
    DiscoveryConfig cfg = quick_config();
    const auto r = dtw_refine(a, a, {0, 0, 60}, -1.0f, cfg);
    REQUIRE(r.has_value());
    CHECK(std::abs(r->score - 1.0) < 1e-6);
    CHECK(r->a_start == 0);
    CHECK(r->a_end == 60);
}

TEST_CASE("dtw_refine with full band equals the brute-force oracle") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> len(2, 12);
    std::uniform_int_distribution<int> dims(3, 8);
    std::uniform_int_distribution<int> style(0, 1);

    DiscoveryConfig cfg;
    cfg.min_duration_s = 1e-6;
    cfg.band_halfwidth = 64;  // covers any rectangle up to 12x12

    for (int iter = 0; iter < 200; ++iter) {
        const int d = dims(rng);
        const FeatureMatrix a = oracles::random_features(rng, len(rng), d, style(rng) == 0);
        const FeatureMatrix b = oracles::random_features(rng, len(rng), d, style(rng) == 0);
        const DiagonalRun run{0, 0, std::min(a.frames, b.frames)};
        const auto r = dtw_refine(a, b, run, -1.0f, cfg);
        REQUIRE(r.has_value());
        CHECK(std::abs(r->score - oracles::brute_force_dtw(a, b)) < 1e-9);
    }
}

TEST_CASE("dtw_refine rejects degenerate rectangles") {
    const FeatureMatrix a = helpers::random_matrix(6, 1, 4);
    DiscoveryConfig cfg = quick_config();
    cfg.band_halfwidth = 0;
    CHECK(!dtw_refine(a, a, {0, 0, 1}, -1.0f, cfg).has_value());
}

TEST_CASE("discover_pairs on two identical utterances") {
    const FeatureMatrix a = helpers::random_matrix(123, 60, 12);
    const Corpus c = two_utterance_corpus(a, a);
    const auto pairs = discover_pairs(c, {}, quick_config());
    REQUIRE(pairs.size() == 1);
    CHECK(std::abs(pairs[0].dtw - 1.0) < 1e-6);
    CHECK(pairs[0].seg1.start_frame == 0);
    CHECK(pairs[0].seg1.end_frame == 60);
    CHECK(pairs[0].seg2.start_frame == 0);
    CHECK(pairs[0].seg2.end_frame == 60);
}

TEST_CASE("discover_pairs recovers a planted shared word within 5 frames") {
    std::mt19937_64 rng(31337);
    std::normal_distribution<double> g(0.0, 1.0);
    const FeatureMatrix word = helpers::random_matrix(555, 60, 12);

    auto build = [&](int lead, int tail, double sigma) {
        FeatureMatrix f = helpers::random_matrix(rng(), lead + 60 + tail, 12);
        for (int t = 0; t < 60; ++t)
            for (int d = 0; d < 12; ++d)
                f.values[(lead + t) * 12 + d] = word.row(t)[d] + static_cast<float>(sigma * g(rng));
        return f;
    };
    const Corpus c = two_utterance_corpus(build(40, 40, 0.05), build(25, 55, 0.05));

    const auto pairs = discover_pairs(c, {}, quick_config());
    REQUIRE(!pairs.empty());
    const auto& p = pairs[0];
    CHECK(std::abs(p.seg1.start_frame - 40) <= 5);
    CHECK(std::abs(p.seg1.end_frame - 100) <= 5);
    CHECK(std::abs(p.seg2.start_frame - 25) <= 5);
    CHECK(std::abs(p.seg2.end_frame - 85) <= 5);
    CHECK(p.dtw >= 0.9);
}

TEST_CASE("discover_pairs raising the threshold only filters") {
    const auto synth = generate(small_synth_config());
    DiscoveryConfig lo = quick_config();
    DiscoveryConfig hi = quick_config();
    hi.dtw_threshold = 0.88;

    const auto at_lo = discover_pairs(synth.corpus, {}, lo);
    const auto at_hi = discover_pairs(synth.corpus, {}, hi);

    std::vector<MatchPair> filtered;
    for (const auto& p : at_lo)
        if (p.dtw >= 0.88) filtered.push_back(p);

    REQUIRE(at_hi.size() == filtered.size());
    for (std::size_t i = 0; i < at_hi.size(); ++i) {
        CHECK(at_hi[i].seg1 == filtered[i].seg1);
        CHECK(at_hi[i].seg2 == filtered[i].seg2);
        CHECK(at_hi[i].dtw == filtered[i].dtw);
    }
}

TEST_CASE("discover_pairs is deterministic across worker counts and runs") {
    const auto synth = generate(small_synth_config());
    DiscoveryConfig cfg = quick_config();

    const auto serial = discover_pairs(synth.corpus, {}, cfg, 1);
    const auto parallel = discover_pairs(synth.corpus, {}, cfg, 4);
    const auto again = discover_pairs(synth.corpus, {}, cfg, 4);

    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].seg1 == parallel[i].seg1);
        CHECK(serial[i].seg2 == parallel[i].seg2);
        CHECK(serial[i].dtw == parallel[i].dtw);
        CHECK(parallel[i].dtw == again[i].dtw);
    }

    cfg.subsample_seed = 7;
    const auto sampled1 = discover_pairs(synth.corpus, {}, cfg, 4);
    const auto sampled2 = discover_pairs(synth.corpus, {}, cfg, 4);
    REQUIRE(sampled1.size() == sampled2.size());
    for (std::size_t i = 0; i < sampled1.size(); ++i) CHECK(sampled1[i].dtw == sampled2[i].dtw);
}

TEST_CASE("discover_pairs output is canonical and meets the minimum duration") {
    const auto synth = generate(small_synth_config());
    const auto pairs = discover_pairs(synth.corpus, {}, quick_config());
    REQUIRE(!pairs.empty());
    for (const auto& p : pairs) {
        CHECK(p.seg1.utterance < p.seg2.utterance);
        CHECK(p.seg1.duration_s() >= 0.5 - 1e-9);
        CHECK(p.seg2.duration_s() >= 0.5 - 1e-9);
        CHECK(p.dtw >= 0.8);
        CHECK(p.dtw <= 1.0);
    }
    for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i - 1].dtw >= pairs[i].dtw);
}

TEST_CASE("pair TSV round trip") {
    helpers::TempDir dir("pairs");
    const FeatureMatrix a = helpers::random_matrix(9, 80, 6);
    const Corpus c = two_utterance_corpus(a, a);

    std::vector<MatchPair> pairs(1);
    pairs[0].seg1 = make_segment({"c", 0, 0}, 5, 65, 0.010);
    pairs[0].seg2 = make_segment({"c", 1, 0}, 10, 70, 0.010);
    pairs[0].dtw = 0.875;

    save_pairs(dir.path() / "p.tsv", pairs);
    const auto back = load_pairs(dir.path() / "p.tsv", c);
    REQUIRE(back.size() == 1);
    CHECK(back[0].seg1 == pairs[0].seg1);
    CHECK(back[0].seg2 == pairs[0].seg2);
    CHECK(back[0].dtw == doctest::Approx(0.875));

    CHECK_THROWS_AS(load_pairs(dir.path() / "missing.tsv", c), DataError);
    helpers::write_text(dir.path() / "bad.tsv", "x_0_0\t0\t1\tc_1_0\t0\t1\t0.9\n");
    CHECK_THROWS_WITH_AS(load_pairs(dir.path() / "bad.tsv", c), doctest::Contains("x_0_0"), DataError);
}
