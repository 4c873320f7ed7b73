#include "termscout/corpus.hpp"

#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "termscout/synth.hpp"

using namespace termscout;

TEST_CASE("tokenize lowercases, strips punctuation and splits on whitespace") {
    CHECK(tokenize("Don't, stop!") == std::vector<std::string>{"dont", "stop"});
    CHECK(tokenize("  Two thousand\ttwo hundred ") ==
          std::vector<std::string>{"two", "thousand", "two", "hundred"});
    CHECK(tokenize("...").empty());
    CHECK(tokenize("").empty());
}

TEST_CASE("content_words filters the shipped English stop list") {
    const auto stops = helpers::english_stops();

    SUBCASE("worked example a") {
        const std::vector<std::string> tokens = {"to", "tell", "them", "to", "send",
                                                 "me", "my",   "baptism", "act"};
        CHECK(content_words(tokens, stops) == std::set<std::string>{"tell", "send", "baptism", "act"});
    }
    SUBCASE("all stop words") {
        CHECK(content_words({"the", "of", "a"}, stops).empty());
    }
    SUBCASE("numerals are content words") {
        CHECK(content_words({"two", "thousand", "two", "hundred"}, stops) ==
              std::set<std::string>{"two", "thousand", "hundred"});
    }
    SUBCASE("membership is case-insensitive") {
        CHECK(content_words({"The", "BAPTISM"}, stops) == std::set<std::string>{"baptism"});
    }
}

TEST_CASE("content_words is idempotent and a subset of its input") {
    const auto stops = helpers::english_stops();
    std::mt19937_64 rng(7);
    const std::vector<std::string> vocab = {"the", "of",  "baptism", "send", "Dog", "CAT",
                                            "now", "two", "paper",   "a",    "act"};
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::uniform_int_distribution<int> len(0, 12);

    for (int iter = 0; iter < 200; ++iter) {
        std::vector<std::string> tokens;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) tokens.push_back(vocab[pick(rng)]);

        const auto once = content_words(tokens, stops);
        const auto again = content_words({once.begin(), once.end()}, stops);
        CHECK(once == again);

        std::set<std::string> lowered;
        for (const auto& t : tokens) lowered.insert(to_lower_ascii(t));
        for (const auto& w : once) CHECK(lowered.count(w) == 1);
    }
}

TEST_CASE("utterance id round trip and ordering") {
    const UtteranceId id{"sp_2010", 1, 12};
    CHECK(id.str() == "sp_2010_1_12");
    CHECK(UtteranceId::parse("sp_2010_1_12") == id);

    // Numeric ordering, not string ordering, on channel and index.
    CHECK(UtteranceId{"c", 1, 9} < UtteranceId{"c", 1, 10});
    CHECK(UtteranceId{"c", 0, 5} < UtteranceId{"c", 1, 0});

    CHECK_THROWS_AS(UtteranceId::parse("nounderscores"), DataError);
    CHECK_THROWS_AS(UtteranceId::parse("c_x_1"), DataError);
}

TEST_CASE("feature file round trip is exact") {
    helpers::TempDir dir("fmx");
    FeatureMatrix m = helpers::random_matrix(3, 17, 5, 0.025);
    m.energy = std::vector<float>(17, 0.5f);
    (*m.energy)[3] = 2.25f;

    const auto path = dir.path() / "m.fmx";
    write_feature_file(path, m);
    const FeatureMatrix back = read_feature_file(path);
    CHECK(back.frames == m.frames);
    CHECK(back.dims == m.dims);
    CHECK(back.frame_period_s == m.frame_period_s);
    CHECK(back.values == m.values);
    REQUIRE(back.energy.has_value());
    CHECK(*back.energy == *m.energy);
}

TEST_CASE("feature file rejects bad magic and truncation") {
    helpers::TempDir dir("fmxbad");
    helpers::write_text(dir.path() / "bad.fmx", "NOPE");
    CHECK_THROWS_AS(read_feature_file(dir.path() / "bad.fmx"), DataError);

    FeatureMatrix m = helpers::random_matrix(4, 8, 3);
    write_feature_file(dir.path() / "ok.fmx", m);
    auto bytes = read_file_bytes(dir.path() / "ok.fmx");
    helpers::write_text(dir.path() / "cut.fmx", bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(read_feature_file(dir.path() / "cut.fmx"), DataError);
    helpers::write_text(dir.path() / "long.fmx", bytes + "xx");
    CHECK_THROWS_AS(read_feature_file(dir.path() / "long.fmx"), DataError);
}

namespace {

void write_fixture_corpus(const std::filesystem::path& dir, bool with_transcript_for_first_only) {
    std::filesystem::create_directories(dir / "features");
    write_feature_file(dir / "features" / "a.fmx", helpers::random_matrix(1, 60, 4));
    write_feature_file(dir / "features" / "b.fmx", helpers::random_matrix(2, 40, 4));
    helpers::write_text(dir / "manifest.tsv",
                        "conv_0_0\tconv\t0\tfeatures/a.fmx\n"
                        "conv_1_0\tconv\t1\tfeatures/b.fmx\n");
    if (with_transcript_for_first_only)
        helpers::write_text(dir / "transcripts.tsv", "conv_0_0\thola\t0.10\t0.45\n");
}

}  // namespace

TEST_CASE("load_manifest loads, counts and warns") {
    helpers::TempDir dir("corpus");

    SUBCASE("empty manifest") {
        helpers::write_text(dir.path() / "manifest.tsv", "");
        LoadSummary s;
        const Corpus c = load_manifest(dir.path() / "manifest.tsv", &s);
        CHECK(c.features.empty());
        CHECK(s.utterances == 0);
        CHECK(s.transcripts == 0);
        CHECK(s.translations == 0);
    }

    SUBCASE("two utterances, one transcript") {
        write_fixture_corpus(dir.path(), true);
        LoadSummary s;
        const Corpus c = load_manifest(dir.path() / "manifest.tsv", &s);
        CHECK(c.features.size() == 2);
        CHECK(s.utterances == 2);
        CHECK(s.transcripts == 1);
        bool warned = false;
        for (const auto& w : s.warnings)
            if (w.find("no transcript") != std::string::npos && w.find("conv_1_0") != std::string::npos)
                warned = true;
        CHECK(warned);
    }

    SUBCASE("duplicate utterance id is fatal and named") {
        write_fixture_corpus(dir.path(), false);
        helpers::write_text(dir.path() / "manifest.tsv",
                            "conv_0_0\tconv\t0\tfeatures/a.fmx\n"
                            "conv_0_0\tconv\t0\tfeatures/b.fmx\n");
        CHECK_THROWS_WITH_AS(load_manifest(dir.path() / "manifest.tsv"),
                             doctest::Contains("conv_0_0"), DataError);
    }

    SUBCASE("missing feature file names the utterance") {
        helpers::write_text(dir.path() / "manifest.tsv", "conv_0_0\tconv\t0\tfeatures/gone.fmx\n");
        CHECK_THROWS_WITH_AS(load_manifest(dir.path() / "manifest.tsv"),
                             doctest::Contains("conv_0_0"), DataError);
    }

    SUBCASE("malformed row reports the line number") {
        write_fixture_corpus(dir.path(), false);
        helpers::write_text(dir.path() / "manifest.tsv",
                            "conv_0_0\tconv\t0\tfeatures/a.fmx\n"
                            "broken row\n");
        CHECK_THROWS_WITH_AS(load_manifest(dir.path() / "manifest.tsv"), doctest::Contains(":2"), DataError);
    }

    SUBCASE("transcript for unknown utterance is fatal") {
        write_fixture_corpus(dir.path(), false);
        helpers::write_text(dir.path() / "transcripts.tsv", "other_0_0\tword\t0.0\t0.5\n");
        CHECK_THROWS_AS(load_manifest(dir.path() / "manifest.tsv"), DataError);
    }
}

TEST_CASE("corpus save/load/save round trip is byte-identical") {
    SynthConfig cfg;
    cfg.seed = 11;
    cfg.n_conversations = 1;
    cfg.utterances_per_channel = 2;
    cfg.vocab_size = 4;
    cfg.repeats_per_word = {1, 2};

    helpers::TempDir d1("rt1"), d2("rt2");
    const auto result = generate(cfg);
    save_corpus(d1.path(), result.corpus);

    const Corpus loaded = load_manifest(d1.path() / "manifest.tsv");
    save_corpus(d2.path(), loaded);

    for (const char* name : {"manifest.tsv", "transcripts.tsv", "translations.tsv"})
        CHECK(read_file_bytes(d1.path() / name) == read_file_bytes(d2.path() / name));
    for (const auto& [id, _] : loaded.features) {
        const std::string rel = "features/" + id.str() + ".fmx";
        CHECK(read_file_bytes(d1.path() / rel) == read_file_bytes(d2.path() / rel));
    }
}
