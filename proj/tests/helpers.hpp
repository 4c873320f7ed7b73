#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "termscout/corpus.hpp"
#include "termscout/discovery.hpp"

#ifndef TERMSCOUT_DATA_DIR
#define TERMSCOUT_DATA_DIR "data"
#endif

namespace helpers {

namespace fs = std::filesystem;

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = fs::temp_directory_path() /
                ("termscout_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline termscout::StopWordList english_stops() {
    return termscout::load_stop_words(fs::path(TERMSCOUT_DATA_DIR) / "stopwords" / "english.txt", "english");
}

inline termscout::StopWordList spanish_stops() {
    return termscout::load_stop_words(fs::path(TERMSCOUT_DATA_DIR) / "stopwords" / "spanish.txt", "spanish");
}

inline termscout::FeatureMatrix random_matrix(std::uint64_t seed, int frames, int dims,
                                              double frame_period_s = 0.010) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    termscout::FeatureMatrix m;
    m.frames = frames;
    m.dims = dims;
    m.frame_period_s = frame_period_s;
    m.values.resize(static_cast<std::size_t>(frames) * dims);
    for (auto& v : m.values) v = static_cast<float>(g(rng));
    return m;
}

struct WorkedExampleCorpus {
    termscout::Corpus corpus;
    // One pair per row of the worked example: dtw 0.93, 0.88, 0.86.
    std::vector<termscout::MatchPair> pairs;
};

/// Three utterance pairs whose translations carry the worked-example scores:
/// J = 0.125, 0 and 0.600 under the shipped English stop list.
inline WorkedExampleCorpus worked_example_corpus() {
    using namespace termscout;
    WorkedExampleCorpus out;

    struct Row {
        const char* conv;
        const char* text1;
        const char* text2;
        double dtw;
    };
    const std::vector<Row> rows = {
        {"fa", "to tell them to send me my baptism act",
         "we are going to need the sacrament of baptism paper", 0.93},
        {"fb", "not now now then he cant anymore", "yes well its good well yeah", 0.88},
        {"fc", "okay this the address two thousand two hundred", "two thousand two hundred", 0.86},
    };

    for (const auto& row : rows) {
        UtteranceId u1{row.conv, 0, 0};
        UtteranceId u2{row.conv, 1, 0};
        out.corpus.features.emplace(u1, random_matrix(fnv1a(row.conv), 120, 4));
        out.corpus.features.emplace(u2, random_matrix(fnv1a(row.conv) + 1, 120, 4));
        out.corpus.translations.emplace(u1, Translation{u1, tokenize(row.text1)});
        out.corpus.translations.emplace(u2, Translation{u2, tokenize(row.text2)});

        MatchPair p;
        p.seg1 = make_segment(u1, 10, 70, 0.010);
        p.seg2 = make_segment(u2, 20, 80, 0.010);
        p.dtw = row.dtw;
        out.pairs.push_back(p);
    }
    return out;
}

inline void write_text(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

}  // namespace helpers
