#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "termscout/corpus.hpp"
#include "termscout/discovery.hpp"

namespace termscout {

/// Synthetic corpus generator settings. Every conversation has two channels;
/// utterances are concatenations of vocabulary-word templates, shared filler
/// templates and silence, with additive Gaussian noise and a small fixed
/// linear distortion per channel so cross-speaker matches are harder.
struct SynthConfig {
    std::uint64_t seed = 42;
    int n_conversations = 3;
    int utterances_per_channel = 4;
    int vocab_size = 30;
    std::pair<int, int> word_len_frames = {50, 90};
    std::pair<int, int> repeats_per_word = {2, 4};
    int feature_dims = 39;
    double noise_sigma = 0.25;
    double silence_fraction = 0.30;
    double filler_rate = 0.20;           // chance of a filler at each slot between words
    double translation_fidelity = 0.95;  // chance a content word survives into the translation
    double channel_distortion = 0.15;
    double quiet_word_fraction = 0.25;   // word occurrences spoken below the VAD gate
    double confusable_fraction = 0.30;   // words that are near-copies of another word
    double confusion_sigma = 0.12;       // template perturbation of a confusable clone
    double frame_period_s = 0.010;

    void validate() const;
};

/// A generated word or filler occurrence. Fillers carry negative word ids
/// and do not appear in transcripts.
struct PlantedSpan {
    int word_id = 0;
    UtteranceId utterance;
    int start_frame = 0;
    int end_frame = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    bool quiet = false;
};

/// Canonical cross-utterance pair of occurrences of the same word.
struct PlantedPair {
    PlantedSpan a;
    PlantedSpan b;
    int word_id = 0;
};

struct LexiconEntry {
    std::string source;
    std::vector<std::string> targets;
};

struct GroundTruth {
    std::vector<PlantedSpan> word_spans;
    std::vector<PlantedSpan> filler_spans;
    std::vector<PlantedPair> planted_pairs;
    std::map<int, LexiconEntry> lexicon;
    std::set<std::string> stop_tokens;  // what fillers translate to
};

struct SynthResult {
    Corpus corpus;
    GroundTruth truth;
};

SynthResult generate(const SynthConfig& cfg);

/// Corpus files plus ground_truth.tsv (word_id utt start_s end_s) and
/// stopwords.txt under dir.
void write_synth_corpus(const std::filesystem::path& dir, const SynthResult& result);

struct TruthScore {
    std::size_t planted = 0;
    std::size_t recovered = 0;
    std::size_t output_pairs = 0;
    std::size_t matched_output_pairs = 0;
    double recall = 0.0;     // recovered / planted
    double precision = 0.0;  // matched / output
};

/// A planted pair counts as recovered when some discovered pair overlaps both
/// of its segments with IoU at least iou_min.
TruthScore score_against_truth(const std::vector<MatchPair>& pairs, const GroundTruth& gt, double iou_min);

}  // namespace termscout
