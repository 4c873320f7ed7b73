#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <vector>

#include "termscout/corpus.hpp"
#include "termscout/discovery.hpp"

namespace termscout {

enum class MissingTranslationPolicy { score_zero, drop_pair };

struct RescoreConfig {
    double alpha = 0.4;  // weight of translation similarity in the blend
    MissingTranslationPolicy missing_translation_policy = MissingTranslationPolicy::score_zero;

    void validate() const;
};

/// A match pair enriched with translation similarity and the blended score.
struct ScoredPair {
    MatchPair pair;
    double j = 0.0;       // Jaccard similarity of content-word sets
    double score = 0.0;   // (1 - alpha) * dtw + alpha * j
    std::optional<bool> correct;  // set by evaluation
    bool cross_speaker = false;
};

/// |e1 n e2| / |e1 u e2|; 0 when both sets are empty.
double jaccard(const std::set<std::string>& e1, const std::set<std::string>& e2);

double blend(double dtw, double j, double alpha);

/// Computes J from the utterances' translations (content words only) and the
/// blended score per pair. Output sorted by score descending, ties broken by
/// dtw descending then canonical pair order.
std::vector<ScoredPair> rescore_all(const std::vector<MatchPair>& pairs, const Corpus& c,
                                    const StopWordList& stops, const RescoreConfig& cfg);

bool scored_order(const ScoredPair& x, const ScoredPair& y);

// Pair TSV extended with columns j, score, cross_speaker.
void save_scored(const std::filesystem::path& path, const std::vector<ScoredPair>& scored);
std::vector<ScoredPair> load_scored(const std::filesystem::path& path, const Corpus& c);

}  // namespace termscout
