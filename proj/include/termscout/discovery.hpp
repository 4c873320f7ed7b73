#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "termscout/corpus.hpp"
#include "termscout/signal.hpp"

namespace termscout {

/// A discovered stretch of one utterance, half-open in frames, with derived
/// timestamps.
struct Segment {
    UtteranceId utterance;
    int start_frame = 0;
    int end_frame = 0;
    double start_s = 0.0;
    double end_s = 0.0;

    double duration_s() const { return end_s - start_s; }
    auto operator<=>(const Segment&) const = default;
};

Segment make_segment(const UtteranceId& id, int start_frame, int end_frame, double frame_period_s);

/// Two matched segments plus their normalized DTW similarity in [0, 1].
/// Canonical: seg1.utterance <= seg2.utterance.
struct MatchPair {
    Segment seg1;
    Segment seg2;
    double dtw = 0.0;
};

struct DiscoveryConfig {
    double dtw_threshold = 0.80;
    double min_duration_s = 0.5;
    double sim_binarize_quantile = 0.95;
    int min_diag_run = 40;
    int band_halfwidth = 10;
    std::optional<std::uint64_t> subsample_seed;  // approximate the quantile from a sample
    int max_pairs_per_utt_pair = 5;

    void validate() const;
};

/// A maximal near-diagonal stretch of above-threshold similarity cells:
/// cells (i0+k, j0+k) for k in [0, length).
struct DiagonalRun {
    int i0 = 0;
    int j0 = 0;
    int length = 0;
};

/// The binarization value: the sim_binarize_quantile empirical quantile of
/// the matrix entries (exact, or sampled when subsample_seed is set).
float binarize_threshold(const SimilarityMatrix& m, const DiscoveryConfig& cfg);

/// Scans every diagonal for maximal runs of cells strictly above the
/// threshold, tolerating single-cell gaps. Longest first, truncated to
/// max_pairs_per_utt_pair.
std::vector<DiagonalRun> find_candidate_diagonals(const SimilarityMatrix& m, const DiscoveryConfig& cfg);
std::vector<DiagonalRun> find_candidate_diagonals(const SimilarityMatrix& m, const DiscoveryConfig& cfg,
                                                  float threshold);

/// DTW refinement result in the coordinate frame of the two input matrices.
struct RefinedMatch {
    int a_start = 0, a_end = 0;  // half-open frames of the first input
    int b_start = 0, b_end = 0;
    double score = 0.0;          // 1 - mean path cost, clamped to [0, 1]
};

/// DTW over the rectangle spanned by the run widened by band_halfwidth,
/// local cost 1 - cosine, steps {(1,0),(0,1),(1,1)}, constrained to the band
/// around the run's diagonal. The optimal path is trimmed of leading and
/// trailing cells whose cosine falls below trim_threshold; the match is kept
/// only if both trimmed sides last at least min_duration_s.
std::optional<RefinedMatch> dtw_refine(const FeatureMatrix& a, const FeatureMatrix& b, const DiagonalRun& run,
                                       float trim_threshold, const DiscoveryConfig& cfg);

/// All-pairs two-pass discovery over a corpus: restrict to speech regions,
/// find diagonal candidates, DTW-refine, remap to original frames, suppress
/// near-duplicates, and keep pairs scoring at least dtw_threshold, sorted by
/// score descending. Utterances missing from `regions` run full-span.
std::vector<MatchPair> discover_pairs(const Corpus& c, const std::map<UtteranceId, SpeechRegions>& regions,
                                      const DiscoveryConfig& cfg, int workers = 0);

// TSV rows: utt1 start1_s end1_s utt2 start2_s end2_s dtw, sorted by dtw
// descending. The interchange format consumed by rescoring and evaluation.
void save_pairs(const std::filesystem::path& path, const std::vector<MatchPair>& pairs);
std::vector<MatchPair> load_pairs(const std::filesystem::path& path, const Corpus& c);

}  // namespace termscout
