#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "termscout/corpus.hpp"
#include "termscout/rescore.hpp"

namespace termscout {

struct EvalConfig {
    double base_dtw_threshold = 0.80;  // the D used at discovery time
};

/// One point of the precision/recall curve at threshold S.
struct PRPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::size_t predicted = 0;
    std::size_t correct_predicted = 0;
};

struct EvalReport {
    std::vector<PRPoint> points;  // ascending threshold; last swept first
    double average_precision = 0.0;
    std::size_t total_pairs = 0;
    std::size_t total_correct = 0;  // recall denominator: correct pairs at the base threshold
    bool degenerate = false;        // no correct pairs, AP pinned to 0
};

/// Content words of a transcript whose interval overlaps the segment with
/// positive measure (half-open; exact touch does not count).
std::set<std::string> words_overlapping_segment(const Transcript& t, const Segment& s, const StopWordList& stops);

/// True iff the two segments' overlapping content-word sets intersect.
/// A segment with no transcript words yields the empty set, so pairs over
/// silence or untranscribed fillers are incorrect.
bool label_pair(const MatchPair& p, const std::map<UtteranceId, Transcript>& transcripts,
                const StopWordList& stops);

void label_all(std::vector<ScoredPair>& scored, const Corpus& c, const StopWordList& stops);

/// Sweeps S over all distinct scores descending, one block per tied score;
/// AP is the piecewise-constant area under the curve. Recall uses the fixed
/// denominator of correct pairs with dtw >= base_dtw_threshold, so the
/// lowest-threshold point has recall exactly 1.
EvalReport pr_curve(const std::vector<ScoredPair>& scored, const EvalConfig& cfg);

/// pr_curve restricted to cross-speaker pairs, with a subset-level recall
/// denominator.
EvalReport cross_speaker_report(const std::vector<ScoredPair>& scored, const EvalConfig& cfg);

/// Pair counts at fixed dtw thresholds: total, correct, precision and
/// cross-speaker correct per threshold.
struct CountRow {
    double threshold = 0.0;
    std::size_t total = 0;
    std::size_t correct = 0;
    double precision = 0.0;
    std::size_t cross_speaker_correct = 0;
};
std::vector<CountRow> count_summary(const std::vector<ScoredPair>& scored, const std::vector<double>& thresholds);

struct SweepRow {
    double alpha = 0.0;
    double ap_all = 0.0;
    double ap_cross_speaker = 0.0;
};

/// Rescoring + evaluation per alpha; labels are computed once (they do not
/// depend on alpha).
std::vector<SweepRow> alpha_sweep(const std::vector<MatchPair>& pairs, const Corpus& c, const StopWordList& stops,
                                  const std::vector<double>& alphas, const EvalConfig& cfg);

// CSV: S,precision,recall,predicted,correct_predicted (ascending S).
void write_pr_csv(const std::filesystem::path& path, const EvalReport& report);
// CSV: alpha,ap_all,ap_cross_speaker.
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

/// Line-oriented key=value summary covering the full and cross-speaker
/// reports, count rows and the share of pairs with j >= 0.1.
void write_report_txt(const std::filesystem::path& path, const EvalReport& all, const EvalReport& cross,
                      const std::vector<CountRow>& counts, const std::vector<ScoredPair>& scored);

}  // namespace termscout
