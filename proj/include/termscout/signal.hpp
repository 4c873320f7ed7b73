#pragma once

#include <filesystem>
#include <map>
#include <utility>
#include <vector>

#include "termscout/corpus.hpp"

namespace termscout {

/// Half-open frame interval.
using FrameInterval = std::pair<int, int>;

/// Active-speech intervals of one utterance: non-overlapping, sorted,
/// non-empty, within [0, frames).
struct SpeechRegions {
    UtteranceId utterance;
    std::vector<FrameInterval> intervals;

    int total_frames() const;
    bool empty() const { return intervals.empty(); }
};

/// Frame-by-frame cosine similarity of two utterances, values in [-1, 1].
struct SimilarityMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> values;  // rows * cols

    float at(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }
};

/// M[i][j] = <a_i, b_j> / (|a_i| |b_j|); a zero-norm frame scores 0 against
/// everything. Throws on dimension mismatch.
SimilarityMatrix cosine_similarity_matrix(const FeatureMatrix& a, const FeatureMatrix& b);

struct VadConfig {
    double threshold_db = 30.0;   // below per-utterance peak energy
    double min_speech_s = 0.20;
    double min_gap_s = 0.30;
};

/// Energy gating relative to the utterance peak: frames strictly above
/// peak * 10^(-threshold_db/20) are speech, gaps shorter than min_gap_s are
/// bridged, then runs shorter than min_speech_s are dropped.
SpeechRegions rms_energy_vad(const std::vector<float>& energy, double threshold_db, double min_speech_s,
                             double min_gap_s, double frame_period_s);

/// Union of transcript word intervals widened by pad_s, as frame ranges
/// clamped to [0, max_frames).
SpeechRegions regions_from_alignment(const Transcript& t, double frame_period_s, double pad_s, int max_frames);

SpeechRegions full_span_regions(const UtteranceId& id, int frames);

struct RestrictedFeatures {
    FeatureMatrix features;   // region frames concatenated; frames may be 0
    std::vector<int> remap;   // compact frame index -> original frame index
};

/// Concatenates region frames; remap converts compact indices back to
/// original frame indices so discovered segments report true timestamps.
RestrictedFeatures restrict_to_regions(const FeatureMatrix& f, const SpeechRegions& r);

// TSV rows: utt_id<TAB>start_frame<TAB>end_frame
void save_regions(const std::filesystem::path& path, const std::map<UtteranceId, SpeechRegions>& regions);
std::map<UtteranceId, SpeechRegions> load_regions(const std::filesystem::path& path);

}  // namespace termscout
