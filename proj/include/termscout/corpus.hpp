#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "termscout/util.hpp"

namespace termscout {

/// One utterance = one channel-side of one conversation, indexed within the
/// channel. Serialized as "<conversation>_<channel>_<index>".
struct UtteranceId {
    std::string conversation;
    int channel = 0;
    int index = 0;

    auto operator<=>(const UtteranceId&) const = default;

    std::string str() const;
    static UtteranceId parse(std::string_view s);
};

/// Speaker identity: one speaker per channel side of a conversation.
using Speaker = std::pair<std::string, int>;

inline Speaker speaker_of(const UtteranceId& id) { return {id.conversation, id.channel}; }

/// Per-utterance acoustic features, frames x dims row-major, with optional
/// per-frame RMS energy.
struct FeatureMatrix {
    int frames = 0;
    int dims = 0;
    std::vector<float> values;  // frames * dims
    double frame_period_s = 0.010;
    std::optional<std::vector<float>> energy;

    const float* row(int i) const { return values.data() + static_cast<std::size_t>(i) * dims; }
    double duration_s() const { return frames * frame_period_s; }
};

struct TimedWord {
    std::string word;
    double start_s = 0.0;
    double end_s = 0.0;
};

struct Transcript {
    UtteranceId utterance;
    std::vector<TimedWord> words;  // sorted by start_s
};

struct Translation {
    UtteranceId utterance;
    std::vector<std::string> tokens;  // lowercased, punctuation-stripped
};

struct StopWordList {
    std::set<std::string> words;  // stored lowercased
    std::string language;

    bool contains(std::string_view token) const { return words.count(to_lower_ascii(token)) > 0; }
};

struct Corpus {
    std::map<UtteranceId, FeatureMatrix> features;
    std::map<UtteranceId, Transcript> transcripts;
    std::map<UtteranceId, Translation> translations;
    std::map<UtteranceId, std::string> feature_paths;  // as listed in the manifest
};

struct LoadSummary {
    std::size_t utterances = 0;
    std::size_t transcripts = 0;
    std::size_t translations = 0;
    std::vector<std::string> warnings;
};

/// Lowercases, strips ASCII punctuation and splits on whitespace.
/// Punctuation characters are removed, so "don't" becomes "dont".
std::vector<std::string> tokenize(std::string_view text);

/// Deduplicated lowercased tokens that are not stop words.
std::set<std::string> content_words(const std::vector<std::string>& tokens, const StopWordList& stops);

StopWordList load_stop_words(const std::filesystem::path& path, const std::string& language = "");

// Feature file format "FMX1": u32 frames, u32 dims, f64 frame_period_s,
// u8 has_energy; then frames*dims f32 row-major, then frames f32 energies.
// Little-endian throughout.
FeatureMatrix read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& m);

/// Loads a manifest plus sibling transcripts.tsv / translations.tsv when
/// present. Feature paths resolve relative to the manifest's directory.
Corpus load_manifest(const std::filesystem::path& manifest_path, LoadSummary* summary = nullptr);

void load_transcripts_file(const std::filesystem::path& path, Corpus& c, LoadSummary* summary = nullptr);
void load_translations_file(const std::filesystem::path& path, Corpus& c, LoadSummary* summary = nullptr);

/// Writes manifest.tsv, features/*.fmx and, when non-empty, transcripts.tsv
/// and translations.tsv under dir.
void save_corpus(const std::filesystem::path& dir, const Corpus& c);

}  // namespace termscout
