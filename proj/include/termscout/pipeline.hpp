#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "termscout/discovery.hpp"
#include "termscout/eval.hpp"
#include "termscout/rescore.hpp"
#include "termscout/signal.hpp"
#include "termscout/synth.hpp"

namespace termscout {

inline constexpr const char* kToolVersion = "termscout 0.1.0";

enum class Preprocessing { none, vad, alignment };

std::string preprocessing_name(Preprocessing p);
Preprocessing parse_preprocessing(const std::string& s);

struct RunOptions {
    std::filesystem::path corpus_dir;
    std::filesystem::path out_dir;
    Preprocessing preprocessing = Preprocessing::none;
    DiscoveryConfig discovery;
    RescoreConfig rescore;
    VadConfig vad;
    double alignment_pad_s = 0.05;
    // Default: <corpus_dir>/stopwords.txt when present, else no stop words.
    std::optional<std::filesystem::path> stops_path;
    int workers = 0;
};

struct StageInfo {
    std::string name;
    std::string hash;
    bool cached = false;
    double wall_s = 0.0;
    std::string output;
};

struct RunManifest {
    std::string tool_version;
    std::string corpus_hash;
    std::vector<StageInfo> stages;

    bool all_cached() const;
};

struct RunResult {
    EvalReport all;
    EvalReport cross;
    RunManifest manifest;
    std::size_t region_frames = 0;  // total active-speech frames after preprocessing
};

/// Executes preprocess -> discover -> rescore -> evaluate, persisting every
/// stage artifact under out_dir (regions.tsv, pairs.tsv, scored.tsv,
/// pr_curve.csv, pr_curve_cross.csv, report.txt, manifest.txt). Stages hand
/// off through their files, so cached and fresh runs produce identical bytes.
/// A stage is skipped when its recorded hash matches and its output exists;
/// TERMSCOUT_CACHE_DIR adds a shared cache keyed by stage hash. The recall
/// base threshold is the discovery threshold by construction.
RunResult run(const RunOptions& opts);

}  // namespace termscout
