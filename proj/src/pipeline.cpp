#include "termscout/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace termscout {

namespace {

namespace fs = std::filesystem;

std::string hash_str(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t hash_file(const fs::path& p, std::uint64_t seed) { return fnv1a(read_file_bytes(p), seed); }

std::uint64_t hash_corpus(const fs::path& corpus_dir, const std::optional<fs::path>& stops) {
    const fs::path manifest = corpus_dir / "manifest.tsv";
    std::uint64_t h = hash_file(manifest, fnv1a("corpus"));
    std::ifstream in(manifest);
    std::string line;
    while (std::getline(in, line)) {
        auto fields = split(strip_cr(line), '\t');
        if (fields.size() != 4) continue;
        fs::path fp = fields[3];
        if (fp.is_relative()) fp = corpus_dir / fp;
        if (fs::exists(fp)) h = hash_file(fp, h);
    }
    for (const char* side : {"transcripts.tsv", "translations.tsv"})
        if (fs::exists(corpus_dir / side)) h = hash_file(corpus_dir / side, h);
    if (stops && fs::exists(*stops)) h = hash_file(*stops, h);
    return h;
}

std::map<std::string, std::string> read_manifest_file(const fs::path& p) {
    std::map<std::string, std::string> kv;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        std::string_view sv = strip_cr(line);
        auto eq = sv.find('=');
        if (eq == std::string_view::npos) continue;
        kv.emplace(std::string(sv.substr(0, eq)), std::string(sv.substr(eq + 1)));
    }
    return kv;
}

std::optional<fs::path> shared_cache_dir() {
    const char* env = std::getenv("TERMSCOUT_CACHE_DIR");
    if (env == nullptr || *env == '\0') return std::nullopt;
    return fs::path(env);
}

/// Runs one stage with cache lookup: reuse the output file when the recorded
/// hash matches, otherwise produce <output>.partial and rename on success.
class StageRunner {
public:
    StageRunner(const fs::path& out_dir, std::map<std::string, std::string> previous)
        : out_dir_(out_dir), previous_(std::move(previous)), cache_(shared_cache_dir()) {}

    template <typename Fn>
    StageInfo run_stage(const std::string& name, std::uint64_t hash, const std::string& output, Fn&& produce) {
        StageInfo info;
        info.name = name;
        info.hash = hash_str(hash);
        info.output = output;
        const fs::path out_path = out_dir_ / output;

        const auto t0 = std::chrono::steady_clock::now();
        if (is_cached(name, info.hash, out_path)) {
            info.cached = true;
        } else if (cache_ && fetch_from_cache(info.hash, output, out_path)) {
            info.cached = true;
        } else {
            const fs::path partial = out_dir_ / (output + ".partial");
            try {
                produce(partial);
            } catch (const std::exception& e) {
                throw DataError("stage '" + name + "' failed: " + e.what());
            }
            fs::rename(partial, out_path);
            if (cache_) store_in_cache(info.hash, output, out_path);
        }
        info.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return info;
    }

private:
    bool is_cached(const std::string& name, const std::string& hash, const fs::path& out_path) const {
        auto it = previous_.find("stage." + name + ".hash");
        return it != previous_.end() && it->second == hash && fs::exists(out_path);
    }
    bool fetch_from_cache(const std::string& hash, const std::string& output, const fs::path& out_path) const {
        const fs::path entry = *cache_ / (hash + "." + output);
        if (!fs::exists(entry)) return false;
        fs::copy_file(entry, out_path, fs::copy_options::overwrite_existing);
        return true;
    }
    void store_in_cache(const std::string& hash, const std::string& output, const fs::path& out_path) const {
        fs::create_directories(*cache_);
        fs::copy_file(out_path, *cache_ / (hash + "." + output), fs::copy_options::overwrite_existing);
    }

    fs::path out_dir_;
    std::map<std::string, std::string> previous_;
    std::optional<fs::path> cache_;
};

std::string discovery_key(const DiscoveryConfig& d) {
    std::ostringstream os;
    os << d.dtw_threshold << '|' << d.min_duration_s << '|' << d.sim_binarize_quantile << '|' << d.min_diag_run
       << '|' << d.band_halfwidth << '|' << (d.subsample_seed ? std::to_string(*d.subsample_seed) : "-") << '|'
       << d.max_pairs_per_utt_pair;
    return os.str();
}

}  // namespace

std::string preprocessing_name(Preprocessing p) {
    switch (p) {
        case Preprocessing::none: return "none";
        case Preprocessing::vad: return "vad";
        case Preprocessing::alignment: return "fa";
    }
    return "none";
}

Preprocessing parse_preprocessing(const std::string& s) {
    if (s == "none") return Preprocessing::none;
    if (s == "vad") return Preprocessing::vad;
    if (s == "fa" || s == "alignment") return Preprocessing::alignment;
    throw DataError("unknown preprocessing mode '" + s + "' (expected vad, fa or none)");
}

bool RunManifest::all_cached() const {
    for (const auto& s : stages)
        if (!s.cached) return false;
    return !stages.empty();
}

RunResult run(const RunOptions& opts) {
    opts.discovery.validate();
    opts.rescore.validate();
    fs::create_directories(opts.out_dir);

    std::optional<fs::path> stops_path = opts.stops_path;
    if (!stops_path && fs::exists(opts.corpus_dir / "stopwords.txt"))
        stops_path = opts.corpus_dir / "stopwords.txt";

    LoadSummary summary;
    const Corpus corpus = load_manifest(opts.corpus_dir / "manifest.tsv", &summary);
    const StopWordList stops = stops_path ? load_stop_words(*stops_path) : StopWordList{};

    if (opts.preprocessing == Preprocessing::alignment)
        for (const auto& [id, _] : corpus.features)
            if (!corpus.transcripts.count(id))
                throw DataError("alignment preprocessing requires a transcript for every utterance; missing " +
                                id.str());

    RunResult result;
    RunManifest& manifest = result.manifest;
    manifest.tool_version = kToolVersion;
    const std::uint64_t corpus_hash = hash_corpus(opts.corpus_dir, stops_path);
    manifest.corpus_hash = hash_str(corpus_hash);

    StageRunner runner(opts.out_dir, read_manifest_file(opts.out_dir / "manifest.txt"));

    // Stage 1: speech regions.
    std::ostringstream pre_key;
    pre_key << "regions|" << preprocessing_name(opts.preprocessing);
    if (opts.preprocessing == Preprocessing::vad)
        pre_key << '|' << opts.vad.threshold_db << '|' << opts.vad.min_speech_s << '|' << opts.vad.min_gap_s;
    if (opts.preprocessing == Preprocessing::alignment) pre_key << '|' << opts.alignment_pad_s;
    const std::uint64_t regions_hash = fnv1a(pre_key.str(), corpus_hash);
    manifest.stages.push_back(runner.run_stage("regions", regions_hash, "regions.tsv", [&](const fs::path& out) {
        std::map<UtteranceId, SpeechRegions> regions;
        for (const auto& [id, f] : corpus.features) {
            SpeechRegions r;
            switch (opts.preprocessing) {
                case Preprocessing::none:
                    r = full_span_regions(id, f.frames);
                    break;
                case Preprocessing::vad:
                    if (!f.energy)
                        throw DataError("utterance " + id.str() + " has no energy track, required for VAD");
                    r = rms_energy_vad(*f.energy, opts.vad.threshold_db, opts.vad.min_speech_s,
                                       opts.vad.min_gap_s, f.frame_period_s);
                    r.utterance = id;
                    break;
                case Preprocessing::alignment: {
                    auto it = corpus.transcripts.find(id);
                    r = regions_from_alignment(it->second, f.frame_period_s, opts.alignment_pad_s, f.frames);
                    break;
                }
            }
            regions.emplace(id, std::move(r));
        }
        save_regions(out, regions);
    }));
    // The regions file has no rows for an utterance with no active speech;
    // seed explicit empty entries so such utterances are skipped rather than
    // searched full-span.
    std::map<UtteranceId, SpeechRegions> regions;
    for (const auto& [id, f] : corpus.features) regions[id].utterance = id;
    for (auto& [id, r] : load_regions(opts.out_dir / "regions.tsv")) regions[id] = std::move(r);
    for (const auto& [id, r] : regions) result.region_frames += r.total_frames();

    // Stage 2: discovery.
    const std::uint64_t pairs_hash = fnv1a("pairs|" + discovery_key(opts.discovery), regions_hash);
    manifest.stages.push_back(runner.run_stage("discover", pairs_hash, "pairs.tsv", [&](const fs::path& out) {
        save_pairs(out, discover_pairs(corpus, regions, opts.discovery, opts.workers));
    }));

    // Stage 3: rescoring. Consumes pairs.tsv as written so cached and fresh
    // runs see identical inputs.
    std::ostringstream resc_key;
    resc_key << "scored|" << opts.rescore.alpha << '|'
             << (opts.rescore.missing_translation_policy == MissingTranslationPolicy::drop_pair ? "drop" : "zero");
    const std::uint64_t scored_hash = fnv1a(resc_key.str(), pairs_hash);
    manifest.stages.push_back(runner.run_stage("rescore", scored_hash, "scored.tsv", [&](const fs::path& out) {
        const auto pairs = load_pairs(opts.out_dir / "pairs.tsv", corpus);
        save_scored(out, rescore_all(pairs, corpus, stops, opts.rescore));
    }));

    // Stage 4: evaluation. Recall base = the discovery threshold.
    EvalConfig eval_cfg;
    eval_cfg.base_dtw_threshold = opts.discovery.dtw_threshold;
    auto scored = load_scored(opts.out_dir / "scored.tsv", corpus);
    label_all(scored, corpus, stops);
    result.all = pr_curve(scored, eval_cfg);
    result.cross = cross_speaker_report(scored, eval_cfg);

    const std::uint64_t eval_hash = fnv1a("eval|" + fmt_g6(eval_cfg.base_dtw_threshold), scored_hash);
    manifest.stages.push_back(runner.run_stage("eval", eval_hash, "pr_curve.csv", [&](const fs::path& out) {
        write_pr_csv(out, result.all);
        write_pr_csv(opts.out_dir / "pr_curve_cross.csv", result.cross);
        std::vector<double> count_thresholds = {eval_cfg.base_dtw_threshold};
        if (eval_cfg.base_dtw_threshold != 0.88) count_thresholds.push_back(0.88);
        write_report_txt(opts.out_dir / "report.txt", result.all, result.cross,
                         count_summary(scored, count_thresholds), scored);
    }));

    std::ofstream mf(opts.out_dir / "manifest.txt");
    mf << "tool_version=" << manifest.tool_version << '\n';
    mf << "corpus=" << opts.corpus_dir.string() << '\n';
    mf << "corpus_hash=" << manifest.corpus_hash << '\n';
    mf << "preprocessing=" << preprocessing_name(opts.preprocessing) << '\n';
    for (const auto& s : manifest.stages) {
        mf << "stage." << s.name << ".hash=" << s.hash << '\n';
        mf << "stage." << s.name << ".cached=" << (s.cached ? 1 : 0) << '\n';
        mf << "stage." << s.name << ".wall_s=" << fmt_g6(s.wall_s) << '\n';
        mf << "stage." << s.name << ".output=" << s.output << '\n';
    }
    return result;
}

}  // namespace termscout
