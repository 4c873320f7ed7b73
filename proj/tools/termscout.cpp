#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "termscout/corpus.hpp"
#include "termscout/discovery.hpp"
#include "termscout/eval.hpp"
#include "termscout/pipeline.hpp"
#include "termscout/rescore.hpp"
#include "termscout/signal.hpp"
#include "termscout/synth.hpp"

namespace fs = std::filesystem;
using namespace termscout;

namespace {

SynthConfig load_synth_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open synth config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed synth config " + path.string() + ": " + e.what());
    }
    SynthConfig cfg;
    try {
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("n_conversations")) cfg.n_conversations = j["n_conversations"].get<int>();
        if (j.contains("utterances_per_channel"))
            cfg.utterances_per_channel = j["utterances_per_channel"].get<int>();
        if (j.contains("vocab_size")) cfg.vocab_size = j["vocab_size"].get<int>();
        if (j.contains("word_len_frames")) {
            cfg.word_len_frames.first = j["word_len_frames"].at(0).get<int>();
            cfg.word_len_frames.second = j["word_len_frames"].at(1).get<int>();
        }
        if (j.contains("repeats_per_word")) {
            cfg.repeats_per_word.first = j["repeats_per_word"].at(0).get<int>();
            cfg.repeats_per_word.second = j["repeats_per_word"].at(1).get<int>();
        }
        if (j.contains("feature_dims")) cfg.feature_dims = j["feature_dims"].get<int>();
        if (j.contains("noise_sigma")) cfg.noise_sigma = j["noise_sigma"].get<double>();
        if (j.contains("silence_fraction")) cfg.silence_fraction = j["silence_fraction"].get<double>();
        if (j.contains("filler_rate")) cfg.filler_rate = j["filler_rate"].get<double>();
        if (j.contains("translation_fidelity")) cfg.translation_fidelity = j["translation_fidelity"].get<double>();
        if (j.contains("channel_distortion")) cfg.channel_distortion = j["channel_distortion"].get<double>();
        if (j.contains("quiet_word_fraction")) cfg.quiet_word_fraction = j["quiet_word_fraction"].get<double>();
        if (j.contains("confusable_fraction")) cfg.confusable_fraction = j["confusable_fraction"].get<double>();
        if (j.contains("confusion_sigma")) cfg.confusion_sigma = j["confusion_sigma"].get<double>();
        if (j.contains("frame_period_s")) cfg.frame_period_s = j["frame_period_s"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed synth config " + path.string() + ": " + e.what());
    }
    return cfg;
}

std::vector<double> parse_alpha_grid(const std::string& grid) {
    std::vector<double> alphas;
    if (grid.find(':') != std::string::npos) {
        auto parts = split(grid, ':');
        if (parts.size() != 3) throw DataError("alpha grid must be start:end:step, got '" + grid + "'");
        const double start = parse_double(parts[0], "alpha grid");
        const double end = parse_double(parts[1], "alpha grid");
        const double step = parse_double(parts[2], "alpha grid");
        if (step <= 0.0 || end < start) throw DataError("alpha grid must have step > 0 and end >= start");
        const int n = static_cast<int>(std::floor((end - start) / step + 1e-9));
        for (int k = 0; k <= n; ++k) alphas.push_back(start + k * step);
    } else {
        for (const auto& tok : split(grid, ','))
            if (!tok.empty()) alphas.push_back(parse_double(tok, "alpha list"));
    }
    if (alphas.empty()) throw DataError("alpha grid '" + grid + "' is empty");
    for (double a : alphas)
        if (a < 0.0 || a > 1.0) throw DataError("alpha values must lie in [0, 1]");
    return alphas;
}

StopWordList resolve_stops(const std::string& stops_flag, const fs::path& corpus_dir) {
    if (!stops_flag.empty()) return load_stop_words(stops_flag);
    if (fs::exists(corpus_dir / "stopwords.txt")) return load_stop_words(corpus_dir / "stopwords.txt");
    return {};
}

Corpus load_corpus_dir(const fs::path& dir, bool report = false) {
    LoadSummary summary;
    Corpus c = load_manifest(dir / "manifest.tsv", &summary);
    if (report)
        std::cout << "loaded " << summary.utterances << " utterances, " << summary.transcripts
                  << " transcripts, " << summary.translations << " translations\n";
    return c;
}

std::map<UtteranceId, SpeechRegions> make_regions(const Corpus& c, Preprocessing mode, const VadConfig& vad,
                                                  double pad_s) {
    std::map<UtteranceId, SpeechRegions> regions;
    for (const auto& [id, f] : c.features) {
        SpeechRegions r;
        switch (mode) {
            case Preprocessing::none:
                r = full_span_regions(id, f.frames);
                break;
            case Preprocessing::vad:
                if (!f.energy) throw DataError("utterance " + id.str() + " has no energy track, required for VAD");
                r = rms_energy_vad(*f.energy, vad.threshold_db, vad.min_speech_s, vad.min_gap_s, f.frame_period_s);
                r.utterance = id;
                break;
            case Preprocessing::alignment: {
                auto it = c.transcripts.find(id);
                if (it == c.transcripts.end())
                    throw DataError("alignment preprocessing requires a transcript for every utterance; missing " +
                                    id.str());
                r = regions_from_alignment(it->second, f.frame_period_s, pad_s, f.frames);
                break;
            }
        }
        regions.emplace(id, std::move(r));
    }
    return regions;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"termscout: repeated-term discovery in speech features with translation rescoring"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with planted repeated terms");
    std::string synth_out;
    std::string synth_config;
    std::uint64_t synth_seed = 0;
    bool synth_seed_given = false;
    synth_cmd->add_option("--out", synth_out, "Output corpus directory")->required();
    synth_cmd->add_option("--config", synth_config, "JSON config file (missing keys use defaults)");
    synth_cmd->add_option("--seed", synth_seed, "Override the config seed")->each([&](const std::string&) {
        synth_seed_given = true;
    });

    // discover
    auto* discover_cmd = app.add_subcommand("discover", "Find repeated segment pairs via two-pass DTW matching");
    std::string disc_corpus, disc_out;
    std::string disc_preproc = "none";
    DiscoveryConfig disc_cfg;
    double disc_min_dur_ms = 500.0;
    std::int64_t disc_subsample_seed = -1;
    int disc_workers = 0;
    VadConfig vad_cfg;
    double pad_s = 0.05;
    discover_cmd->add_option("--corpus", disc_corpus, "Corpus directory (manifest.tsv inside)")->required();
    discover_cmd->add_option("--out", disc_out, "Output pair TSV")->required();
    discover_cmd->add_option("--preproc", disc_preproc, "Preprocessing: vad, fa or none")
        ->check(CLI::IsMember({"vad", "fa", "none"}))
        ->capture_default_str();
    discover_cmd->add_option("--dtw-threshold", disc_cfg.dtw_threshold, "Keep pairs with DTW score >= this")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    discover_cmd->add_option("--min-dur-ms", disc_min_dur_ms, "Minimum segment duration in ms")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    discover_cmd->add_option("--quantile", disc_cfg.sim_binarize_quantile, "Similarity binarization quantile")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    discover_cmd->add_option("--min-diag-run", disc_cfg.min_diag_run, "Minimum diagonal run length in frames")
        ->capture_default_str();
    discover_cmd->add_option("--band", disc_cfg.band_halfwidth, "DTW band halfwidth in frames")
        ->capture_default_str();
    discover_cmd->add_option("--max-pairs", disc_cfg.max_pairs_per_utt_pair, "Candidate cap per utterance pair")
        ->capture_default_str();
    discover_cmd->add_option("--subsample-seed", disc_subsample_seed,
                             "Seed for sampled quantile estimation (-1 = exact quantile)")
        ->capture_default_str();
    discover_cmd->add_option("--workers", disc_workers, "Worker threads (0 = hardware parallelism)")
        ->capture_default_str();
    discover_cmd->add_option("--vad-threshold-db", vad_cfg.threshold_db, "VAD gate below peak energy, in dB")
        ->capture_default_str();
    discover_cmd->add_option("--vad-min-speech-s", vad_cfg.min_speech_s, "VAD minimum speech run, seconds")
        ->capture_default_str();
    discover_cmd->add_option("--vad-min-gap-s", vad_cfg.min_gap_s, "VAD gap bridging limit, seconds")
        ->capture_default_str();
    discover_cmd->add_option("--fa-pad-s", pad_s, "Alignment padding around words, seconds")
        ->capture_default_str();

    // rescore
    auto* rescore_cmd = app.add_subcommand("rescore", "Blend DTW scores with translation similarity");
    std::string resc_pairs, resc_corpus, resc_out, resc_stops;
    std::string resc_policy = "score_zero";
    double resc_alpha = 0.4;
    rescore_cmd->add_option("--pairs", resc_pairs, "Input pair TSV")->required();
    rescore_cmd->add_option("--corpus", resc_corpus, "Corpus directory")->required();
    rescore_cmd->add_option("--out", resc_out, "Output scored TSV")->required();
    rescore_cmd->add_option("--alpha", resc_alpha, "Weight of translation similarity")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    rescore_cmd->add_option("--stops", resc_stops, "Stop-word file (default: <corpus>/stopwords.txt if present)");
    rescore_cmd->add_option("--missing-policy", resc_policy, "Pairs lacking a translation: score_zero or drop_pair")
        ->check(CLI::IsMember({"score_zero", "drop_pair"}))
        ->capture_default_str();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Label scored pairs against transcripts and report PR/AP");
    std::string eval_scored, eval_corpus, eval_prefix, eval_stops;
    double eval_base = 0.80;
    eval_cmd->add_option("--scored", eval_scored, "Input scored TSV")->required();
    eval_cmd->add_option("--corpus", eval_corpus, "Corpus directory")->required();
    eval_cmd->add_option("--out-prefix", eval_prefix, "Prefix for <prefix>.pr_curve.csv etc.")->required();
    eval_cmd->add_option("--base-threshold", eval_base, "DTW threshold used at discovery time")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    eval_cmd->add_option("--stops", eval_stops, "Stop-word file (default: <corpus>/stopwords.txt if present)");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate a grid of alpha values");
    std::string sweep_pairs, sweep_corpus, sweep_out, sweep_stops;
    std::string sweep_alphas = "0:1:0.1";
    double sweep_base = 0.80;
    sweep_cmd->add_option("--pairs", sweep_pairs, "Input pair TSV")->required();
    sweep_cmd->add_option("--corpus", sweep_corpus, "Corpus directory")->required();
    sweep_cmd->add_option("--out", sweep_out, "Output sweep CSV")->required();
    sweep_cmd->add_option("--alphas", sweep_alphas, "Grid start:end:step or comma list")->capture_default_str();
    sweep_cmd->add_option("--base-threshold", sweep_base, "DTW threshold used at discovery time")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sweep_cmd->add_option("--stops", sweep_stops, "Stop-word file (default: <corpus>/stopwords.txt if present)");

    // run
    auto* run_cmd = app.add_subcommand("run", "Full pipeline: preprocess, discover, rescore, evaluate");
    RunOptions run_opts;
    std::string run_corpus, run_out, run_stops;
    std::string run_preproc = "none";
    double run_min_dur_ms = 500.0;
    run_cmd->add_option("--corpus", run_corpus, "Corpus directory")->required();
    run_cmd->add_option("--out", run_out, "Run output directory")->required();
    run_cmd->add_option("--preproc", run_preproc, "Preprocessing: vad, fa or none")
        ->check(CLI::IsMember({"vad", "fa", "none"}))
        ->capture_default_str();
    run_cmd->add_option("--dtw-threshold", run_opts.discovery.dtw_threshold, "Discovery DTW threshold")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    run_cmd->add_option("--min-dur-ms", run_min_dur_ms, "Minimum segment duration in ms")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run_cmd->add_option("--alpha", run_opts.rescore.alpha, "Weight of translation similarity")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    run_cmd->add_option("--stops", run_stops, "Stop-word file (default: <corpus>/stopwords.txt if present)");
    run_cmd->add_option("--workers", run_opts.workers, "Worker threads (0 = hardware parallelism)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth_cmd->parsed()) {
            SynthConfig cfg = synth_config.empty() ? SynthConfig{} : load_synth_config(synth_config);
            if (synth_seed_given) cfg.seed = synth_seed;
            const auto result = generate(cfg);
            write_synth_corpus(synth_out, result);
            std::cout << "wrote " << result.corpus.features.size() << " utterances, "
                      << result.truth.word_spans.size() << " word occurrences, "
                      << result.truth.planted_pairs.size() << " planted cross-utterance pairs to " << synth_out
                      << "\n";
        } else if (discover_cmd->parsed()) {
            disc_cfg.min_duration_s = disc_min_dur_ms / 1000.0;
            if (disc_subsample_seed >= 0) disc_cfg.subsample_seed = static_cast<std::uint64_t>(disc_subsample_seed);
            const Corpus c = load_corpus_dir(disc_corpus, true);
            const auto regions = make_regions(c, parse_preprocessing(disc_preproc), vad_cfg, pad_s);
            const auto pairs = discover_pairs(c, regions, disc_cfg, disc_workers);
            save_pairs(disc_out, pairs);
            std::cout << "wrote " << pairs.size() << " pairs to " << disc_out << "\n";
        } else if (rescore_cmd->parsed()) {
            const Corpus c = load_corpus_dir(resc_corpus);
            const StopWordList stops = resolve_stops(resc_stops, resc_corpus);
            RescoreConfig cfg;
            cfg.alpha = resc_alpha;
            cfg.missing_translation_policy = resc_policy == "drop_pair" ? MissingTranslationPolicy::drop_pair
                                                                        : MissingTranslationPolicy::score_zero;
            const auto scored = rescore_all(load_pairs(resc_pairs, c), c, stops, cfg);
            save_scored(resc_out, scored);
            std::cout << "wrote " << scored.size() << " scored pairs to " << resc_out << "\n";
        } else if (eval_cmd->parsed()) {
            const Corpus c = load_corpus_dir(eval_corpus);
            const StopWordList stops = resolve_stops(eval_stops, eval_corpus);
            auto scored = load_scored(eval_scored, c);
            label_all(scored, c, stops);
            EvalConfig cfg;
            cfg.base_dtw_threshold = eval_base;
            const EvalReport all = pr_curve(scored, cfg);
            const EvalReport cross = cross_speaker_report(scored, cfg);
            std::vector<double> count_thresholds = {eval_base};
            if (eval_base != 0.88) count_thresholds.push_back(0.88);
            write_pr_csv(eval_prefix + ".pr_curve.csv", all);
            write_pr_csv(eval_prefix + ".pr_curve_cross.csv", cross);
            write_report_txt(eval_prefix + ".report.txt", all, cross, count_summary(scored, count_thresholds),
                             scored);
            std::cout << "average_precision=" << fmt_g6(all.average_precision) << "\n";
            std::cout << "cross_speaker_average_precision=" << fmt_g6(cross.average_precision) << "\n";
        } else if (sweep_cmd->parsed()) {
            const Corpus c = load_corpus_dir(sweep_corpus);
            const StopWordList stops = resolve_stops(sweep_stops, sweep_corpus);
            const auto pairs = load_pairs(sweep_pairs, c);
            EvalConfig cfg;
            cfg.base_dtw_threshold = sweep_base;
            const auto rows = alpha_sweep(pairs, c, stops, parse_alpha_grid(sweep_alphas), cfg);
            write_sweep_csv(sweep_out, rows);
            for (const auto& r : rows)
                std::cout << "alpha=" << fmt_g6(r.alpha) << " ap_all=" << fmt_g6(r.ap_all)
                          << " ap_cross_speaker=" << fmt_g6(r.ap_cross_speaker) << "\n";
        } else if (run_cmd->parsed()) {
            run_opts.corpus_dir = run_corpus;
            run_opts.out_dir = run_out;
            run_opts.preprocessing = parse_preprocessing(run_preproc);
            run_opts.discovery.min_duration_s = run_min_dur_ms / 1000.0;
            if (!run_stops.empty()) run_opts.stops_path = run_stops;
            const RunResult result = run(run_opts);
            std::cout << "average_precision=" << fmt_g6(result.all.average_precision) << "\n";
            std::cout << "cross_speaker_average_precision=" << fmt_g6(result.cross.average_precision) << "\n";
            std::cout << "outputs in " << run_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
