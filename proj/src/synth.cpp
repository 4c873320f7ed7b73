#include "termscout/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace termscout {

namespace {

const std::vector<std::string> kFillerStops = {"the", "of", "to", "a", "and"};

struct Template {
    int len = 0;
    std::vector<float> values;  // len x dims
};

std::string pseudo_word(std::mt19937_64& rng, std::set<std::string>& used) {
    static const std::string consonants = "bdfgklmnprstvz";
    static const std::string vowels = "aeiou";
    std::uniform_int_distribution<int> n_syll(2, 3);
    std::uniform_int_distribution<std::size_t> c(0, consonants.size() - 1);
    std::uniform_int_distribution<std::size_t> v(0, vowels.size() - 1);
    while (true) {
        std::string w;
        const int n = n_syll(rng);
        for (int s = 0; s < n; ++s) {
            w.push_back(consonants[c(rng)]);
            w.push_back(vowels[v(rng)]);
        }
        if (used.count(w)) continue;
        if (std::find(kFillerStops.begin(), kFillerStops.end(), w) != kFillerStops.end()) continue;
        used.insert(w);
        return w;
    }
}

Template make_template(std::mt19937_64& rng, int len, int dims) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Template t;
    t.len = len;
    t.values.resize(static_cast<std::size_t>(len) * dims);
    for (auto& v : t.values) v = static_cast<float>(gauss(rng));
    return t;
}

/// Dense per-channel distortion I + gamma * G with G entries N(0, 1/dims).
std::vector<double> make_distortion(std::mt19937_64& rng, int dims, double gamma) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> m(static_cast<std::size_t>(dims) * dims);
    const double scale = gamma / std::sqrt(static_cast<double>(dims));
    for (int r = 0; r < dims; ++r)
        for (int c = 0; c < dims; ++c)
            m[static_cast<std::size_t>(r) * dims + c] = (r == c ? 1.0 : 0.0) + scale * gauss(rng);
    return m;
}

struct Item {
    bool filler = false;
    int id = 0;  // word id, or filler index when filler
    bool quiet = false;
};

}  // namespace

void SynthConfig::validate() const {
    if (n_conversations < 1 || utterances_per_channel < 1 || vocab_size < 1 || feature_dims < 1)
        throw DataError("synth config: counts must be >= 1");
    if (word_len_frames.first < 2 || word_len_frames.first > word_len_frames.second)
        throw DataError("synth config: word_len_frames range is infeasible");
    if (repeats_per_word.first < 1 || repeats_per_word.first > repeats_per_word.second)
        throw DataError("synth config: repeats_per_word range is infeasible");
    if (noise_sigma < 0.0 || channel_distortion < 0.0 || confusion_sigma < 0.0)
        throw DataError("synth config: noise and distortion must be >= 0");
    for (double f : {silence_fraction, filler_rate, translation_fidelity, quiet_word_fraction,
                     confusable_fraction})
        if (f < 0.0 || f > 1.0) throw DataError("synth config: fractions must lie in [0, 1]");
    if (!(frame_period_s > 0.0)) throw DataError("synth config: frame period must be positive");
}

SynthResult generate(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SynthResult out;
    GroundTruth& gt = out.truth;
    gt.stop_tokens.insert(kFillerStops.begin(), kFillerStops.end());

    // Vocabulary and filler templates with a bilingual lexicon. Filler ids
    // are negative; they never reach transcripts and translate to stop words.
    std::set<std::string> used_tokens(kFillerStops.begin(), kFillerStops.end());
    std::uniform_int_distribution<int> word_len(cfg.word_len_frames.first, cfg.word_len_frames.second);
    std::map<int, Template> templates;
    for (int w = 0; w < cfg.vocab_size; ++w) {
        if (w > 0 && unit(rng) < cfg.confusable_fraction) {
            // An acoustically confusable clone of an earlier word: nearly the
            // same sound, a different identity and translation.
            std::uniform_int_distribution<int> pick(0, w - 1);
            Template clone = templates.at(pick(rng));
            for (auto& v : clone.values) v += static_cast<float>(cfg.confusion_sigma * gauss(rng));
            templates[w] = std::move(clone);
        } else {
            templates[w] = make_template(rng, word_len(rng), cfg.feature_dims);
        }
        LexiconEntry entry;
        entry.source = pseudo_word(rng, used_tokens);
        entry.targets.push_back(pseudo_word(rng, used_tokens));
        if (unit(rng) < 0.2) entry.targets.push_back(pseudo_word(rng, used_tokens));
        gt.lexicon[w] = std::move(entry);
    }
    constexpr int kFillers = 2;
    for (int f = 0; f < kFillers; ++f)
        templates[-1 - f] = make_template(rng, word_len(rng), cfg.feature_dims);

    // One speaker per channel: a fixed distortion applied to everything the
    // channel emits.
    const int n_utts = cfg.n_conversations * 2 * cfg.utterances_per_channel;
    std::vector<UtteranceId> ids;
    std::map<Speaker, std::vector<double>> distortions;
    for (int conv = 0; conv < cfg.n_conversations; ++conv) {
        char name[16];
        std::snprintf(name, sizeof(name), "c%03d", conv);
        for (int ch = 0; ch < 2; ++ch) {
            distortions[{name, ch}] = make_distortion(rng, cfg.feature_dims, cfg.channel_distortion);
            for (int idx = 0; idx < cfg.utterances_per_channel; ++idx)
                ids.push_back({name, ch, idx});
        }
    }

    // Deal word occurrences across utterances.
    std::uniform_int_distribution<int> repeat_count(cfg.repeats_per_word.first, cfg.repeats_per_word.second);
    std::vector<int> pool;
    for (int w = 0; w < cfg.vocab_size; ++w) {
        const int r = repeat_count(rng);
        for (int k = 0; k < r; ++k) pool.push_back(w);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::vector<Item>> items(n_utts);
    for (std::size_t k = 0; k < pool.size(); ++k)
        items[k % n_utts].push_back({false, pool[k], unit(rng) < cfg.quiet_word_fraction});

    std::uniform_int_distribution<int> filler_pick(0, kFillers - 1);
    std::uniform_int_distribution<int> silence_len(35, 75);
    std::uniform_int_distribution<std::size_t> target_pick(0, cfg.vocab_size - 1);

    for (int u = 0; u < n_utts; ++u) {
        const UtteranceId& id = ids[u];
        const auto& distort = distortions.at(speaker_of(id));

        // Insert fillers between, before and after the word occurrences.
        std::vector<Item> seq;
        const auto& words = items[u];
        for (std::size_t s = 0; s <= words.size(); ++s) {
            if (unit(rng) < cfg.filler_rate) seq.push_back({true, filler_pick(rng), false});
            if (s < words.size()) seq.push_back(words[s]);
        }
        if (seq.empty()) seq.push_back({true, filler_pick(rng), false});

        int speech_frames = 0;
        for (const auto& it : seq) speech_frames += templates.at(it.filler ? -1 - it.id : it.id).len;

        // Silence chunks sized so the utterance hits silence_fraction, spread
        // over random slots (slot 0 = leading silence).
        std::vector<int> slot_silence(seq.size() + 1, 0);
        if (cfg.silence_fraction > 0.0) {
            int remaining = static_cast<int>(
                std::lround(speech_frames * cfg.silence_fraction / (1.0 - cfg.silence_fraction)));
            std::uniform_int_distribution<std::size_t> slot_pick(0, slot_silence.size() - 1);
            while (remaining > 0) {
                const int chunk = std::min(remaining, silence_len(rng));
                slot_silence[slot_pick(rng)] += chunk;
                remaining -= chunk;
            }
        }

        FeatureMatrix fm;
        fm.dims = cfg.feature_dims;
        fm.frame_period_s = cfg.frame_period_s;
        fm.energy.emplace();
        Transcript tr;
        tr.utterance = id;
        std::vector<std::string> translation;

        std::vector<double> frame(cfg.feature_dims);
        auto emit_silence = [&](int n) {
            for (int k = 0; k < n; ++k) {
                for (int d = 0; d < cfg.feature_dims; ++d)
                    fm.values.push_back(static_cast<float>(0.01 * gauss(rng)));
                fm.energy->push_back(static_cast<float>(0.002 * (1.0 + 0.2 * std::abs(gauss(rng)))));
            }
        };
        auto emit_item = [&](const Item& it) {
            const int tid = it.filler ? -1 - it.id : it.id;
            const Template& tpl = templates.at(tid);
            const int start_frame = static_cast<int>(fm.energy->size());
            const double base_energy = it.filler ? 1.15 : (it.quiet ? 0.02 : 1.0);
            // Token-level variability: each occurrence is spoken more or less
            // cleanly, spreading match scores over a wide range.
            const double sigma = cfg.noise_sigma * (0.4 + 1.4 * unit(rng));
            for (int t = 0; t < tpl.len; ++t) {
                const float* row = tpl.values.data() + static_cast<std::size_t>(t) * cfg.feature_dims;
                for (int d = 0; d < cfg.feature_dims; ++d)
                    frame[d] = row[d] + sigma * gauss(rng);
                for (int r = 0; r < cfg.feature_dims; ++r) {
                    const double* mrow = distort.data() + static_cast<std::size_t>(r) * cfg.feature_dims;
                    double acc = 0.0;
                    for (int d = 0; d < cfg.feature_dims; ++d) acc += mrow[d] * frame[d];
                    fm.values.push_back(static_cast<float>(acc));
                }
                fm.energy->push_back(static_cast<float>(base_energy * (1.0 + 0.1 * std::abs(gauss(rng)))));
            }
            const int end_frame = start_frame + tpl.len;
            PlantedSpan span;
            span.word_id = tid;
            span.utterance = id;
            span.start_frame = start_frame;
            span.end_frame = end_frame;
            span.start_s = start_frame * cfg.frame_period_s;
            span.end_s = end_frame * cfg.frame_period_s;
            span.quiet = it.quiet;
            if (it.filler) {
                gt.filler_spans.push_back(span);
                translation.push_back(kFillerStops[static_cast<std::size_t>(it.id) % kFillerStops.size()]);
            } else {
                gt.word_spans.push_back(span);
                tr.words.push_back({gt.lexicon.at(tid).source, span.start_s, span.end_s});
                // Translation noise: drop or substitute with 1 - fidelity.
                if (unit(rng) < cfg.translation_fidelity) {
                    for (const auto& t : gt.lexicon.at(tid).targets) translation.push_back(t);
                } else if (unit(rng) < 0.5) {
                    translation.push_back(gt.lexicon.at(static_cast<int>(target_pick(rng))).targets.front());
                }
            }
        };

        for (std::size_t s = 0; s < seq.size(); ++s) {
            emit_silence(slot_silence[s]);
            emit_item(seq[s]);
        }
        emit_silence(slot_silence[seq.size()]);

        fm.frames = static_cast<int>(fm.energy->size());
        out.corpus.features.emplace(id, std::move(fm));
        if (!tr.words.empty()) out.corpus.transcripts.emplace(id, std::move(tr));
        Translation tl;
        tl.utterance = id;
        tl.tokens = std::move(translation);
        out.corpus.translations.emplace(id, std::move(tl));
    }

    // Cross-utterance occurrence pairs of the same word, canonically ordered.
    std::map<int, std::vector<const PlantedSpan*>> by_word;
    for (const auto& s : gt.word_spans) by_word[s.word_id].push_back(&s);
    for (const auto& [w, spans] : by_word) {
        for (std::size_t i = 0; i < spans.size(); ++i) {
            for (std::size_t j = i + 1; j < spans.size(); ++j) {
                const PlantedSpan* a = spans[i];
                const PlantedSpan* b = spans[j];
                if (a->utterance == b->utterance) continue;
                if (b->utterance < a->utterance) std::swap(a, b);
                gt.planted_pairs.push_back({*a, *b, w});
            }
        }
    }
    return out;
}

void write_synth_corpus(const std::filesystem::path& dir, const SynthResult& result) {
    std::filesystem::create_directories(dir);
    save_corpus(dir, result.corpus);

    std::ofstream gt(dir / "ground_truth.tsv");
    if (!gt) throw DataError("cannot write ground truth in " + dir.string());
    for (const auto& s : result.truth.word_spans)
        gt << s.word_id << '\t' << s.utterance.str() << '\t' << fmt_sec(s.start_s) << '\t' << fmt_sec(s.end_s)
           << '\n';

    std::ofstream stops(dir / "stopwords.txt");
    if (!stops) throw DataError("cannot write stop words in " + dir.string());
    for (const auto& w : result.truth.stop_tokens) stops << w << '\n';
}

TruthScore score_against_truth(const std::vector<MatchPair>& pairs, const GroundTruth& gt, double iou_min) {
    auto sec_iou = [](double a0, double a1, double b0, double b1) {
        const double inter = std::min(a1, b1) - std::max(a0, b0);
        if (inter <= 0.0) return 0.0;
        return inter / ((a1 - a0) + (b1 - b0) - inter);
    };
    auto matches = [&](const MatchPair& p, const PlantedPair& t) {
        auto side = [&](const Segment& s, const PlantedSpan& span) {
            return s.utterance == span.utterance &&
                   sec_iou(s.start_s, s.end_s, span.start_s, span.end_s) >= iou_min;
        };
        return (side(p.seg1, t.a) && side(p.seg2, t.b)) || (side(p.seg1, t.b) && side(p.seg2, t.a));
    };

    TruthScore score;
    score.planted = gt.planted_pairs.size();
    score.output_pairs = pairs.size();
    std::vector<bool> matched_output(pairs.size(), false);
    for (const auto& t : gt.planted_pairs) {
        bool recovered = false;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (matches(pairs[i], t)) {
                matched_output[i] = true;
                recovered = true;
            }
        }
        if (recovered) ++score.recovered;
    }
    for (bool m : matched_output)
        if (m) ++score.matched_output_pairs;
    score.recall = score.planted ? static_cast<double>(score.recovered) / score.planted : 0.0;
    score.precision = score.output_pairs ? static_cast<double>(score.matched_output_pairs) / score.output_pairs : 0.0;
    return score;
}

}  // namespace termscout
