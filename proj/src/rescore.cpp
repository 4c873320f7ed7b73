#include "termscout/rescore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace termscout {

void RescoreConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DataError("rescore config: alpha must be in [0, 1]");
}

double jaccard(const std::set<std::string>& e1, const std::set<std::string>& e2) {
    if (e1.empty() && e2.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& w : e1) inter += e2.count(w);
    const std::size_t uni = e1.size() + e2.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double blend(double dtw, double j, double alpha) { return (1.0 - alpha) * dtw + alpha * j; }

bool scored_order(const ScoredPair& x, const ScoredPair& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.pair.dtw != y.pair.dtw) return x.pair.dtw > y.pair.dtw;
    if (x.pair.seg1 != y.pair.seg1) return x.pair.seg1 < y.pair.seg1;
    return x.pair.seg2 < y.pair.seg2;
}

std::vector<ScoredPair> rescore_all(const std::vector<MatchPair>& pairs, const Corpus& c,
                                    const StopWordList& stops, const RescoreConfig& cfg) {
    cfg.validate();

    // Content-word sets are shared across pairs of the same utterance.
    std::map<UtteranceId, std::set<std::string>> words;
    auto content_of = [&](const UtteranceId& id) -> const std::set<std::string>* {
        auto it = c.translations.find(id);
        if (it == c.translations.end()) return nullptr;
        auto [wit, inserted] = words.try_emplace(id);
        if (inserted) wit->second = content_words(it->second.tokens, stops);
        return &wit->second;
    };

    std::vector<ScoredPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        for (const auto* seg : {&p.seg1, &p.seg2})
            if (!c.features.count(seg->utterance))
                throw DataError("pair " + p.seg1.utterance.str() + " / " + p.seg2.utterance.str() +
                                " references unknown utterance '" + seg->utterance.str() + "'");

        const auto* e1 = content_of(p.seg1.utterance);
        const auto* e2 = content_of(p.seg2.utterance);
        ScoredPair sp;
        sp.pair = p;
        sp.cross_speaker = speaker_of(p.seg1.utterance) != speaker_of(p.seg2.utterance);
        if (e1 == nullptr || e2 == nullptr) {
            if (cfg.missing_translation_policy == MissingTranslationPolicy::drop_pair) continue;
            sp.j = 0.0;
        } else {
            sp.j = jaccard(*e1, *e2);
        }
        sp.score = blend(p.dtw, sp.j, cfg.alpha);
        out.push_back(std::move(sp));
    }

    std::sort(out.begin(), out.end(), scored_order);
    return out;
}

void save_scored(const std::filesystem::path& path, const std::vector<ScoredPair>& scored) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write scored pair file: " + path.string());
    for (const auto& sp : scored) {
        const auto& p = sp.pair;
        out << p.seg1.utterance.str() << '\t' << fmt_sec(p.seg1.start_s) << '\t' << fmt_sec(p.seg1.end_s) << '\t'
            << p.seg2.utterance.str() << '\t' << fmt_sec(p.seg2.start_s) << '\t' << fmt_sec(p.seg2.end_s) << '\t'
            << fmt_g6(p.dtw) << '\t' << fmt_g6(sp.j) << '\t' << fmt_g6(sp.score) << '\t'
            << (sp.cross_speaker ? 1 : 0) << '\n';
    }
}

std::vector<ScoredPair> load_scored(const std::filesystem::path& path, const Corpus& c) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open scored pair file: " + path.string());
    std::vector<ScoredPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        auto fields = split(sv, '\t');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (fields.size() != 10) throw DataError("malformed scored row at " + where + ": expected 10 fields");

        auto read_segment = [&](const std::string& utt, const std::string& s0, const std::string& s1) {
            UtteranceId id = UtteranceId::parse(utt);
            auto it = c.features.find(id);
            if (it == c.features.end())
                throw DataError("scored row at " + where + " references unknown utterance '" + id.str() + "'");
            const double fp = it->second.frame_period_s;
            // Snap to the frame grid, as load_pairs does.
            return make_segment(id, static_cast<int>(std::llround(parse_double(s0, where) / fp)),
                                static_cast<int>(std::llround(parse_double(s1, where) / fp)), fp);
        };

        ScoredPair sp;
        sp.pair.seg1 = read_segment(fields[0], fields[1], fields[2]);
        sp.pair.seg2 = read_segment(fields[3], fields[4], fields[5]);
        sp.pair.dtw = parse_double(fields[6], where);
        sp.j = parse_double(fields[7], where);
        sp.score = parse_double(fields[8], where);
        sp.cross_speaker = parse_long(fields[9], where) != 0;
        out.push_back(std::move(sp));
    }
    return out;
}

}  // namespace termscout
