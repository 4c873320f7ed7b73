#include "termscout/eval.hpp"

#include <algorithm>
#include <fstream>

namespace termscout {

std::set<std::string> words_overlapping_segment(const Transcript& t, const Segment& s, const StopWordList& stops) {
    std::set<std::string> out;
    for (const auto& w : t.words) {
        const double lo = std::max(w.start_s, s.start_s);
        const double hi = std::min(w.end_s, s.end_s);
        if (lo >= hi) continue;  // touching intervals have zero measure
        std::string low = to_lower_ascii(w.word);
        if (low.empty() || stops.words.count(low)) continue;
        out.insert(std::move(low));
    }
    return out;
}

bool label_pair(const MatchPair& p, const std::map<UtteranceId, Transcript>& transcripts,
                const StopWordList& stops) {
    static const Transcript kEmpty{};
    auto it1 = transcripts.find(p.seg1.utterance);
    auto it2 = transcripts.find(p.seg2.utterance);
    const auto w1 = words_overlapping_segment(it1 != transcripts.end() ? it1->second : kEmpty, p.seg1, stops);
    const auto w2 = words_overlapping_segment(it2 != transcripts.end() ? it2->second : kEmpty, p.seg2, stops);
    for (const auto& w : w1)
        if (w2.count(w)) return true;
    return false;
}

void label_all(std::vector<ScoredPair>& scored, const Corpus& c, const StopWordList& stops) {
    for (auto& sp : scored) sp.correct = label_pair(sp.pair, c.transcripts, stops);
}

namespace {

EvalReport curve_impl(std::vector<const ScoredPair*> view, const EvalConfig& cfg) {
    EvalReport rep;
    rep.total_pairs = view.size();

    std::size_t denom = 0;
    for (const auto* sp : view) {
        if (!sp->correct.has_value()) throw DataError("pr_curve: pair without a correctness label");
        if (*sp->correct && sp->pair.dtw >= cfg.base_dtw_threshold) ++denom;
    }
    rep.total_correct = denom;
    if (denom == 0) {
        rep.degenerate = true;
        rep.average_precision = 0.0;
        return rep;
    }

    std::sort(view.begin(), view.end(),
              [](const ScoredPair* a, const ScoredPair* b) { return scored_order(*a, *b); });

    double ap = 0.0;
    double prev_recall = 0.0;
    std::size_t predicted = 0, correct_predicted = 0;
    std::size_t i = 0;
    while (i < view.size()) {
        const double s = view[i]->score;
        // Pairs tied at the same score form one block.
        std::size_t j = i;
        while (j < view.size() && view[j]->score == s) {
            ++predicted;
            if (*view[j]->correct) ++correct_predicted;
            ++j;
        }
        PRPoint pt;
        pt.threshold = s;
        pt.predicted = predicted;
        pt.correct_predicted = correct_predicted;
        pt.precision = static_cast<double>(correct_predicted) / static_cast<double>(predicted);
        pt.recall = static_cast<double>(correct_predicted) / static_cast<double>(denom);
        ap += (pt.recall - prev_recall) * pt.precision;
        prev_recall = pt.recall;
        rep.points.push_back(pt);
        i = j;
    }
    rep.average_precision = ap;
    std::reverse(rep.points.begin(), rep.points.end());  // ascending threshold
    return rep;
}

}  // namespace

EvalReport pr_curve(const std::vector<ScoredPair>& scored, const EvalConfig& cfg) {
    std::vector<const ScoredPair*> view;
    view.reserve(scored.size());
    for (const auto& sp : scored) view.push_back(&sp);
    return curve_impl(std::move(view), cfg);
}

EvalReport cross_speaker_report(const std::vector<ScoredPair>& scored, const EvalConfig& cfg) {
    std::vector<const ScoredPair*> view;
    for (const auto& sp : scored)
        if (sp.cross_speaker) view.push_back(&sp);
    return curve_impl(std::move(view), cfg);
}

std::vector<CountRow> count_summary(const std::vector<ScoredPair>& scored, const std::vector<double>& thresholds) {
    std::vector<CountRow> rows;
    for (double t : thresholds) {
        CountRow r;
        r.threshold = t;
        for (const auto& sp : scored) {
            if (sp.pair.dtw < t) continue;
            ++r.total;
            if (sp.correct.value_or(false)) {
                ++r.correct;
                if (sp.cross_speaker) ++r.cross_speaker_correct;
            }
        }
        r.precision = r.total ? static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
        rows.push_back(r);
    }
    return rows;
}

std::vector<SweepRow> alpha_sweep(const std::vector<MatchPair>& pairs, const Corpus& c, const StopWordList& stops,
                                  const std::vector<double>& alphas, const EvalConfig& cfg) {
    // Labels depend only on the segments, so compute them once.
    std::map<std::pair<Segment, Segment>, bool> labels;
    for (const auto& p : pairs)
        labels.try_emplace({p.seg1, p.seg2}, label_pair(p, c.transcripts, stops));

    std::vector<SweepRow> rows;
    for (double alpha : alphas) {
        RescoreConfig rc;
        rc.alpha = alpha;
        auto scored = rescore_all(pairs, c, stops, rc);
        for (auto& sp : scored) sp.correct = labels.at({sp.pair.seg1, sp.pair.seg2});
        SweepRow row;
        row.alpha = alpha;
        row.ap_all = pr_curve(scored, cfg).average_precision;
        row.ap_cross_speaker = cross_speaker_report(scored, cfg).average_precision;
        rows.push_back(row);
    }
    return rows;
}

void write_pr_csv(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write PR curve: " + path.string());
    out << "S,precision,recall,predicted,correct_predicted\n";
    for (const auto& pt : report.points)
        out << fmt_g6(pt.threshold) << ',' << fmt_g6(pt.precision) << ',' << fmt_g6(pt.recall) << ','
            << pt.predicted << ',' << pt.correct_predicted << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write sweep: " + path.string());
    out << "alpha,ap_all,ap_cross_speaker\n";
    for (const auto& r : rows)
        out << fmt_g6(r.alpha) << ',' << fmt_g6(r.ap_all) << ',' << fmt_g6(r.ap_cross_speaker) << '\n';
}

void write_report_txt(const std::filesystem::path& path, const EvalReport& all, const EvalReport& cross,
                      const std::vector<CountRow>& counts, const std::vector<ScoredPair>& scored) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report: " + path.string());
    out << "total_pairs=" << all.total_pairs << '\n';
    out << "total_correct=" << all.total_correct << '\n';
    out << "average_precision=" << fmt_g6(all.average_precision) << '\n';
    out << "degenerate=" << (all.degenerate ? 1 : 0) << '\n';
    out << "cross_speaker_total_pairs=" << cross.total_pairs << '\n';
    out << "cross_speaker_total_correct=" << cross.total_correct << '\n';
    out << "cross_speaker_average_precision=" << fmt_g6(cross.average_precision) << '\n';
    out << "cross_speaker_degenerate=" << (cross.degenerate ? 1 : 0) << '\n';
    out << "cross_speaker_recall_denominator=subset\n";

    std::size_t j_hits = 0;
    for (const auto& sp : scored)
        if (sp.j >= 0.1) ++j_hits;
    out << "pairs_with_j_ge_0.1=" << j_hits << '\n';

    for (const auto& r : counts) {
        const std::string key = "counts@" + fmt_g6(r.threshold);
        out << key << ".total=" << r.total << '\n';
        out << key << ".correct=" << r.correct << '\n';
        out << key << ".precision=" << fmt_g6(r.precision) << '\n';
        out << key << ".cross_speaker_correct=" << r.cross_speaker_correct << '\n';
    }
}

}  // namespace termscout
