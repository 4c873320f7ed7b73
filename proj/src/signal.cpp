#include "termscout/signal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace termscout {

int SpeechRegions::total_frames() const {
    int n = 0;
    for (const auto& [s, e] : intervals) n += e - s;
    return n;
}

SimilarityMatrix cosine_similarity_matrix(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.dims != b.dims)
        throw DataError("cosine similarity: dimension mismatch (" + std::to_string(a.dims) + " vs " +
                        std::to_string(b.dims) + ")");
    SimilarityMatrix m;
    m.rows = a.frames;
    m.cols = b.frames;
    m.values.assign(static_cast<std::size_t>(a.frames) * b.frames, 0.0f);

    std::vector<double> norm_a(a.frames), norm_b(b.frames);
    for (int i = 0; i < a.frames; ++i) {
        const float* ra = a.row(i);
        double s = 0.0;
        for (int d = 0; d < a.dims; ++d) s += static_cast<double>(ra[d]) * ra[d];
        norm_a[i] = std::sqrt(s);
    }
    for (int j = 0; j < b.frames; ++j) {
        const float* rb = b.row(j);
        double s = 0.0;
        for (int d = 0; d < b.dims; ++d) s += static_cast<double>(rb[d]) * rb[d];
        norm_b[j] = std::sqrt(s);
    }

    const int dims = a.dims;
    for (int i = 0; i < a.frames; ++i) {
        const float* ra = a.row(i);
        float* out = m.values.data() + static_cast<std::size_t>(i) * b.frames;
        if (norm_a[i] == 0.0) continue;
        for (int j = 0; j < b.frames; ++j) {
            if (norm_b[j] == 0.0) continue;
            const float* rb = b.row(j);
            double dot = 0.0;
            for (int d = 0; d < dims; ++d) dot += static_cast<double>(ra[d]) * rb[d];
            out[j] = static_cast<float>(dot / (norm_a[i] * norm_b[j]));
        }
    }
    return m;
}

SpeechRegions rms_energy_vad(const std::vector<float>& energy, double threshold_db, double min_speech_s,
                             double min_gap_s, double frame_period_s) {
    SpeechRegions out;
    if (energy.empty()) return out;

    double peak = 0.0;
    for (float e : energy) peak = std::max(peak, static_cast<double>(e));
    const double threshold = peak * std::pow(10.0, -threshold_db / 20.0);

    // Raw speech runs: frames strictly above the relative threshold.
    std::vector<FrameInterval> runs;
    int start = -1;
    for (int i = 0; i < static_cast<int>(energy.size()); ++i) {
        bool speech = energy[i] > threshold;
        if (speech && start < 0) start = i;
        if (!speech && start >= 0) {
            runs.emplace_back(start, i);
            start = -1;
        }
    }
    if (start >= 0) runs.emplace_back(start, static_cast<int>(energy.size()));

    // Bridge gaps shorter than min_gap_s.
    std::vector<FrameInterval> bridged;
    for (const auto& r : runs) {
        if (!bridged.empty() && (r.first - bridged.back().second) * frame_period_s < min_gap_s)
            bridged.back().second = r.second;
        else
            bridged.push_back(r);
    }

    // Drop surviving runs shorter than min_speech_s.
    for (const auto& r : bridged)
        if ((r.second - r.first) * frame_period_s >= min_speech_s) out.intervals.push_back(r);
    return out;
}

SpeechRegions regions_from_alignment(const Transcript& t, double frame_period_s, double pad_s, int max_frames) {
    SpeechRegions out;
    out.utterance = t.utterance;
    if (t.words.empty() || max_frames <= 0) return out;

    std::vector<std::pair<double, double>> spans;
    for (const auto& w : t.words)
        spans.emplace_back(std::max(0.0, w.start_s - pad_s), w.end_s + pad_s);
    std::sort(spans.begin(), spans.end());

    std::vector<std::pair<double, double>> merged;
    for (const auto& s : spans) {
        if (!merged.empty() && s.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, s.second);
        else
            merged.push_back(s);
    }

    for (const auto& [s0, s1] : merged) {
        int f0 = static_cast<int>(std::floor(s0 / frame_period_s + 1e-6));
        int f1 = static_cast<int>(std::ceil(s1 / frame_period_s - 1e-6));
        f0 = std::clamp(f0, 0, max_frames);
        f1 = std::clamp(f1, 0, max_frames);
        if (f1 <= f0) continue;
        if (!out.intervals.empty() && f0 <= out.intervals.back().second)
            out.intervals.back().second = std::max(out.intervals.back().second, f1);
        else
            out.intervals.emplace_back(f0, f1);
    }
    return out;
}

SpeechRegions full_span_regions(const UtteranceId& id, int frames) {
    SpeechRegions r;
    r.utterance = id;
    if (frames > 0) r.intervals.emplace_back(0, frames);
    return r;
}

RestrictedFeatures restrict_to_regions(const FeatureMatrix& f, const SpeechRegions& r) {
    RestrictedFeatures out;
    out.features.dims = f.dims;
    out.features.frame_period_s = f.frame_period_s;
    if (f.energy) out.features.energy.emplace();

    for (const auto& [s, e] : r.intervals) {
        if (s < 0 || e > f.frames || s >= e)
            throw DataError("speech region [" + std::to_string(s) + "," + std::to_string(e) +
                            ") invalid for utterance with " + std::to_string(f.frames) + " frames");
        for (int i = s; i < e; ++i) {
            out.remap.push_back(i);
            const float* row = f.row(i);
            out.features.values.insert(out.features.values.end(), row, row + f.dims);
            if (f.energy) out.features.energy->push_back((*f.energy)[i]);
        }
    }
    out.features.frames = static_cast<int>(out.remap.size());
    return out;
}

void save_regions(const std::filesystem::path& path, const std::map<UtteranceId, SpeechRegions>& regions) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write regions file: " + path.string());
    for (const auto& [id, r] : regions)
        for (const auto& [s, e] : r.intervals) out << id.str() << '\t' << s << '\t' << e << '\n';
}

std::map<UtteranceId, SpeechRegions> load_regions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open regions file: " + path.string());
    std::map<UtteranceId, SpeechRegions> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        auto fields = split(sv, '\t');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (fields.size() != 3) throw DataError("malformed regions row at " + where);
        UtteranceId id = UtteranceId::parse(fields[0]);
        auto& r = out[id];
        r.utterance = id;
        r.intervals.emplace_back(static_cast<int>(parse_long(fields[1], where)),
                                 static_cast<int>(parse_long(fields[2], where)));
    }
    return out;
}

}  // namespace termscout
