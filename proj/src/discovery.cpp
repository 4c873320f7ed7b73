#include "termscout/discovery.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

namespace termscout {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool canonical_less(const MatchPair& x, const MatchPair& y) {
    if (x.seg1 != y.seg1) return x.seg1 < y.seg1;
    if (x.seg2 != y.seg2) return x.seg2 < y.seg2;
    return x.dtw < y.dtw;
}

bool score_order(const MatchPair& x, const MatchPair& y) {
    if (x.dtw != y.dtw) return x.dtw > y.dtw;
    return canonical_less(x, y);
}

double frame_iou(const Segment& x, const Segment& y) {
    int inter = std::min(x.end_frame, y.end_frame) - std::max(x.start_frame, y.start_frame);
    if (inter <= 0) return 0.0;
    int uni = (x.end_frame - x.start_frame) + (y.end_frame - y.start_frame) - inter;
    return static_cast<double>(inter) / uni;
}

/// Two matches on the same utterance pair are duplicates when both segment
/// IoUs exceed 0.5; the higher-scoring one wins.
std::vector<MatchPair> suppress_duplicates(std::vector<MatchPair> pairs) {
    std::sort(pairs.begin(), pairs.end(), score_order);
    std::vector<MatchPair> kept;
    for (const auto& p : pairs) {
        bool dup = false;
        for (const auto& k : kept) {
            if (frame_iou(p.seg1, k.seg1) > 0.5 && frame_iou(p.seg2, k.seg2) > 0.5) {
                dup = true;
                break;
            }
        }
        if (!dup) kept.push_back(p);
    }
    return kept;
}

std::vector<double> row_norms(const FeatureMatrix& f, int lo, int hi) {
    std::vector<double> norms(hi - lo);
    for (int i = lo; i < hi; ++i) {
        const float* r = f.row(i);
        double s = 0.0;
        for (int d = 0; d < f.dims; ++d) s += static_cast<double>(r[d]) * r[d];
        norms[i - lo] = std::sqrt(s);
    }
    return norms;
}

}  // namespace

void DiscoveryConfig::validate() const {
    if (!(dtw_threshold > 0.0 && dtw_threshold < 1.0))
        throw DataError("discovery config: dtw_threshold must be in (0, 1)");
    if (!(min_duration_s > 0.0)) throw DataError("discovery config: min_duration_s must be positive");
    if (!(sim_binarize_quantile > 0.0 && sim_binarize_quantile < 1.0))
        throw DataError("discovery config: sim_binarize_quantile must be in (0, 1)");
    if (min_diag_run < 1) throw DataError("discovery config: min_diag_run must be >= 1");
    if (band_halfwidth < 0) throw DataError("discovery config: band_halfwidth must be >= 0");
    if (max_pairs_per_utt_pair < 1) throw DataError("discovery config: max_pairs_per_utt_pair must be >= 1");
}

Segment make_segment(const UtteranceId& id, int start_frame, int end_frame, double frame_period_s) {
    Segment s;
    s.utterance = id;
    s.start_frame = start_frame;
    s.end_frame = end_frame;
    s.start_s = start_frame * frame_period_s;
    s.end_s = end_frame * frame_period_s;
    return s;
}

float binarize_threshold(const SimilarityMatrix& m, const DiscoveryConfig& cfg) {
    const std::size_t n = m.values.size();
    if (n == 0) return 0.0f;
    const double q = cfg.sim_binarize_quantile;

    if (cfg.subsample_seed) {
        // Approximate the quantile from a fixed-size sample instead of
        // ranking the full matrix.
        constexpr std::size_t kSample = 20000;
        std::mt19937_64 rng(*cfg.subsample_seed);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<float> sample(std::min(n, kSample));
        for (auto& s : sample) s = m.values[pick(rng)];
        std::size_t k = static_cast<std::size_t>(q * (sample.size() - 1));
        std::nth_element(sample.begin(), sample.begin() + k, sample.end());
        return sample[k];
    }

    std::vector<float> copy(m.values);
    std::size_t k = static_cast<std::size_t>(q * (n - 1));
    std::nth_element(copy.begin(), copy.begin() + k, copy.end());
    return copy[k];
}

std::vector<DiagonalRun> find_candidate_diagonals(const SimilarityMatrix& m, const DiscoveryConfig& cfg) {
    return find_candidate_diagonals(m, cfg, binarize_threshold(m, cfg));
}

std::vector<DiagonalRun> find_candidate_diagonals(const SimilarityMatrix& m, const DiscoveryConfig& cfg,
                                                  float threshold) {
    std::vector<DiagonalRun> runs;
    if (m.rows == 0 || m.cols == 0) return runs;

    for (int d = -(m.rows - 1); d <= m.cols - 1; ++d) {
        int first = -1, last = -1;
        auto close_run = [&]() {
            if (first >= 0 && last - first + 1 >= cfg.min_diag_run)
                runs.push_back({first, first + d, last - first + 1});
        };
        const int i_begin = std::max(0, -d);
        const int i_end = std::min(m.rows, m.cols - d);
        for (int i = i_begin; i < i_end; ++i) {
            if (m.at(i, i + d) > threshold) {
                if (first < 0) {
                    first = last = i;
                } else if (i - last <= 2) {  // tolerate a single off cell
                    last = i;
                } else {
                    close_run();
                    first = last = i;
                }
            }
        }
        close_run();
    }

    std::sort(runs.begin(), runs.end(), [](const DiagonalRun& a, const DiagonalRun& b) {
        if (a.length != b.length) return a.length > b.length;
        if (a.i0 != b.i0) return a.i0 < b.i0;
        return a.j0 < b.j0;
    });
    if (static_cast<int>(runs.size()) > cfg.max_pairs_per_utt_pair)
        runs.resize(cfg.max_pairs_per_utt_pair);
    return runs;
}

std::optional<RefinedMatch> dtw_refine(const FeatureMatrix& a, const FeatureMatrix& b, const DiagonalRun& run,
                                       float trim_threshold, const DiscoveryConfig& cfg) {
    if (a.dims != b.dims) throw DataError("dtw_refine: dimension mismatch");
    if (run.i0 < 0 || run.j0 < 0 || run.length < 1 || run.i0 + run.length > a.frames ||
        run.j0 + run.length > b.frames)
        throw DataError("dtw_refine: run does not lie within both matrices");

    const int band = cfg.band_halfwidth;
    const int ilo = std::max(0, run.i0 - band);
    const int ihi = std::min(a.frames, run.i0 + run.length + band);
    const int jlo = std::max(0, run.j0 - band);
    const int jhi = std::min(b.frames, run.j0 + run.length + band);
    const int na = ihi - ilo;
    const int nb = jhi - jlo;
    if (na < 2 || nb < 2) return std::nullopt;

    const auto norm_a = row_norms(a, ilo, ihi);
    const auto norm_b = row_norms(b, jlo, jhi);
    const int dims = a.dims;
    auto local_cost = [&](int li, int lj) {
        if (norm_a[li] == 0.0 || norm_b[lj] == 0.0) return 1.0;  // cosine 0
        const float* ra = a.row(ilo + li);
        const float* rb = b.row(jlo + lj);
        double dot = 0.0;
        for (int d = 0; d < dims; ++d) dot += static_cast<double>(ra[d]) * rb[d];
        return 1.0 - dot / (norm_a[li] * norm_b[lj]);
    };
    // Cells outside the band around the run's diagonal are unreachable.
    const int diag = run.j0 - run.i0;
    auto in_band = [&](int li, int lj) { return std::abs((jlo + lj) - (ilo + li) - diag) <= band; };

    const std::size_t ncells = static_cast<std::size_t>(na) * nb;
    std::vector<double> cost(ncells, kInf);
    std::vector<int> cells(ncells, 0);
    std::vector<std::uint8_t> from(ncells, 0);  // 1 diag, 2 up, 3 left
    auto idx = [&](int li, int lj) { return static_cast<std::size_t>(li) * nb + lj; };

    for (int li = 0; li < na; ++li) {
        for (int lj = 0; lj < nb; ++lj) {
            if (!in_band(li, lj)) continue;
            const double lc = local_cost(li, lj);
            const std::size_t k = idx(li, lj);
            if (li == 0 && lj == 0) {
                cost[k] = lc;
                cells[k] = 1;
                continue;
            }
            // Lexicographic minimum over (total cost, path cells) keeps the
            // normalized score well-defined under cost ties.
            double best_c = kInf;
            int best_n = 0;
            std::uint8_t best_f = 0;
            auto consider = [&](int pi, int pj, std::uint8_t f) {
                if (pi < 0 || pj < 0) return;
                const std::size_t pk = idx(pi, pj);
                if (cost[pk] == kInf) return;
                if (cost[pk] < best_c || (cost[pk] == best_c && cells[pk] < best_n)) {
                    best_c = cost[pk];
                    best_n = cells[pk];
                    best_f = f;
                }
            };
            consider(li - 1, lj - 1, 1);
            consider(li - 1, lj, 2);
            consider(li, lj - 1, 3);
            if (best_f == 0) continue;  // unreachable
            cost[k] = best_c + lc;
            cells[k] = best_n + 1;
            from[k] = best_f;
        }
    }

    if (cost[idx(na - 1, nb - 1)] == kInf) return std::nullopt;

    // Walk the optimal path back to the origin.
    struct PathCell {
        int li, lj;
        double cost;
    };
    std::vector<PathCell> path;
    {
        int li = na - 1, lj = nb - 1;
        while (true) {
            path.push_back({li, lj, local_cost(li, lj)});
            const std::uint8_t f = from[idx(li, lj)];
            if (f == 0) break;
            if (f == 1) {
                --li;
                --lj;
            } else if (f == 2) {
                --li;
            } else {
                --lj;
            }
        }
        std::reverse(path.begin(), path.end());
    }

    // Keep the longest contiguous stretch of path cells whose cosine stays at
    // or above the binarization threshold; leading and trailing low-similarity
    // cells (the band extension beyond the true match) fall away.
    std::size_t lo = 0, hi = 0;
    for (std::size_t k = 0; k < path.size();) {
        if (1.0 - path[k].cost < trim_threshold) {
            ++k;
            continue;
        }
        const std::size_t start = k;
        while (k < path.size() && 1.0 - path[k].cost >= trim_threshold) ++k;
        if (k - start > hi - lo) {
            lo = start;
            hi = k;
        }
    }
    if (lo == hi) return std::nullopt;

    double total = 0.0;
    int a_min = na, a_max = -1, b_min = nb, b_max = -1;
    for (std::size_t k = lo; k < hi; ++k) {
        total += path[k].cost;
        a_min = std::min(a_min, path[k].li);
        a_max = std::max(a_max, path[k].li);
        b_min = std::min(b_min, path[k].lj);
        b_max = std::max(b_max, path[k].lj);
    }

    RefinedMatch m;
    m.a_start = ilo + a_min;
    m.a_end = ilo + a_max + 1;
    m.b_start = jlo + b_min;
    m.b_end = jlo + b_max + 1;
    m.score = std::clamp(1.0 - total / static_cast<double>(hi - lo), 0.0, 1.0);

    if ((m.a_end - m.a_start) * a.frame_period_s + 1e-9 < cfg.min_duration_s) return std::nullopt;
    if ((m.b_end - m.b_start) * b.frame_period_s + 1e-9 < cfg.min_duration_s) return std::nullopt;
    return m;
}

std::vector<MatchPair> discover_pairs(const Corpus& c, const std::map<UtteranceId, SpeechRegions>& regions,
                                      const DiscoveryConfig& cfg, int workers) {
    cfg.validate();

    std::vector<UtteranceId> ids;
    ids.reserve(c.features.size());
    for (const auto& [id, _] : c.features) ids.push_back(id);  // map order = canonical order

    std::vector<RestrictedFeatures> compact(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& f = c.features.at(ids[i]);
        auto it = regions.find(ids[i]);
        compact[i] = restrict_to_regions(f, it != regions.end() ? it->second : full_span_regions(ids[i], f.frames));
    }

    std::vector<std::pair<std::size_t, std::size_t>> todo;
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j)
            if (compact[i].features.frames > 0 && compact[j].features.frames > 0) todo.emplace_back(i, j);

    auto process = [&](std::size_t i, std::size_t j) {
        const auto& A = compact[i];
        const auto& B = compact[j];
        const SimilarityMatrix m = cosine_similarity_matrix(A.features, B.features);
        const float tau = binarize_threshold(m, cfg);
        std::vector<MatchPair> found;
        for (const auto& run : find_candidate_diagonals(m, cfg, tau)) {
            auto r = dtw_refine(A.features, B.features, run, tau, cfg);
            if (!r) continue;
            MatchPair p;
            p.seg1 = make_segment(ids[i], A.remap[r->a_start], A.remap[r->a_end - 1] + 1,
                                  A.features.frame_period_s);
            p.seg2 = make_segment(ids[j], B.remap[r->b_start], B.remap[r->b_end - 1] + 1,
                                  B.features.frame_period_s);
            p.dtw = r->score;
            found.push_back(p);
        }
        // Suppress duplicates before the score filter so raising the
        // threshold can only drop pairs, never expose new ones.
        found = suppress_duplicates(std::move(found));
        std::erase_if(found, [&](const MatchPair& p) { return p.dtw < cfg.dtw_threshold; });
        return found;
    };

    std::vector<std::vector<MatchPair>> results(todo.size());
    int nthreads = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    nthreads = std::max(1, std::min<int>(nthreads, static_cast<int>(todo.size())));
    if (nthreads <= 1) {
        for (std::size_t k = 0; k < todo.size(); ++k) results[k] = process(todo[k].first, todo[k].second);
    } else {
        std::atomic<std::size_t> next{0};
        auto body = [&]() {
            while (true) {
                const std::size_t k = next.fetch_add(1);
                if (k >= todo.size()) break;
                results[k] = process(todo[k].first, todo[k].second);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }

    std::vector<MatchPair> all;
    for (auto& r : results) all.insert(all.end(), r.begin(), r.end());
    std::sort(all.begin(), all.end(), score_order);
    return all;
}

void save_pairs(const std::filesystem::path& path, const std::vector<MatchPair>& pairs) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write pair file: " + path.string());
    for (const auto& p : pairs) {
        out << p.seg1.utterance.str() << '\t' << fmt_sec(p.seg1.start_s) << '\t' << fmt_sec(p.seg1.end_s) << '\t'
            << p.seg2.utterance.str() << '\t' << fmt_sec(p.seg2.start_s) << '\t' << fmt_sec(p.seg2.end_s) << '\t'
            << fmt_g6(p.dtw) << '\n';
    }
}

std::vector<MatchPair> load_pairs(const std::filesystem::path& path, const Corpus& c) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pair file: " + path.string());
    std::vector<MatchPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        auto fields = split(sv, '\t');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (fields.size() != 7) throw DataError("malformed pair row at " + where + ": expected 7 fields");

        auto read_segment = [&](const std::string& utt, const std::string& s0, const std::string& s1) {
            UtteranceId id = UtteranceId::parse(utt);
            auto it = c.features.find(id);
            if (it == c.features.end())
                throw DataError("pair row at " + where + " references unknown utterance '" + id.str() + "'");
            const double fp = it->second.frame_period_s;
            const double start_s = parse_double(s0, where);
            const double end_s = parse_double(s1, where);
            if (!(start_s >= 0.0 && start_s < end_s))
                throw DataError("pair row at " + where + ": need 0 <= start < end");
            // Snap to the frame grid; timestamps are rederived from frames so
            // a save/load cycle is exact.
            return make_segment(id, static_cast<int>(std::llround(start_s / fp)),
                                static_cast<int>(std::llround(end_s / fp)), fp);
        };

        MatchPair p;
        p.seg1 = read_segment(fields[0], fields[1], fields[2]);
        p.seg2 = read_segment(fields[3], fields[4], fields[5]);
        p.dtw = parse_double(fields[6], where);
        if (!(p.dtw >= 0.0 && p.dtw <= 1.0))
            throw DataError("pair row at " + where + ": dtw score must be in [0, 1]");
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace termscout
