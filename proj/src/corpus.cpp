#include "termscout/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace termscout {

namespace {

bool is_ascii_punct(char c) {
    static const std::string puncts = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
    return puncts.find(c) != std::string::npos;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

void write_le(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
T read_le(std::ifstream& in, const std::string& path, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("feature file " + path + ": truncated while reading " + what);
    return v;
}

}  // namespace

std::string UtteranceId::str() const {
    return conversation + "_" + std::to_string(channel) + "_" + std::to_string(index);
}

UtteranceId UtteranceId::parse(std::string_view s) {
    // Conversation names may themselves contain '_'; split on the last two.
    std::size_t last = s.rfind('_');
    if (last == std::string_view::npos || last == 0)
        throw DataError("malformed utterance id '" + std::string(s) + "'");
    std::size_t mid = s.rfind('_', last - 1);
    if (mid == std::string_view::npos || mid == 0)
        throw DataError("malformed utterance id '" + std::string(s) + "'");
    UtteranceId id;
    id.conversation = std::string(s.substr(0, mid));
    id.channel = static_cast<int>(parse_long(s.substr(mid + 1, last - mid - 1), "utterance id '" + std::string(s) + "'"));
    id.index = static_cast<int>(parse_long(s.substr(last + 1), "utterance id '" + std::string(s) + "'"));
    if (id.channel < 0 || id.index < 0)
        throw DataError("malformed utterance id '" + std::string(s) + "': negative channel or index");
    return id;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (is_space(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else if (!is_ascii_punct(c)) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            current.push_back(c);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::set<std::string> content_words(const std::vector<std::string>& tokens, const StopWordList& stops) {
    std::set<std::string> out;
    for (const auto& t : tokens) {
        std::string low = to_lower_ascii(t);
        if (low.empty()) continue;
        if (stops.words.count(low)) continue;
        out.insert(std::move(low));
    }
    return out;
}

StopWordList load_stop_words(const std::filesystem::path& path, const std::string& language) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open stop-word file: " + path.string());
    StopWordList list;
    list.language = language.empty() ? path.stem().string() : language;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view sv = strip_cr(line);
        while (!sv.empty() && is_space(sv.back())) sv.remove_suffix(1);
        while (!sv.empty() && is_space(sv.front())) sv.remove_prefix(1);
        if (sv.empty()) continue;
        list.words.insert(to_lower_ascii(sv));
    }
    return list;
}

FeatureMatrix read_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open feature file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FMX1", 4) != 0)
        throw DataError("feature file " + path.string() + ": bad magic, expected FMX1");

    FeatureMatrix m;
    auto frames = read_le<std::uint32_t>(in, path.string(), "frame count");
    auto dims = read_le<std::uint32_t>(in, path.string(), "dim count");
    m.frame_period_s = read_le<double>(in, path.string(), "frame period");
    auto has_energy = read_le<std::uint8_t>(in, path.string(), "energy flag");
    if (frames == 0 || dims == 0)
        throw DataError("feature file " + path.string() + ": frames and dims must be >= 1");
    if (!(m.frame_period_s > 0.0))
        throw DataError("feature file " + path.string() + ": frame period must be positive");
    if (has_energy > 1)
        throw DataError("feature file " + path.string() + ": energy flag must be 0 or 1");

    m.frames = static_cast<int>(frames);
    m.dims = static_cast<int>(dims);
    m.values.resize(static_cast<std::size_t>(frames) * dims);
    in.read(reinterpret_cast<char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(float)));
    if (!in) throw DataError("feature file " + path.string() + ": truncated value block");
    if (has_energy) {
        std::vector<float> e(frames);
        in.read(reinterpret_cast<char*>(e.data()), static_cast<std::streamsize>(e.size() * sizeof(float)));
        if (!in) throw DataError("feature file " + path.string() + ": truncated energy block");
        m.energy = std::move(e);
    }
    in.peek();
    if (!in.eof()) throw DataError("feature file " + path.string() + ": trailing bytes after data");

    for (float v : m.values)
        if (!std::isfinite(v)) throw DataError("feature file " + path.string() + ": non-finite value");
    if (m.energy)
        for (float v : *m.energy)
            if (!std::isfinite(v) || v < 0.0f)
                throw DataError("feature file " + path.string() + ": energy must be finite and >= 0");
    return m;
}

void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& m) {
    if (m.frames < 1 || m.dims < 1) throw DataError("feature matrix must have frames >= 1 and dims >= 1");
    if (m.values.size() != static_cast<std::size_t>(m.frames) * m.dims)
        throw DataError("feature matrix value count does not match frames x dims");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write feature file: " + path.string());
    out.write("FMX1", 4);
    std::uint32_t frames = static_cast<std::uint32_t>(m.frames);
    std::uint32_t dims = static_cast<std::uint32_t>(m.dims);
    std::uint8_t has_energy = m.energy ? 1 : 0;
    write_le(out, &frames, 4);
    write_le(out, &dims, 4);
    write_le(out, &m.frame_period_s, 8);
    write_le(out, &has_energy, 1);
    write_le(out, m.values.data(), m.values.size() * sizeof(float));
    if (m.energy) {
        if (m.energy->size() != static_cast<std::size_t>(m.frames))
            throw DataError("energy vector length does not match frame count");
        write_le(out, m.energy->data(), m.energy->size() * sizeof(float));
    }
    if (!out) throw DataError("failed writing feature file: " + path.string());
}

Corpus load_manifest(const std::filesystem::path& manifest_path, LoadSummary* summary) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest: " + manifest_path.string());
    const auto base = manifest_path.parent_path();

    Corpus c;
    LoadSummary local;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        auto fields = split(sv, '\t');
        const std::string where = manifest_path.string() + ":" + std::to_string(lineno);
        if (fields.size() != 4)
            throw DataError("malformed manifest row at " + where + ": expected 4 tab-separated fields");
        UtteranceId id = UtteranceId::parse(fields[0]);
        if (id.conversation != fields[1] || id.channel != parse_long(fields[2], where))
            throw DataError("manifest row at " + where + ": id '" + fields[0] +
                            "' disagrees with conversation/channel columns");
        if (c.features.count(id))
            throw DataError("duplicate utterance id '" + id.str() + "' at " + where);

        std::filesystem::path fpath = fields[3];
        if (fpath.is_relative()) fpath = base / fpath;
        if (!std::filesystem::exists(fpath))
            throw DataError("missing feature file for utterance '" + id.str() + "': " + fpath.string());
        c.features.emplace(id, read_feature_file(fpath));
        c.feature_paths.emplace(id, fields[3]);
    }
    local.utterances = c.features.size();

    const auto tr_path = base / "transcripts.tsv";
    if (std::filesystem::exists(tr_path)) load_transcripts_file(tr_path, c, &local);
    const auto tl_path = base / "translations.tsv";
    if (std::filesystem::exists(tl_path)) load_translations_file(tl_path, c, &local);

    for (const auto& [id, _] : c.features) {
        if (!c.transcripts.count(id)) local.warnings.push_back("no transcript for utterance " + id.str());
        if (!c.translations.count(id)) local.warnings.push_back("no translation for utterance " + id.str());
    }
    if (summary) *summary = std::move(local);
    return c;
}

void load_transcripts_file(const std::filesystem::path& path, Corpus& c, LoadSummary* summary) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open transcript file: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        auto fields = split(sv, '\t');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (fields.size() != 4)
            throw DataError("malformed transcript row at " + where + ": expected 4 tab-separated fields");
        UtteranceId id = UtteranceId::parse(fields[0]);
        if (!c.features.count(id))
            throw DataError("transcript row at " + where + " references unknown utterance '" + id.str() + "'");
        TimedWord w;
        w.word = fields[1];
        w.start_s = parse_double(fields[2], where);
        w.end_s = parse_double(fields[3], where);
        if (!(w.start_s >= 0.0 && w.start_s < w.end_s))
            throw DataError("transcript row at " + where + ": need 0 <= start < end");
        auto& t = c.transcripts[id];
        t.utterance = id;
        t.words.push_back(std::move(w));
    }
    for (auto& [id, t] : c.transcripts)
        std::stable_sort(t.words.begin(), t.words.end(),
                         [](const TimedWord& a, const TimedWord& b) { return a.start_s < b.start_s; });
    if (summary) summary->transcripts = c.transcripts.size();
}

void load_translations_file(const std::filesystem::path& path, Corpus& c, LoadSummary* summary) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open translation file: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        std::size_t tab = sv.find('\t');
        if (tab == std::string_view::npos)
            throw DataError("malformed translation row at " + where + ": expected utt_id<TAB>text");
        UtteranceId id = UtteranceId::parse(sv.substr(0, tab));
        if (!c.features.count(id))
            throw DataError("translation row at " + where + " references unknown utterance '" + id.str() + "'");
        if (c.translations.count(id))
            throw DataError("duplicate translation for utterance '" + id.str() + "' at " + where);
        Translation t;
        t.utterance = id;
        t.tokens = tokenize(sv.substr(tab + 1));
        c.translations.emplace(id, std::move(t));
    }
    if (summary) summary->translations = c.translations.size();
}

void save_corpus(const std::filesystem::path& dir, const Corpus& c) {
    std::filesystem::create_directories(dir / "features");
    std::ofstream manifest(dir / "manifest.tsv");
    if (!manifest) throw DataError("cannot write manifest in " + dir.string());
    for (const auto& [id, m] : c.features) {
        std::string rel = "features/" + id.str() + ".fmx";
        auto it = c.feature_paths.find(id);
        if (it != c.feature_paths.end() && std::filesystem::path(it->second).is_relative()) rel = it->second;
        write_feature_file(dir / rel, m);
        manifest << id.str() << '\t' << id.conversation << '\t' << id.channel << '\t' << rel << '\n';
    }
    manifest.close();

    if (!c.transcripts.empty()) {
        std::ofstream out(dir / "transcripts.tsv");
        for (const auto& [id, t] : c.transcripts)
            for (const auto& w : t.words)
                out << id.str() << '\t' << w.word << '\t' << fmt_sec(w.start_s) << '\t' << fmt_sec(w.end_s) << '\n';
    }
    if (!c.translations.empty()) {
        std::ofstream out(dir / "translations.tsv");
        for (const auto& [id, t] : c.translations) {
            out << id.str() << '\t';
            for (std::size_t i = 0; i < t.tokens.size(); ++i) {
                if (i) out << ' ';
                out << t.tokens[i];
            }
            out << '\n';
        }
    }
}

}  // namespace termscout
