#include "ttmc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace ttmc {

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    if (words_.empty()) throw std::invalid_argument("vocabulary must contain at least one token");
    index_.reserve(words_.size());
    for (int i = 0; i < static_cast<int>(words_.size()); ++i) {
        if (!index_.emplace(words_[i], i).second)
            throw std::invalid_argument("duplicate token in vocabulary: " + words_[i]);
    }
}

int Vocabulary::index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& w : words_) {
        for (unsigned char c : w) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= static_cast<unsigned char>('\n');
        h *= 1099511628211ULL;
    }
    return h;
}

long Corpus::total_tokens() const {
    long n = 0;
    for (const auto& d : docs) n += d.length();
    return n;
}

namespace {

struct RawDoc {
    std::int64_t t;
    std::vector<std::string> tokens;
};

[[noreturn]] void line_error(const std::string& path, std::size_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<RawDoc> parse_jsonl(const std::string& path, CorpusFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);

    std::vector<RawDoc> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            line_error(path, line_no, std::string("parse failure: ") + e.what());
        }
        if (!j.is_object() || !j.contains("t") || !j["t"].is_number_integer())
            line_error(path, line_no, "expected an object with integer field \"t\"");
        RawDoc d;
        d.t = j["t"].get<std::int64_t>();
        if (format == CorpusFormat::TokensJsonl) {
            if (!j.contains("tokens") || !j["tokens"].is_array())
                line_error(path, line_no, "missing \"tokens\" array");
            for (const auto& tok : j["tokens"]) {
                if (!tok.is_string()) line_error(path, line_no, "non-string token");
                d.tokens.push_back(tok.get<std::string>());
            }
        } else {
            if (!j.contains("counts") || !j["counts"].is_object())
                line_error(path, line_no, "missing \"counts\" object");
            for (const auto& [word, cnt] : j["counts"].items()) {
                if (!cnt.is_number_integer() || cnt.get<std::int64_t>() <= 0)
                    line_error(path, line_no, "count for \"" + word + "\" must be a positive integer");
                for (std::int64_t i = 0; i < cnt.get<std::int64_t>(); ++i) d.tokens.push_back(word);
            }
        }
        if (d.tokens.empty()) line_error(path, line_no, "empty document");
        raw.push_back(std::move(d));
    }
    if (raw.empty()) throw std::runtime_error("empty corpus: " + path);
    return raw;
}

}  // namespace

Corpus load_corpus(const std::string& path, CorpusFormat format,
                   std::shared_ptr<const Vocabulary> vocab) {
    std::vector<RawDoc> raw = parse_jsonl(path, format);

    std::stable_sort(raw.begin(), raw.end(),
                     [](const RawDoc& a, const RawDoc& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < raw.size(); ++i)
        if (raw[i].t == raw[i - 1].t)
            throw std::runtime_error(path + ": duplicate time_index " + std::to_string(raw[i].t));

    if (!vocab) {
        std::set<std::string> uniq;
        for (const auto& d : raw)
            for (const auto& tok : d.tokens) uniq.insert(tok);
        vocab = std::make_shared<Vocabulary>(std::vector<std::string>(uniq.begin(), uniq.end()));
    }

    Corpus corpus;
    corpus.vocab = vocab;
    corpus.docs.reserve(raw.size());
    for (const auto& d : raw) {
        Document doc;
        doc.time_index = d.t;
        doc.token_ids.reserve(d.tokens.size());
        for (const auto& tok : d.tokens) {
            const int id = vocab->index_of(tok);
            if (id < 0)
                throw std::runtime_error(path + ": token \"" + tok + "\" not in the supplied vocabulary");
            doc.token_ids.push_back(static_cast<std::uint32_t>(id));
        }
        corpus.docs.push_back(std::move(doc));
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path, CorpusFormat format) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& doc : corpus.docs) {
        json j;
        j["t"] = doc.time_index;
        if (format == CorpusFormat::TokensJsonl) {
            json arr = json::array();
            for (auto id : doc.token_ids) arr.push_back(corpus.vocab->word(static_cast<int>(id)));
            j["tokens"] = std::move(arr);
        } else {
            std::map<std::string, std::int64_t> counts;
            for (auto id : doc.token_ids) ++counts[corpus.vocab->word(static_cast<int>(id))];
            j["counts"] = counts;
        }
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write failure: " + path);
}

std::shared_ptr<const Vocabulary> load_vocabulary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) words.push_back(line);
    return std::make_shared<Vocabulary>(std::move(words));
}

SplitCorpus split_three_way(const Corpus& corpus, SplitScheme scheme) {
    const int t = corpus.num_docs();
    if (t < 3) throw std::invalid_argument("split_three_way requires at least 3 documents, got " + std::to_string(t));

    SplitCorpus split;
    split.scheme = scheme;
    split.w_tilde_1.vocab = split.w_tilde_2.vocab = split.w.vocab = corpus.vocab;

    for (int d = 0; d < t; ++d) {
        int part;  // 0: w_tilde_1, 1: w_tilde_2, 2: w
        if (scheme == SplitScheme::ThirdsInterleaved) {
            part = d % 3;
        } else {
            const int r = d % 4;
            part = (r == 1) ? 0 : (r == 3) ? 1 : 2;
        }
        switch (part) {
            case 0:
                split.w_tilde_1.docs.push_back(corpus.docs[d]);
                split.w1_positions.push_back(d);
                break;
            case 1:
                split.w_tilde_2.docs.push_back(corpus.docs[d]);
                split.w2_positions.push_back(d);
                break;
            default:
                split.w.docs.push_back(corpus.docs[d]);
                split.w_positions.push_back(d);
        }
    }
    return split;
}

}  // namespace ttmc
