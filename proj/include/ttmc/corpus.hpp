#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace ttmc {

// Ordered set of unique tokens. Token index is stable for the lifetime
// of the object; induced vocabularies are sorted lexicographically.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> words);

    int size() const { return static_cast<int>(words_.size()); }
    const std::string& word(int id) const { return words_[id]; }
    const std::vector<std::string>& words() const { return words_; }

    // -1 when the token is unknown.
    int index_of(const std::string& token) const;

    // FNV-1a over the word list; used to bind persisted models to the
    // vocabulary they were trained on.
    std::uint64_t hash() const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

struct Document {
    std::int64_t time_index = 0;
    std::vector<std::uint32_t> token_ids;  // multiset, in arrival order

    int length() const { return static_cast<int>(token_ids.size()); }
};

// Time-ordered bag-of-words corpus over a shared vocabulary.
struct Corpus {
    std::shared_ptr<const Vocabulary> vocab;
    std::vector<Document> docs;  // strictly increasing time_index

    int num_docs() const { return static_cast<int>(docs.size()); }
    int vocab_size() const { return vocab ? vocab->size() : 0; }
    long total_tokens() const;
};

enum class CorpusFormat { TokensJsonl, CountsJsonl };
enum class SplitScheme { ThirdsInterleaved, QuartersInterleaved };

// Interleaved three-way split; each part preserves temporal order and
// records the positions its documents occupied in the source corpus.
struct SplitCorpus {
    Corpus w_tilde_1;
    Corpus w_tilde_2;
    Corpus w;
    SplitScheme scheme = SplitScheme::ThirdsInterleaved;
    std::vector<int> w1_positions;
    std::vector<int> w2_positions;
    std::vector<int> w_positions;
};

// Reads one JSON object per line. With a null vocabulary the vocabulary
// is induced from the union of tokens (sorted); otherwise every token
// must already be known. Errors carry the offending line number.
Corpus load_corpus(const std::string& path, CorpusFormat format,
                   std::shared_ptr<const Vocabulary> vocab = nullptr);

void save_corpus(const Corpus& corpus, const std::string& path, CorpusFormat format);

// One token per line.
std::shared_ptr<const Vocabulary> load_vocabulary(const std::string& path);

SplitCorpus split_three_way(const Corpus& corpus, SplitScheme scheme);

}  // namespace ttmc
