#include <doctest.h>

#include <cstdio>
#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <string>

#include "ttmc/corpus.hpp"
#include "ttmc/rng.hpp"

using namespace ttmc;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = (fs::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("tokens format: basic load") {
    const auto path = write_temp("ttmc_basic.jsonl",
                                 R"({"t":0,"tokens":["apple","pear"]})"
                                 "\n"
                                 R"({"t":1,"tokens":["fig"]})"
                                 "\n"
                                 R"({"t":2,"tokens":["kiwi","lime","mint"]})"
                                 "\n");
    const Corpus c = load_corpus(path, CorpusFormat::TokensJsonl);
    CHECK(c.num_docs() == 3);
    CHECK(c.vocab_size() == 6);
    CHECK(c.docs[0].length() == 2);
    CHECK(c.docs[2].time_index == 2);
    // induced vocabulary is sorted
    CHECK(c.vocab->word(0) == "apple");
    CHECK(c.vocab->index_of("mint") == 4);
}

TEST_CASE("empty token list is rejected") {
    const auto path = write_temp("ttmc_empty.jsonl", R"({"t":0,"tokens":[]})"
                                                     "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::TokensJsonl),
                         doctest::Contains("empty document"), std::runtime_error);
}

TEST_CASE("counts format expands multisets") {
    const auto path = write_temp("ttmc_counts.jsonl", R"({"t":0,"counts":{"a":2,"b":1}})"
                                                      "\n");
    const Corpus c = load_corpus(path, CorpusFormat::CountsJsonl);
    CHECK(c.num_docs() == 1);
    CHECK(c.docs[0].length() == 3);
}

TEST_CASE("duplicate time_index is rejected") {
    const auto path = write_temp("ttmc_dup.jsonl",
                                 R"({"t":5,"tokens":["a"]})"
                                 "\n"
                                 R"({"t":5,"tokens":["b"]})"
                                 "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::TokensJsonl),
                         doctest::Contains("duplicate time_index"), std::runtime_error);
}

TEST_CASE("parse errors carry the line number") {
    const auto path = write_temp("ttmc_bad.jsonl",
                                 R"({"t":0,"tokens":["a"]})"
                                 "\n"
                                 "not json\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::TokensJsonl), doctest::Contains(":2:"),
                         std::runtime_error);
}

TEST_CASE("empty corpus file is rejected") {
    const auto path = write_temp("ttmc_none.jsonl", "");
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::TokensJsonl),
                         doctest::Contains("empty corpus"), std::runtime_error);
}

namespace {

Corpus tiny_corpus(int t) {
    auto vocab = std::make_shared<Vocabulary>(std::vector<std::string>{"a", "b", "c"});
    Corpus c;
    c.vocab = vocab;
    for (int d = 0; d < t; ++d) {
        Document doc;
        doc.time_index = d;
        doc.token_ids = {static_cast<std::uint32_t>(d % 3)};
        c.docs.push_back(doc);
    }
    return c;
}

}  // namespace

TEST_CASE("thirds split on positions 0..8") {
    const auto split = split_three_way(tiny_corpus(9), SplitScheme::ThirdsInterleaved);
    CHECK(split.w1_positions == std::vector<int>{0, 3, 6});
    CHECK(split.w2_positions == std::vector<int>{1, 4, 7});
    CHECK(split.w_positions == std::vector<int>{2, 5, 8});
    CHECK(split.w_tilde_1.docs[1].time_index == 3);
}

TEST_CASE("quarters split on positions 0..7") {
    const auto split = split_three_way(tiny_corpus(8), SplitScheme::QuartersInterleaved);
    CHECK(split.w1_positions == std::vector<int>{1, 5});
    CHECK(split.w2_positions == std::vector<int>{3, 7});
    CHECK(split.w_positions == std::vector<int>{0, 2, 4, 6});
}

TEST_CASE("minimal T = 3 gives one document per part") {
    const auto split = split_three_way(tiny_corpus(3), SplitScheme::ThirdsInterleaved);
    CHECK(split.w_tilde_1.num_docs() == 1);
    CHECK(split.w_tilde_2.num_docs() == 1);
    CHECK(split.w.num_docs() == 1);
}

TEST_CASE("T < 3 is rejected") {
    CHECK_THROWS_AS(split_three_way(tiny_corpus(2), SplitScheme::ThirdsInterleaved),
                    std::invalid_argument);
}

TEST_CASE("split is a partition preserving order, every part within offset 2") {
    Rng rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        const int t = 3 + static_cast<int>(rng.uniform_int(40));
        for (auto scheme : {SplitScheme::ThirdsInterleaved, SplitScheme::QuartersInterleaved}) {
            const auto split = split_three_way(tiny_corpus(t), scheme);
            CHECK(split.w1_positions.size() + split.w2_positions.size() +
                      split.w_positions.size() ==
                  static_cast<std::size_t>(t));
            std::vector<char> seen(t, 0);
            for (const auto* part : {&split.w1_positions, &split.w2_positions, &split.w_positions}) {
                for (std::size_t i = 0; i < part->size(); ++i) {
                    REQUIRE(seen[(*part)[i]] == 0);
                    seen[(*part)[i]] = 1;
                    if (i > 0) REQUIRE((*part)[i] > (*part)[i - 1]);
                }
            }
            if (scheme == SplitScheme::ThirdsInterleaved) {
                // every source position is within 2 of some member of each part
                for (const auto* part : {&split.w1_positions, &split.w2_positions,
                                         &split.w_positions}) {
                    for (int pos = 0; pos < t; ++pos) {
                        int best = t;
                        for (int p : *part) best = std::min(best, std::abs(p - pos));
                        CHECK(best <= 2);
                    }
                }
            }
        }
    }
}

TEST_CASE("writer round-trips bit-exactly in both formats") {
    const auto src = write_temp("ttmc_rt_src.jsonl",
                                R"({"t":0,"tokens":["pear","apple","pear"]})"
                                "\n"
                                R"({"t":3,"tokens":["fig","apple"]})"
                                "\n");
    for (auto format : {CorpusFormat::TokensJsonl, CorpusFormat::CountsJsonl}) {
        const Corpus c = load_corpus(src, CorpusFormat::TokensJsonl);
        const auto out1 = (fs::temp_directory_path() / "ttmc_rt1.jsonl").string();
        const auto out2 = (fs::temp_directory_path() / "ttmc_rt2.jsonl").string();
        save_corpus(c, out1, format);
        const Corpus reloaded = load_corpus(out1, format);
        save_corpus(reloaded, out2, format);
        CHECK(slurp(out1) == slurp(out2));
    }
}

TEST_CASE("external vocabulary: unknown tokens are rejected") {
    const auto vocab_path = write_temp("ttmc_vocab.txt", "a\nb\n");
    const auto vocab = load_vocabulary(vocab_path);
    CHECK(vocab->size() == 2);
    const auto path = write_temp("ttmc_unk.jsonl", R"({"t":0,"tokens":["zzz"]})"
                                                   "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::TokensJsonl, vocab),
                         doctest::Contains("not in the supplied vocabulary"), std::runtime_error);
}

TEST_CASE("duplicate vocabulary tokens are rejected") {
    const auto vocab_path = write_temp("ttmc_vocab_dup.txt", "a\nb\na\n");
    CHECK_THROWS_AS(load_vocabulary(vocab_path), std::invalid_argument);
}

}  // TEST_SUITE
