#include "ttmc/lda.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>
#include <omp.h>

#include "ttmc/parallel.hpp"
#include "ttmc/polya.hpp"
#include "ttmc/rng.hpp"

using nlohmann::json;

namespace ttmc {

namespace {

// Minka-style fixed point for the Dirichlet prior, run on the sampled
// document-topic counts. Initialized at 1/K per component.
std::vector<double> fit_alpha_fixed_point(const PolyaSuffStats& stats, int k,
                                          int max_iters, double tol) {
    constexpr double kFloor = 1e-6;
    std::vector<double> alpha(k, 1.0 / k);
    std::vector<double> num(k);
    for (int it = 0; it < max_iters; ++it) {
        double denom = 0.0;
        stats.fixed_point_sums(alpha, num, denom);
        if (!(denom > 0.0)) break;
        double max_rel = 0.0;
        for (int j = 0; j < k; ++j) {
            const double next = std::max(alpha[j] * num[j] / denom, kFloor);
            max_rel = std::max(max_rel, std::fabs(next - alpha[j]) / alpha[j]);
            alpha[j] = next;
        }
        if (max_rel < tol) break;
    }
    return alpha;
}

struct FlatCorpus {
    std::vector<std::uint32_t> tokens;
    std::vector<std::size_t> doc_offsets;  // size D + 1

    int num_docs() const { return static_cast<int>(doc_offsets.size()) - 1; }
};

FlatCorpus flatten(const Corpus& corpus) {
    FlatCorpus flat;
    flat.doc_offsets.push_back(0);
    for (const auto& doc : corpus.docs) {
        flat.tokens.insert(flat.tokens.end(), doc.token_ids.begin(), doc.token_ids.end());
        flat.doc_offsets.push_back(flat.tokens.size());
    }
    return flat;
}

}  // namespace

TopicModel fit_lda(const Corpus& train, int k, const LdaOptions& options) {
    if (k < 1) throw std::invalid_argument("K must be at least 1");
    if (train.docs.empty()) throw std::invalid_argument("training corpus is empty");
    const long total_tokens = train.total_tokens();
    if (k > total_tokens)
        throw std::invalid_argument("degenerate fit: K exceeds the total token count");

    const int v = train.vocab_size();
    const int d_count = train.num_docs();
    const double beta = options.topic_word_beta;
    const double aprior = options.doc_topic_prior;
    const FlatCorpus flat = flatten(train);

    std::vector<std::int32_t> n_vk(static_cast<std::size_t>(v) * k, 0);  // word-topic
    std::vector<std::int32_t> n_dk(static_cast<std::size_t>(d_count) * k, 0);
    std::vector<std::int64_t> n_k(k, 0);
    std::vector<std::int32_t> assign(flat.tokens.size());  // topic per token

    Rng rng(options.seed);
    for (std::size_t i = 0; i < flat.tokens.size(); ++i) {
        const int topic = static_cast<int>(rng.uniform_int(k));
        assign[i] = topic;
        ++n_vk[flat.tokens[i] * static_cast<std::size_t>(k) + topic];
        ++n_k[topic];
    }
    for (int d = 0; d < d_count; ++d)
        for (std::size_t i = flat.doc_offsets[d]; i < flat.doc_offsets[d + 1]; ++i)
            ++n_dk[static_cast<std::size_t>(d) * k + assign[i]];

    const double vbeta = v * beta;
    std::vector<double> weights(k);
    std::vector<double> phi_acc(static_cast<std::size_t>(v) * k, 0.0);
    int acc_sweeps = 0;

    const int sweeps = std::max(options.iters, 1);
    const int burn = std::min(options.burn_in, sweeps - 1);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int d = 0; d < d_count; ++d) {
            std::int32_t* doc_counts = &n_dk[static_cast<std::size_t>(d) * k];
            for (std::size_t i = flat.doc_offsets[d]; i < flat.doc_offsets[d + 1]; ++i) {
                const std::uint32_t w = flat.tokens[i];
                const int old = assign[i];
                --doc_counts[old];
                --n_vk[w * static_cast<std::size_t>(k) + old];
                --n_k[old];
                const std::int32_t* word_counts = &n_vk[w * static_cast<std::size_t>(k)];
                for (int j = 0; j < k; ++j)
                    weights[j] = (doc_counts[j] + aprior) * (word_counts[j] + beta) /
                                 (n_k[j] + vbeta);
                const int next = rng.categorical(weights);
                assign[i] = next;
                ++doc_counts[next];
                ++n_vk[w * static_cast<std::size_t>(k) + next];
                ++n_k[next];
            }
        }
        if (sweep >= burn) {
            for (int vv = 0; vv < v; ++vv)
                for (int j = 0; j < k; ++j)
                    phi_acc[static_cast<std::size_t>(vv) * k + j] +=
                        (n_vk[static_cast<std::size_t>(vv) * k + j] + beta) / (n_k[j] + vbeta);
            ++acc_sweeps;
        }
    }

    TopicModel model;
    model.K = k;
    model.vocab_hash = train.vocab->hash();
    model.phi = MatrixD(v, k);
    for (std::size_t i = 0; i < phi_acc.size(); ++i)
        model.phi.data[i] = phi_acc[i] / acc_sweeps;

    const auto stats = PolyaSuffStats::from_range(n_dk, k, 0, d_count);
    model.alpha_fit = fit_alpha_fixed_point(stats, k, options.alpha_fixed_point_iters,
                                            options.alpha_fixed_point_tol);

    model.train_meta.iters = options.iters;
    model.train_meta.burn_in = options.burn_in;
    model.train_meta.seed = options.seed;
    model.train_meta.heldout_perplexity = std::numeric_limits<double>::quiet_NaN();
    return model;
}

double log_perplexity(const TopicModel& model, const Corpus& heldout, std::uint64_t seed) {
    if (heldout.docs.empty()) throw std::invalid_argument("held-out corpus is empty");
    if (heldout.vocab_size() != model.phi.rows)
        throw std::invalid_argument("held-out vocabulary size does not match the model");

    const int k = model.K;
    const auto& alpha = model.alpha_fit;
    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);

    constexpr int kSweeps = 40;
    constexpr int kBurn = 20;

    double nll = 0.0;
    long scored_words = 0;
    int skipped = 0;

    std::vector<double> weights(k), theta(k);
    std::vector<int> counts(k);
    for (int d = 0; d < heldout.num_docs(); ++d) {
        const auto& ids = heldout.docs[d].token_ids;
        const int n = static_cast<int>(ids.size());
        if (n < 2) {
            ++skipped;
            continue;
        }
        const int observed = n / 2;

        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
        std::vector<int> z(observed);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < observed; ++i) {
            z[i] = static_cast<int>(rng.uniform_int(k));
            ++counts[z[i]];
        }
        std::fill(theta.begin(), theta.end(), 0.0);
        int acc = 0;
        for (int sweep = 0; sweep < kSweeps; ++sweep) {
            for (int i = 0; i < observed; ++i) {
                const auto w = ids[i];
                --counts[z[i]];
                const auto phi_row = model.phi.row(static_cast<int>(w));
                for (int j = 0; j < k; ++j) weights[j] = (counts[j] + alpha[j]) * phi_row[j];
                z[i] = rng.categorical(weights);
                ++counts[z[i]];
            }
            if (sweep >= kBurn) {
                for (int j = 0; j < k; ++j) theta[j] += (counts[j] + alpha[j]) / (observed + alpha_sum);
                ++acc;
            }
        }
        for (int j = 0; j < k; ++j) theta[j] /= acc;

        for (int i = observed; i < n; ++i) {
            const auto phi_row = model.phi.row(static_cast<int>(ids[i]));
            double p = 0.0;
            for (int j = 0; j < k; ++j) p += theta[j] * phi_row[j];
            nll -= std::log(p);
            ++scored_words;
        }
    }
    if (skipped > 0)
        std::fprintf(stderr, "[ttmc] warning: skipped %d held-out documents with fewer than 2 tokens\n",
                     skipped);
    if (scored_words == 0) throw std::runtime_error("no scorable held-out documents");
    return nll / static_cast<double>(scored_words);
}

TopicModel select_model(const Corpus& w1, const Corpus& w2, const std::vector<int>& k_grid,
                        const LdaOptions& options, int threads) {
    if (k_grid.empty()) throw std::invalid_argument("k_grid must be non-empty");

    const int n = static_cast<int>(k_grid.size());
    std::vector<TopicModel> models(n);
    std::vector<double> perplexity(n, std::numeric_limits<double>::infinity());
    std::vector<std::string> errors(n);

    const int nt = std::min(resolve_threads(threads), n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
    for (int i = 0; i < n; ++i) {
        try {
            LdaOptions opt = options;
            opt.seed = derive_seed(options.seed, 0xf17u + static_cast<std::uint64_t>(k_grid[i]));
            models[i] = fit_lda(w1, k_grid[i], opt);
            perplexity[i] =
                log_perplexity(models[i], w2, derive_seed(options.seed, 0x9e41u + k_grid[i]));
            models[i].train_meta.heldout_perplexity = perplexity[i];
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (int i = 0; i < n; ++i)
        if (!errors[i].empty())
            throw std::runtime_error("select_model: fit for K=" + std::to_string(k_grid[i]) +
                                     " failed: " + errors[i]);

    return models[select_best_index(perplexity, k_grid)];
}

std::size_t select_best_index(const std::vector<double>& perplexities,
                              const std::vector<int>& k_grid) {
    if (perplexities.empty() || perplexities.size() != k_grid.size())
        throw std::invalid_argument("select_best_index needs matching non-empty inputs");
    std::size_t best = 0;
    for (std::size_t i = 1; i < perplexities.size(); ++i) {
        if (perplexities[i] < perplexities[best] ||
            (perplexities[i] == perplexities[best] && k_grid[i] < k_grid[best]))
            best = i;
    }
    return best;
}

namespace {

std::vector<std::int32_t> word_topic_map(const TopicModel& model) {
    std::vector<std::int32_t> map(model.phi.rows);
    for (int v = 0; v < model.phi.rows; ++v) {
        const auto row = model.phi.row(v);
        int arg = 0;
        for (int j = 1; j < model.K; ++j)
            if (row[j] > row[arg]) arg = j;  // ties keep the lowest index
        map[v] = arg;
    }
    return map;
}

void count_document(const Document& doc, const std::vector<std::int32_t>& map, int k,
                    std::int32_t* out_row) {
    for (int j = 0; j < k; ++j) out_row[j] = 0;
    for (auto id : doc.token_ids) ++out_row[map[id]];
}

}  // namespace

TopicCounts estimate_topic_counts(const TopicModel& model, const Corpus& w, int threads) {
    if (w.vocab_size() != model.phi.rows)
        throw std::invalid_argument("corpus vocabulary size does not match the model");
    const auto map = word_topic_map(model);

    TopicCounts tc;
    tc.rows = w.num_docs();
    tc.cols = model.K;
    tc.z.resize(static_cast<std::size_t>(tc.rows) * tc.cols);
    tc.doc_lengths.resize(tc.rows);

    const int nt = resolve_threads(threads);
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int d = 0; d < tc.rows; ++d) {
        count_document(w.docs[d], map, tc.cols, &tc.z[static_cast<std::size_t>(d) * tc.cols]);
        tc.doc_lengths[d] = w.docs[d].length();
    }
    return tc;
}

TopicCounts estimate_topic_counts_serial(const TopicModel& model, const Corpus& w) {
    if (w.vocab_size() != model.phi.rows)
        throw std::invalid_argument("corpus vocabulary size does not match the model");
    const auto map = word_topic_map(model);

    TopicCounts tc;
    tc.rows = w.num_docs();
    tc.cols = model.K;
    tc.z.resize(static_cast<std::size_t>(tc.rows) * tc.cols);
    tc.doc_lengths.resize(tc.rows);
    for (int d = 0; d < tc.rows; ++d) {
        count_document(w.docs[d], map, tc.cols, &tc.z[static_cast<std::size_t>(d) * tc.cols]);
        tc.doc_lengths[d] = w.docs[d].length();
    }
    return tc;
}

namespace {

std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

void save_model(const TopicModel& model, const std::string& path) {
    json j;
    j["K"] = model.K;
    j["V"] = model.phi.rows;
    j["alpha"] = model.alpha_fit;
    std::vector<double> col_major;
    col_major.reserve(model.phi.data.size());
    for (int k = 0; k < model.phi.cols; ++k)
        for (int v = 0; v < model.phi.rows; ++v) col_major.push_back(model.phi(v, k));
    j["phi"] = std::move(col_major);
    j["vocab_hash"] = hash_hex(model.vocab_hash);
    j["train_meta"] = {{"iters", model.train_meta.iters},
                       {"burn_in", model.train_meta.burn_in},
                       {"seed", model.train_meta.seed},
                       {"heldout_perplexity", model.train_meta.heldout_perplexity}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

TopicModel load_model(const std::string& path, const Vocabulary* expected_vocab) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": malformed model file: " + e.what());
    }
    TopicModel model;
    model.K = j.at("K").get<int>();
    const int v = j.at("V").get<int>();
    model.alpha_fit = j.at("alpha").get<std::vector<double>>();
    const auto flat = j.at("phi").get<std::vector<double>>();
    if (static_cast<int>(flat.size()) != v * model.K)
        throw std::runtime_error(path + ": phi array has wrong size");
    model.phi = MatrixD(v, model.K);
    for (int k = 0; k < model.K; ++k)
        for (int vv = 0; vv < v; ++vv) model.phi(vv, k) = flat[k * v + vv];
    model.vocab_hash = std::stoull(j.at("vocab_hash").get<std::string>(), nullptr, 16);
    if (j.contains("train_meta")) {
        const auto& m = j["train_meta"];
        model.train_meta.iters = m.value("iters", 0);
        model.train_meta.burn_in = m.value("burn_in", 0);
        model.train_meta.seed = m.value("seed", std::uint64_t{0});
        model.train_meta.heldout_perplexity =
            (m.contains("heldout_perplexity") && m["heldout_perplexity"].is_number())
                ? m["heldout_perplexity"].get<double>()
                : std::numeric_limits<double>::quiet_NaN();
    }
    if (expected_vocab && expected_vocab->hash() != model.vocab_hash)
        throw std::runtime_error(path + ": model was trained on a different vocabulary");
    return model;
}

}  // namespace ttmc
