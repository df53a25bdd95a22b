// Command-line front-end: synthetic corpus generation, topic-model
// fitting, threshold calibration, changepoint detection (topic-model and
// LSA routes), and detection scoring. All outputs are machine-readable
// JSON/CSV and every run is reproducible from its flags and seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include "ttmc/calibrate.hpp"
#include "ttmc/corpus.hpp"
#include "ttmc/eval.hpp"
#include "ttmc/lda.hpp"
#include "ttmc/lsa.hpp"
#include "ttmc/segment.hpp"
#include "ttmc/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ttmc;

namespace {

CorpusFormat parse_format(const std::string& name) {
    if (name == "tokens") return CorpusFormat::TokensJsonl;
    if (name == "counts") return CorpusFormat::CountsJsonl;
    throw CLI::ValidationError("--format", "expected 'tokens' or 'counts'");
}

SplitScheme parse_split(const std::string& name) {
    if (name == "thirds") return SplitScheme::ThirdsInterleaved;
    if (name == "quarters") return SplitScheme::QuartersInterleaved;
    throw CLI::ValidationError("--split", "expected 'thirds' or 'quarters'");
}

// Stop-word removal and frequency floors are CLI-level pre-processing;
// documents left empty are dropped with a warning.
Corpus preprocess(const Corpus& corpus, int min_count, const std::string& stopword_path) {
    if (min_count <= 1 && stopword_path.empty()) return corpus;

    std::set<std::string> stopwords;
    if (!stopword_path.empty()) {
        std::ifstream in(stopword_path);
        if (!in) throw std::runtime_error("cannot open stopword file: " + stopword_path);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) stopwords.insert(line);
    }

    std::vector<long> freq(corpus.vocab_size(), 0);
    for (const auto& doc : corpus.docs)
        for (auto id : doc.token_ids) ++freq[id];

    std::vector<char> keep(corpus.vocab_size(), 1);
    for (int v = 0; v < corpus.vocab_size(); ++v) {
        if (freq[v] < min_count) keep[v] = 0;
        if (stopwords.count(corpus.vocab->word(v))) keep[v] = 0;
    }

    std::vector<std::string> kept_words;
    std::vector<int> remap(corpus.vocab_size(), -1);
    for (int v = 0; v < corpus.vocab_size(); ++v)
        if (keep[v]) {
            remap[v] = static_cast<int>(kept_words.size());
            kept_words.push_back(corpus.vocab->word(v));
        }
    if (kept_words.empty()) throw std::runtime_error("pre-processing removed the entire vocabulary");

    Corpus out;
    out.vocab = std::make_shared<Vocabulary>(std::move(kept_words));
    int dropped = 0;
    for (const auto& doc : corpus.docs) {
        Document nd;
        nd.time_index = doc.time_index;
        for (auto id : doc.token_ids)
            if (remap[id] >= 0) nd.token_ids.push_back(static_cast<std::uint32_t>(remap[id]));
        if (nd.token_ids.empty()) {
            ++dropped;
            continue;
        }
        out.docs.push_back(std::move(nd));
    }
    if (dropped > 0)
        std::fprintf(stderr, "[ttmc] warning: dropped %d documents emptied by pre-processing\n",
                     dropped);
    if (out.docs.empty()) throw std::runtime_error("pre-processing removed every document");
    return out;
}

json result_to_json(const ChangepointResult& result, const std::string& method) {
    json j;
    j["method"] = method;
    j["changepoints"] = result.changepoints_full;
    j["changepoints_w"] = result.changepoints;
    json prov = json::array();
    for (const auto& p : result.provenance)
        prov.push_back({{"s", p.interval.s}, {"e", p.interval.e}, {"score", p.score}});
    j["provenance"] = std::move(prov);
    j["config"] = result.config_snapshot.empty() ? json::object()
                                                 : json::parse(result.config_snapshot);
    return j;
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

void write_score_trace(const std::vector<SampledScoreRow>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "s,e,t,value,threshold,retained\n";
    char buf[160];
    for (const auto& row : trace) {
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%d\n", row.interval.s,
                      row.interval.e, row.t, row.value, row.threshold, row.retained ? 1 : 0);
        out << buf;
    }
}

json metrics_to_json(const DetectionMetrics& m) {
    json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f_score"] = m.f_score;
    j["window"] = m.window;
    json pairs = json::array();
    for (const auto& [e, t] : m.matched_pairs) pairs.push_back({e, t});
    j["matched_pairs"] = std::move(pairs);
    return j;
}

std::vector<int> load_result_changepoints(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open result file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": malformed result file: " + e.what());
    }
    if (!j.contains("changepoints"))
        throw std::runtime_error(path + ": result file lacks a \"changepoints\" field");
    return j["changepoints"].get<std::vector<int>>();
}

std::vector<int> load_truth_changepoints(const std::string& path) {
    return load_ground_truth(path).changepoints;
}

struct CommonIn {
    std::string input;
    std::string format = "tokens";
    std::string vocab_path;
    int min_count = 1;
    std::string stopwords;

    void attach(CLI::App* cmd) {
        cmd->add_option("--input", input, "corpus JSONL file")->required();
        cmd->add_option("--format", format, "corpus format: tokens|counts");
        cmd->add_option("--vocab", vocab_path, "fixed vocabulary file (one token per line)");
        cmd->add_option("--min-count", min_count, "drop tokens with corpus frequency below this");
        cmd->add_option("--stopwords", stopwords, "stop-word list file");
    }

    Corpus load() const {
        std::shared_ptr<const Vocabulary> vocab;
        if (!vocab_path.empty()) vocab = load_vocabulary(vocab_path);
        return preprocess(load_corpus(input, parse_format(format), vocab), min_count, stopwords);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Offline changepoint detection in the topic structure of temporal corpora"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap (0 = all cores)")
        ->envname("TTMC_THREADS");

    // ---- gen ----------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a synthetic corpus with known changepoints");
    struct {
        int T = 3000, V = 500, K = 5, M = 5;
        double norm = 1.0, eps = 0.5;
        int min_gap = 0, max_gap = 0;
        int doc_len_min = 50, doc_len_max = 200;
        double phi_conc = 0.1;
        std::uint64_t seed = 1;
        std::string out = ".";
    } g;
    gen->add_option("--T", g.T, "number of documents");
    gen->add_option("--V", g.V, "vocabulary size");
    gen->add_option("--K", g.K, "number of topics");
    gen->add_option("--M", g.M, "number of changepoints");
    gen->add_option("--norm", g.norm, "common l2 norm of the Dirichlet parameters");
    gen->add_option("--eps", g.eps, "minimum relative separation of consecutive alphas");
    gen->add_option("--min-gap", g.min_gap, "minimum gap between changepoints (0 = T/(4(M+1)))");
    gen->add_option("--max-gap", g.max_gap, "maximum gap between changepoints (0 = T/(M+1))");
    gen->add_option("--doc-len-min", g.doc_len_min, "minimum words per document");
    gen->add_option("--doc-len-max", g.doc_len_max, "maximum words per document");
    gen->add_option("--phi-conc", g.phi_conc, "symmetric Dirichlet concentration for topics");
    gen->add_option("--seed", g.seed, "RNG seed")->envname("TTMC_SEED");
    gen->add_option("--out", g.out, "output directory (must exist)");
    gen->callback([&] {
        if (!fs::is_directory(g.out))
            throw std::runtime_error("output directory does not exist: " + g.out);
        RandomSpecOptions opt;
        opt.doc_len_min = g.doc_len_min;
        opt.doc_len_max = g.doc_len_max;
        opt.phi_concentration = g.phi_conc;
        const int min_gap = g.min_gap > 0 ? g.min_gap : std::max(1, g.T / (4 * (g.M + 1)));
        const int max_gap = g.max_gap > 0 ? g.max_gap : std::max(min_gap, g.T / (g.M + 1));
        const auto spec =
            random_spec(g.T, g.V, g.K, g.M, g.norm, g.eps, min_gap, max_gap, g.seed, opt);
        const auto [corpus, truth] = generate(spec, threads);
        save_corpus(corpus, (fs::path(g.out) / "corpus.jsonl").string(),
                    CorpusFormat::TokensJsonl);
        save_ground_truth(truth, (fs::path(g.out) / "ground_truth.json").string());
        std::printf("wrote %s and %s (T=%d, V=%d, K=%d, M=%zu)\n",
                    (fs::path(g.out) / "corpus.jsonl").c_str(),
                    (fs::path(g.out) / "ground_truth.json").c_str(), g.T, g.V, g.K,
                    truth.changepoints.size());
    });

    // ---- fit-topics ---------------------------------------------------
    auto* fit = app.add_subcommand("fit-topics", "select and fit a topic model on the W~ parts");
    CommonIn fit_in;
    fit_in.attach(fit);
    struct {
        std::vector<int> k_grid = {5, 10, 15, 20};
        int iters = 200, burn_in = 100;
        std::string split = "thirds";
        std::uint64_t seed = 1;
        std::string out = "model.json";
    } f;
    fit->add_option("--k-grid", f.k_grid, "candidate topic counts")->delimiter(',');
    fit->add_option("--iters", f.iters, "Gibbs sweeps");
    fit->add_option("--burn-in", f.burn_in, "burn-in sweeps");
    fit->add_option("--split", f.split, "three-way split: thirds|quarters");
    fit->add_option("--seed", f.seed, "RNG seed")->envname("TTMC_SEED");
    fit->add_option("--out", f.out, "model JSON path");
    fit->callback([&] {
        const Corpus corpus = fit_in.load();
        const auto split = split_three_way(corpus, parse_split(f.split));
        LdaOptions opt;
        opt.iters = f.iters;
        opt.burn_in = f.burn_in;
        opt.seed = f.seed;
        const auto model = select_model(split.w_tilde_1, split.w_tilde_2, f.k_grid, opt, threads);
        save_model(model, f.out);
        std::printf("selected K=%d (held-out per-word NLL %.5f); wrote %s\n", model.K,
                    model.train_meta.heldout_perplexity, f.out.c_str());
    });

    // ---- calibrate ----------------------------------------------------
    auto* cal = app.add_subcommand("calibrate", "compute null thresholds for interval scores");
    CommonIn cal_in;
    cal_in.attach(cal);
    struct {
        std::string model;
        std::string approach = "permutation";
        std::string split = "thirds";
        int delta = 20;
        double eta = 0.5;
        bool conservative = false;
        int num_intervals = 100;
        int len_max = 0;
        bool shuffle = false;
        std::uint64_t seed = 1;
        std::string out = "thresholds.csv";
    } c;
    cal->add_option("--model", c.model, "model JSON (required for --approach simulation)");
    cal->add_option("--approach", c.approach, "permutation|simulation");
    cal->add_option("--split", c.split, "three-way split: thirds|quarters");
    cal->add_option("--delta", c.delta, "minimum interval length");
    cal->add_option("--eta", c.eta, "quantile in (0, 1]");
    cal->add_flag("--conservative", c.conservative, "use the maximum quantile (eta = 1.0)");
    cal->add_option("--num-intervals", c.num_intervals, "sampled intervals per length");
    cal->add_option("--len-max", c.len_max, "largest calibrated length (0 = series length)");
    cal->add_flag("--shuffle", c.shuffle, "random permutations instead of the fixed interleave");
    cal->add_option("--seed", c.seed, "RNG seed")->envname("TTMC_SEED");
    cal->add_option("--out", c.out, "thresholds CSV path");
    cal->callback([&] {
        const Corpus corpus = cal_in.load();
        const auto split = split_three_way(corpus, parse_split(c.split));
        if (c.model.empty())
            throw std::runtime_error("calibrate requires --model (fit one with fit-topics)");
        const auto model = load_model(c.model, corpus.vocab.get());
        CalibrateOptions opt;
        opt.num_intervals = c.num_intervals;
        opt.eta = c.conservative ? 1.0 : c.eta;
        opt.seed = c.seed;
        opt.len_max = c.len_max;
        opt.scheme = c.shuffle ? PermutationScheme::Shuffle : PermutationScheme::Interleave;
        opt.threads = threads;
        ThresholdTable table;
        if (c.approach == "permutation") {
            const auto counts = estimate_topic_counts(model, split.w, threads);
            table = calibrate_permutation(counts, c.delta, opt);
        } else if (c.approach == "simulation") {
            long len_sum = 0;
            for (const auto& d : split.w.docs) len_sum += d.length();
            const int mean_len =
                std::max(1, static_cast<int>(len_sum / std::max(1, split.w.num_docs())));
            table = calibrate_simulation(model, split.w.num_docs(), mean_len, mean_len, c.delta,
                                         opt);
        } else {
            throw CLI::ValidationError("--approach", "expected 'permutation' or 'simulation'");
        }
        save_thresholds_csv(table, c.out);
        std::printf("wrote %s (%zu grid lengths)\n", c.out.c_str(), table.lengths.size());
    });

    // ---- detect -------------------------------------------------------
    auto* det = app.add_subcommand("detect", "end-to-end changepoint detection");
    CommonIn det_in;
    det_in.attach(det);
    struct {
        std::vector<int> k_grid = {5, 10, 15, 20};
        int iters = 200, burn_in = 100;
        int delta = 20;
        double eta = 0.5;
        bool conservative = false;
        long num_intervals = 0;
        int calib_num_intervals = 6000;
        bool interleave = false;
        bool no_envelope = false;
        std::string approach = "permutation";
        std::string split = "thirds";
        std::uint64_t seed = 1;
        std::string baseline;
        int lsa_k = 10;
        std::string out_dir = ".";
    } d;
    det->add_option("--k-grid", d.k_grid, "candidate topic counts")->delimiter(',');
    det->add_option("--iters", d.iters, "Gibbs sweeps");
    det->add_option("--burn-in", d.burn_in, "burn-in sweeps");
    det->add_option("--delta", d.delta, "minimum interval length");
    det->add_option("--eta", d.eta, "calibration quantile in (0, 1]");
    det->add_flag("--conservative", d.conservative, "use the maximum quantile (eta = 1.0)");
    det->add_option("--num-intervals", d.num_intervals, "sampled intervals (0 = 5x series length)");
    det->add_option("--calib-num-intervals", d.calib_num_intervals,
                    "calibration intervals per length");
    det->add_flag("--interleave", d.interleave,
                  "calibrate with the fixed interleave instead of random permutations");
    det->add_flag("--no-envelope", d.no_envelope,
                  "use the per-length threshold table directly (no power-law envelope)");
    det->add_option("--approach", d.approach, "threshold calibration: permutation|simulation");
    det->add_option("--split", d.split, "three-way split: thirds|quarters");
    det->add_option("--seed", d.seed, "RNG seed")->envname("TTMC_SEED");
    det->add_option("--baseline", d.baseline, "use a baseline pipeline: lsa");
    det->add_option("--lsa-k", d.lsa_k, "embedding dimension for --baseline lsa");
    det->add_option("--out-dir", d.out_dir, "output directory (must exist)");
    det->callback([&] {
        if (!fs::is_directory(d.out_dir))
            throw std::runtime_error("output directory does not exist: " + d.out_dir);
        const Corpus corpus = det_in.load();

        if (d.baseline == "lsa") {
            const auto emb = lsa_embed(corpus, d.lsa_k, 0, threads);
            LsaDetectConfig config;
            config.delta = d.delta;
            config.eta = d.conservative ? 1.0 : d.eta;
            config.num_intervals = d.num_intervals;
            config.calib_num_intervals = d.calib_num_intervals;
            config.threshold_envelope = !d.no_envelope;
            config.seed = d.seed;
            config.threads = threads;
            const auto result = lsa_detect(emb, config);
            write_json(result_to_json(result, "lsa"),
                       (fs::path(d.out_dir) / "result.json").string());
            save_scree_csv(emb, (fs::path(d.out_dir) / "scree.csv").string());
            std::printf("lsa baseline: %zu changepoints; wrote result.json, scree.csv\n",
                        result.changepoints.size());
            return;
        }
        if (!d.baseline.empty())
            throw CLI::ValidationError("--baseline", "unknown baseline: " + d.baseline);

        DetectConfig config;
        config.delta_min_interval = d.delta;
        config.eta = d.conservative ? 1.0 : d.eta;
        config.num_intervals = d.num_intervals;
        config.k_grid = d.k_grid;
        config.lda.iters = d.iters;
        config.lda.burn_in = d.burn_in;
        config.approach =
            d.approach == "simulation" ? ThresholdApproach::Simulation
                                       : ThresholdApproach::Permutation;
        config.split = parse_split(d.split);
        config.threshold_envelope = !d.no_envelope;
        config.calib_scheme =
            d.interleave ? PermutationScheme::Interleave : PermutationScheme::Shuffle;
        config.calib_num_intervals = d.calib_num_intervals;
        config.seed = d.seed;
        config.threads = threads;

        const auto art = detect_full(corpus, config);
        write_json(result_to_json(art.result, "ttmc"),
                   (fs::path(d.out_dir) / "result.json").string());
        save_thresholds_csv(art.thresholds, (fs::path(d.out_dir) / "thresholds.csv").string());
        write_score_trace(art.trace, (fs::path(d.out_dir) / "scores.csv").string());
        std::printf("K=%d; %zu changepoints; wrote result.json, thresholds.csv, scores.csv\n",
                    art.model.K, art.result.changepoints.size());
        for (std::size_t i = 0; i < art.result.changepoints_full.size(); ++i)
            std::printf("  changepoint at source position %d (W position %d, score %.4f)\n",
                        art.result.changepoints_full[i], art.result.changepoints[i],
                        art.result.provenance[i].score);
    });

    // ---- eval ---------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "score detection output against ground truth");
    struct {
        std::string result;
        std::string truth;
        int window = 50;
        std::string out;
        std::string batch;
    } e;
    ev->add_option("--result", e.result, "result JSON from detect");
    ev->add_option("--truth", e.truth, "ground truth JSON from gen");
    ev->add_option("--window", e.window, "tolerance window in documents");
    ev->add_option("--out", e.out, "write the report here as well as stdout");
    ev->add_option("--batch", e.batch,
                   "JSON manifest [{\"result\": ..., \"truth\": ...}, ...]; aggregates means");
    ev->callback([&] {
        json report;
        if (!e.batch.empty()) {
            std::ifstream in(e.batch);
            if (!in) throw std::runtime_error("cannot open batch manifest: " + e.batch);
            json manifest;
            in >> manifest;
            json runs = json::array();
            double p = 0, r = 0, f = 0;
            for (const auto& entry : manifest) {
                const auto est = load_result_changepoints(entry.at("result").get<std::string>());
                const auto tru = load_truth_changepoints(entry.at("truth").get<std::string>());
                const auto m = score_detection(est, tru, e.window);
                runs.push_back(metrics_to_json(m));
                p += m.precision;
                r += m.recall;
                f += m.f_score;
            }
            const double n = std::max<std::size_t>(manifest.size(), 1);
            report["runs"] = std::move(runs);
            report["mean"] = {{"precision", p / n}, {"recall", r / n}, {"f_score", f / n}};
        } else {
            if (e.result.empty() || e.truth.empty())
                throw std::runtime_error("eval requires --result and --truth (or --batch)");
            const auto est = load_result_changepoints(e.result);
            const auto tru = load_truth_changepoints(e.truth);
            report = metrics_to_json(score_detection(est, tru, e.window));
        }
        std::cout << report.dump(2) << "\n";
        if (!e.out.empty()) write_json(report, e.out);
    });

    // ---- lsa ----------------------------------------------------------
    auto* lsa_cmd = app.add_subcommand("lsa", "LSA embeddings, scree data, CUSUM detection");
    lsa_cmd->require_subcommand(1);

    auto* scree = lsa_cmd->add_subcommand("scree", "singular-value spectrum for rank selection");
    CommonIn scree_in;
    scree_in.attach(scree);
    struct {
        int components = 50;
        std::string out = "scree.csv";
    } sc;
    scree->add_option("--components", sc.components, "spectrum size");
    scree->add_option("--out", sc.out, "scree CSV path");
    scree->callback([&] {
        const Corpus corpus = scree_in.load();
        const auto emb = lsa_embed(corpus, 1, sc.components, threads);
        save_scree_csv(emb, sc.out);
        std::printf("wrote %s (%zu singular values)\n", sc.out.c_str(),
                    emb.singular_values.size());
    });

    auto* embed = lsa_cmd->add_subcommand("embed", "document embeddings as a binary matrix");
    CommonIn embed_in;
    embed_in.attach(embed);
    struct {
        int k = 10;
        std::string out = "embedding.bin";
    } em;
    embed->add_option("--k", em.k, "embedding dimension");
    embed->add_option("--out", em.out, "embedding file path");
    embed->callback([&] {
        const Corpus corpus = embed_in.load();
        const auto emb = lsa_embed(corpus, em.k, 0, threads);
        save_embedding(emb, em.out);
        std::printf("wrote %s (T=%d, k=%d)\n", em.out.c_str(), emb.doc_vectors.rows, emb.k);
    });

    auto* ldet = lsa_cmd->add_subcommand("detect", "multivariate CUSUM + WBS on embeddings");
    CommonIn ldet_in;
    ldet_in.attach(ldet);
    struct {
        int k = 10;
        int delta = 20;
        double eta = 0.5;
        bool conservative = false;
        long num_intervals = 0;
        std::uint64_t seed = 1;
        std::string out_dir = ".";
    } ld;
    ldet->add_option("--k", ld.k, "embedding dimension");
    ldet->add_option("--delta", ld.delta, "minimum interval length");
    ldet->add_option("--eta", ld.eta, "calibration quantile");
    ldet->add_flag("--conservative", ld.conservative, "use the maximum quantile (eta = 1.0)");
    ldet->add_option("--num-intervals", ld.num_intervals, "sampled intervals (0 = 5x T)");
    ldet->add_option("--seed", ld.seed, "RNG seed")->envname("TTMC_SEED");
    ldet->add_option("--out-dir", ld.out_dir, "output directory (must exist)");
    ldet->callback([&] {
        if (!fs::is_directory(ld.out_dir))
            throw std::runtime_error("output directory does not exist: " + ld.out_dir);
        const Corpus corpus = ldet_in.load();
        const auto emb = lsa_embed(corpus, ld.k, 0, threads);
        LsaDetectConfig config;
        config.delta = ld.delta;
        config.eta = ld.conservative ? 1.0 : ld.eta;
        config.num_intervals = ld.num_intervals;
        config.seed = ld.seed;
        config.threads = threads;
        const auto result = lsa_detect(emb, config);
        write_json(result_to_json(result, "lsa"),
                   (fs::path(ld.out_dir) / "result.json").string());
        std::printf("lsa: %zu changepoints; wrote result.json\n", result.changepoints.size());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
