#include "ttmc/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>
#include <omp.h>

#include "ttmc/parallel.hpp"
#include "ttmc/rng.hpp"

using nlohmann::json;

namespace ttmc {

void TtmcSpec::validate() const {
    if (T < 1 || V < 1 || K < 1) throw std::invalid_argument("T, V, K must be positive");
    if (doc_len_min < 1 || doc_len_max < doc_len_min)
        throw std::invalid_argument("invalid document length range");
    for (std::size_t i = 0; i < changepoints.size(); ++i) {
        if (changepoints[i] <= 0 || changepoints[i] >= T)
            throw std::invalid_argument("changepoints must lie strictly inside (0, T)");
        if (i > 0 && changepoints[i] <= changepoints[i - 1])
            throw std::invalid_argument("changepoints must be strictly increasing");
    }
    if (alphas.size() != changepoints.size() + 1)
        throw std::invalid_argument("need one alpha per segment");
    for (const auto& a : alphas) {
        if (static_cast<int>(a.size()) != K) throw std::invalid_argument("alpha dimension mismatch");
        for (double x : a)
            if (!(x > 0.0)) throw std::invalid_argument("alpha components must be positive");
    }
    if (phi.rows != V || phi.cols != K) throw std::invalid_argument("phi must be V x K");
    for (int k = 0; k < K; ++k) {
        double sum = 0.0;
        for (int v = 0; v < V; ++v) sum += phi(v, k);
        if (std::fabs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("phi column " + std::to_string(k) + " does not sum to 1");
    }
    if (norm > 0.0) {
        for (const auto& a : alphas) {
            double n2 = 0.0;
            for (double x : a) n2 += x * x;
            if (std::fabs(std::sqrt(n2) - norm) > 1e-9)
                throw std::invalid_argument("alpha norms must all equal the common norm");
        }
    }
    if (epsilon > 0.0) {
        for (std::size_t i = 1; i < alphas.size(); ++i) {
            double d2 = 0.0, n2 = 0.0;
            for (int j = 0; j < K; ++j) {
                const double d = alphas[i][j] - alphas[i - 1][j];
                d2 += d * d;
                n2 += alphas[i - 1][j] * alphas[i - 1][j];
            }
            if (std::sqrt(d2) < epsilon * std::sqrt(n2) - 1e-12)
                throw std::invalid_argument("consecutive alphas violate the separation constraint");
        }
    }
}

int TtmcSpec::segment_of(int d) const {
    return static_cast<int>(std::upper_bound(changepoints.begin(), changepoints.end(), d) -
                            changepoints.begin());
}

TtmcSpec random_spec(int t, int v, int k, int m, double norm_l, double epsilon,
                     int min_gap, int max_gap, std::uint64_t seed,
                     const RandomSpecOptions& options) {
    if (m < 0 || t < 1) throw std::invalid_argument("invalid T or M");
    if (m > 0 && (min_gap < 1 || max_gap < min_gap))
        throw std::invalid_argument("invalid gap range");
    if (static_cast<long>(m) * min_gap > t)
        throw std::invalid_argument("infeasible gap constraints: M * min_gap exceeds T");
    if (!(norm_l > 0.0) || !(epsilon > 0.0))
        throw std::invalid_argument("norm and epsilon must be positive");

    TtmcSpec spec;
    spec.T = t;
    spec.V = v;
    spec.K = k;
    spec.doc_len_min = options.doc_len_min;
    spec.doc_len_max = options.doc_len_max;
    spec.seed = seed;
    spec.norm = norm_l;
    spec.epsilon = epsilon;

    Rng rng(derive_seed(seed, 0x5e9));

    if (m > 0) {
        bool placed = false;
        for (int attempt = 0; attempt < options.retry_budget && !placed; ++attempt) {
            std::vector<int> cps;
            long pos = 0;
            for (int i = 0; i < m; ++i) {
                pos += min_gap + static_cast<int>(rng.uniform_int(max_gap - min_gap + 1));
                cps.push_back(static_cast<int>(pos));
            }
            if (pos <= t - min_gap) {
                spec.changepoints = std::move(cps);
                placed = true;
            }
        }
        if (!placed) throw std::runtime_error("infeasible gap constraints: could not place changepoints");
    }

    auto draw_alpha = [&]() {
        std::vector<double> a(k);
        double n2 = 0.0;
        do {
            n2 = 0.0;
            for (int j = 0; j < k; ++j) {
                a[j] = std::fabs(rng.normal());
                n2 += a[j] * a[j];
            }
        } while (!(n2 > 0.0));
        const double scale = norm_l / std::sqrt(n2);
        for (int j = 0; j < k; ++j) a[j] = std::max(a[j] * scale, 1e-12);
        return a;
    };

    spec.alphas.push_back(draw_alpha());
    for (int i = 1; i <= m; ++i) {
        bool ok = false;
        for (int attempt = 0; attempt < options.retry_budget && !ok; ++attempt) {
            auto a = draw_alpha();
            double d2 = 0.0;
            for (int j = 0; j < k; ++j) {
                const double d = a[j] - spec.alphas.back()[j];
                d2 += d * d;
            }
            if (std::sqrt(d2) >= epsilon * norm_l) {
                spec.alphas.push_back(std::move(a));
                ok = true;
            }
        }
        if (!ok)
            throw std::runtime_error("separation constraint infeasible: no admissible alpha after " +
                                     std::to_string(options.retry_budget) + " attempts");
    }

    spec.phi = MatrixD(v, k);
    std::vector<double> conc(v, options.phi_concentration);
    std::vector<double> col(v);
    for (int j = 0; j < k; ++j) {
        rng.dirichlet(conc, col);
        for (int row = 0; row < v; ++row) spec.phi(row, j) = col[row];
    }

    spec.validate();
    return spec;
}

namespace {

std::shared_ptr<const Vocabulary> synthetic_vocab(int v) {
    int width = 1;
    for (int x = v - 1; x >= 10; x /= 10) ++width;
    std::vector<std::string> words(v);
    for (int i = 0; i < v; ++i) {
        std::string num = std::to_string(i);
        words[i] = "w" + std::string(width - num.size(), '0') + num;
    }
    return std::make_shared<Vocabulary>(std::move(words));
}

// Column CDFs for inverse-transform word sampling.
MatrixD topic_cdfs(const MatrixD& phi) {
    MatrixD cdf(phi.cols, phi.rows);  // K x V, row-major per topic
    for (int k = 0; k < phi.cols; ++k) {
        double cum = 0.0;
        for (int v = 0; v < phi.rows; ++v) {
            cum += phi(v, k);
            cdf(k, v) = cum;
        }
        cdf(k, phi.rows - 1) = 1.0;
    }
    return cdf;
}

Document sample_document(const TtmcSpec& spec, const MatrixD& cdf, int d) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(d)));
    Document doc;
    doc.time_index = d;
    const int len = spec.doc_len_min +
                    static_cast<int>(rng.uniform_int(spec.doc_len_max - spec.doc_len_min + 1));
    const auto& alpha = spec.alphas[spec.segment_of(d)];
    std::vector<double> theta(spec.K);
    rng.dirichlet(alpha, theta);
    doc.token_ids.reserve(len);
    for (int n = 0; n < len; ++n) {
        const int topic = rng.categorical(theta);
        const double u = rng.uniform01();
        const auto row = cdf.row(topic);
        const auto it = std::lower_bound(row.begin(), row.end(), u);
        const int w = static_cast<int>(it == row.end() ? spec.V - 1 : it - row.begin());
        doc.token_ids.push_back(static_cast<std::uint32_t>(w));
    }
    return doc;
}

GroundTruth truth_of(const TtmcSpec& spec) {
    GroundTruth truth;
    truth.changepoints = spec.changepoints;
    truth.segment_alphas = spec.alphas;
    truth.topics = spec.phi;
    return truth;
}

}  // namespace

std::pair<Corpus, GroundTruth> generate(const TtmcSpec& spec, int threads,
                                        std::shared_ptr<const Vocabulary> vocab) {
    spec.validate();
    if (vocab && vocab->size() != spec.V)
        throw std::invalid_argument("supplied vocabulary size does not match spec.V");

    Corpus corpus;
    corpus.vocab = vocab ? std::move(vocab) : synthetic_vocab(spec.V);
    corpus.docs.resize(spec.T);
    const MatrixD cdf = topic_cdfs(spec.phi);

    const int nt = resolve_threads(threads);
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int d = 0; d < spec.T; ++d) corpus.docs[d] = sample_document(spec, cdf, d);

    return {std::move(corpus), truth_of(spec)};
}

std::pair<Corpus, GroundTruth> generate_serial(const TtmcSpec& spec,
                                               std::shared_ptr<const Vocabulary> vocab) {
    spec.validate();
    if (vocab && vocab->size() != spec.V)
        throw std::invalid_argument("supplied vocabulary size does not match spec.V");

    Corpus corpus;
    corpus.vocab = vocab ? std::move(vocab) : synthetic_vocab(spec.V);
    corpus.docs.reserve(spec.T);
    const MatrixD cdf = topic_cdfs(spec.phi);
    for (int d = 0; d < spec.T; ++d) corpus.docs.push_back(sample_document(spec, cdf, d));

    return {std::move(corpus), truth_of(spec)};
}

void save_ground_truth(const GroundTruth& truth, const std::string& path) {
    json j;
    j["changepoints"] = truth.changepoints;
    j["segment_alphas"] = truth.segment_alphas;
    j["V"] = truth.topics.rows;
    j["K"] = truth.topics.cols;
    std::vector<double> col_major;
    col_major.reserve(truth.topics.data.size());
    for (int k = 0; k < truth.topics.cols; ++k)
        for (int v = 0; v < truth.topics.rows; ++v) col_major.push_back(truth.topics(v, k));
    j["topics"] = std::move(col_major);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ground truth file: " + path);
    json j;
    in >> j;
    GroundTruth truth;
    truth.changepoints = j.at("changepoints").get<std::vector<int>>();
    truth.segment_alphas = j.at("segment_alphas").get<std::vector<std::vector<double>>>();
    const int v = j.at("V").get<int>();
    const int k = j.at("K").get<int>();
    const auto flat = j.at("topics").get<std::vector<double>>();
    if (static_cast<int>(flat.size()) != v * k)
        throw std::runtime_error(path + ": topics array has wrong size");
    truth.topics = MatrixD(v, k);
    for (int kk = 0; kk < k; ++kk)
        for (int vv = 0; vv < v; ++vv) truth.topics(vv, kk) = flat[kk * v + vv];
    return truth;
}

}  // namespace ttmc
