#include "ttmc/lsa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>
#include <omp.h>

#include "ttmc/cpstat.hpp"
#include "ttmc/parallel.hpp"
#include "ttmc/rng.hpp"

using nlohmann::json;

namespace ttmc {

namespace {

// Document-major sparse view of the V x T term-frequency matrix: entry
// (word, count) lists per document.
struct SparseTermDoc {
    int v = 0;
    int t = 0;
    std::vector<std::vector<std::pair<int, double>>> docs;
};

SparseTermDoc build_term_doc(const Corpus& corpus) {
    SparseTermDoc a;
    a.v = corpus.vocab_size();
    a.t = corpus.num_docs();
    a.docs.resize(a.t);
    std::vector<double> scratch(a.v, 0.0);
    std::vector<int> touched;
    for (int d = 0; d < a.t; ++d) {
        touched.clear();
        for (auto id : corpus.docs[d].token_ids) {
            if (scratch[id] == 0.0) touched.push_back(static_cast<int>(id));
            scratch[id] += 1.0;
        }
        std::sort(touched.begin(), touched.end());
        auto& entries = a.docs[d];
        entries.reserve(touched.size());
        for (int w : touched) {
            entries.emplace_back(w, scratch[w]);
            scratch[w] = 0.0;
        }
    }
    return a;
}

// Cyclic Jacobi eigensolver for a symmetric matrix; eigenvalues sorted
// descending, eigenvectors in columns of vecs.
void jacobi_eigen(MatrixD g, std::vector<double>& values, MatrixD& vecs) {
    const int n = g.rows;
    vecs = MatrixD(n, n);
    for (int i = 0; i < n; ++i) vecs(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += g(p, q) * g(p, q);
        if (off < 1e-28 * n * n) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = g(p, q);
                if (apq == 0.0) continue;
                const double app = g(p, p), aqq = g(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double gip = g(i, p), giq = g(i, q);
                    g(i, p) = c * gip - s * giq;
                    g(i, q) = s * gip + c * giq;
                }
                for (int i = 0; i < n; ++i) {
                    const double gpi = g(p, i), gqi = g(q, i);
                    g(p, i) = c * gpi - s * gqi;
                    g(q, i) = s * gpi + c * gqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = vecs(i, p), viq = vecs(i, q);
                    vecs(i, p) = c * vip - s * viq;
                    vecs(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    values.resize(n);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(n);
    for (int i = 0; i < n; ++i) diag[i] = g(i, i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return diag[a] > diag[b]; });
    MatrixD sorted(n, n);
    for (int j = 0; j < n; ++j) {
        values[j] = diag[order[j]];
        for (int i = 0; i < n; ++i) sorted(i, j) = vecs(i, order[j]);
    }
    vecs = std::move(sorted);
}

// Modified Gram-Schmidt, two passes. Columns that vanish are replaced
// with zero (they correspond to exhausted rank).
void orthonormalize(MatrixD& q) {
    const int n = q.rows, b = q.cols;
    for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < b; ++j) {
            for (int i = 0; i < j; ++i) {
                double dot = 0.0;
                for (int r = 0; r < n; ++r) dot += q(r, i) * q(r, j);
                for (int r = 0; r < n; ++r) q(r, j) -= dot * q(r, i);
            }
            double norm2 = 0.0;
            for (int r = 0; r < n; ++r) norm2 += q(r, j) * q(r, j);
            const double norm = std::sqrt(norm2);
            if (norm > 1e-300) {
                for (int r = 0; r < n; ++r) q(r, j) /= norm;
            } else {
                for (int r = 0; r < n; ++r) q(r, j) = 0.0;
            }
        }
    }
}

MatrixD gram_matvec(const MatrixD& g, const MatrixD& q, int threads) {
    const int n = g.rows, b = q.cols;
    MatrixD out(n, b);
    const int nt = resolve_threads(threads);
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < b; ++j) {
            double acc = 0.0;
            for (int r = 0; r < n; ++r) acc += g(i, r) * q(r, j);
            out(i, j) = acc;
        }
    }
    return out;
}

}  // namespace

LsaEmbedding lsa_embed(const Corpus& corpus, int k, int spectrum, int threads) {
    const int v = corpus.vocab_size();
    const int t = corpus.num_docs();
    const int min_vt = std::min(v, t);
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    if (k > min_vt) throw std::invalid_argument("k exceeds min(V, T)");

    const int n_vals = std::min(min_vt, std::max(k, spectrum > 0 ? spectrum : 50));
    const SparseTermDoc a = build_term_doc(corpus);

    // Gram matrix on the smaller side.
    const bool gram_on_words = v <= t;
    const int n = gram_on_words ? v : t;
    MatrixD g(n, n);
    if (gram_on_words) {
        for (int d = 0; d < t; ++d)
            for (const auto& [wi, ci] : a.docs[d])
                for (const auto& [wj, cj] : a.docs[d]) g(wi, wj) += ci * cj;
    } else {
        const int nt = resolve_threads(threads);
#pragma omp parallel for schedule(dynamic, 16) num_threads(nt)
        for (int d1 = 0; d1 < t; ++d1) {
            for (int d2 = d1; d2 < t; ++d2) {
                // sparse dot of two sorted entry lists
                double dot = 0.0;
                std::size_t i = 0, j = 0;
                const auto& e1 = a.docs[d1];
                const auto& e2 = a.docs[d2];
                while (i < e1.size() && j < e2.size()) {
                    if (e1[i].first < e2[j].first)
                        ++i;
                    else if (e2[j].first < e1[i].first)
                        ++j;
                    else
                        dot += e1[i++].second * e2[j++].second;
                }
                g(d1, d2) = dot;
                g(d2, d1) = dot;
            }
        }
    }

    std::vector<double> eigvals;
    MatrixD basis;  // n x n_vals eigenvector estimates
    if (n_vals == n) {
        jacobi_eigen(g, eigvals, basis);
    } else {
        // Block subspace iteration with a Rayleigh-Ritz step.
        MatrixD q(n, n_vals);
        Rng rng(0x15aULL);
        for (auto& x : q.data) x = rng.normal();
        orthonormalize(q);

        std::vector<double> prev(n_vals, 0.0);
        MatrixD ritz_vecs;
        for (int iter = 0; iter < 400; ++iter) {
            MatrixD z = gram_matvec(g, q, threads);
            orthonormalize(z);
            q = std::move(z);
            if (iter % 5 == 4 || iter == 399) {
                MatrixD gq = gram_matvec(g, q, threads);
                MatrixD m(n_vals, n_vals);
                for (int i = 0; i < n_vals; ++i)
                    for (int j = 0; j < n_vals; ++j) {
                        double acc = 0.0;
                        for (int r = 0; r < n; ++r) acc += q(r, i) * gq(r, j);
                        m(i, j) = acc;
                    }
                jacobi_eigen(std::move(m), eigvals, ritz_vecs);
                double change = 0.0, scale = std::max(std::fabs(eigvals[0]), 1e-300);
                for (int j = 0; j < n_vals; ++j)
                    change = std::max(change, std::fabs(eigvals[j] - prev[j]) / scale);
                prev = eigvals;
                if (change < 1e-13) break;
            }
        }
        // Rotate the subspace basis into Ritz vectors.
        basis = MatrixD(n, n_vals);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n_vals; ++j) {
                double acc = 0.0;
                for (int r = 0; r < n_vals; ++r) acc += q(i, r) * ritz_vecs(r, j);
                basis(i, j) = acc;
            }
    }

    LsaEmbedding emb;
    emb.k = k;
    emb.singular_values.resize(n_vals);
    for (int j = 0; j < n_vals; ++j)
        emb.singular_values[j] = std::sqrt(std::max(eigvals[j], 0.0));

    emb.left_vectors = MatrixD(v, k);
    emb.doc_vectors = MatrixD(t, k);
    const double sigma_floor = 1e-12 * std::max(emb.singular_values[0], 1e-300);

    if (gram_on_words) {
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < v; ++i) emb.left_vectors(i, j) = basis(i, j);
    } else {
        // u_j = A vr_j / sigma_j
        for (int j = 0; j < k; ++j) {
            if (emb.singular_values[j] <= sigma_floor) continue;
            for (int d = 0; d < t; ++d)
                for (const auto& [w, c] : a.docs[d])
                    emb.left_vectors(w, j) += c * basis(d, j);
            for (int i = 0; i < v; ++i) emb.left_vectors(i, j) /= emb.singular_values[j];
        }
    }

    // Orient each left singular vector: largest-magnitude entry positive.
    std::vector<double> flip(k, 1.0);
    for (int j = 0; j < k; ++j) {
        int arg = 0;
        for (int i = 1; i < v; ++i)
            if (std::fabs(emb.left_vectors(i, j)) > std::fabs(emb.left_vectors(arg, j))) arg = i;
        if (emb.left_vectors(arg, j) < 0.0) {
            flip[j] = -1.0;
            for (int i = 0; i < v; ++i) emb.left_vectors(i, j) = -emb.left_vectors(i, j);
        }
    }

    // doc_vectors = A^T U
    if (gram_on_words) {
        const int nt = resolve_threads(threads);
#pragma omp parallel for schedule(static) num_threads(nt)
        for (int d = 0; d < t; ++d)
            for (int j = 0; j < k; ++j) {
                double acc = 0.0;
                for (const auto& [w, c] : a.docs[d]) acc += c * emb.left_vectors(w, j);
                emb.doc_vectors(d, j) = acc;
            }
    } else {
        // A^T u_j = A^T A vr_j / sigma_j = sigma_j vr_j (up to the flip)
        for (int d = 0; d < t; ++d)
            for (int j = 0; j < k; ++j)
                emb.doc_vectors(d, j) =
                    flip[j] * emb.singular_values[j] * basis(d, j);
    }
    return emb;
}

ThresholdTable calibrate_cusum_shuffle(const MatrixD& xs, int delta,
                                       const CalibrateOptions& options) {
    if (delta < 2) throw std::invalid_argument("delta must be at least 2 for the CUSUM");
    if (!(options.eta > 0.0) || options.eta > 1.0)
        throw std::invalid_argument("eta must lie in (0, 1]");
    const int len_max = options.len_max > 0 ? options.len_max : xs.rows;
    if (len_max > xs.rows) throw std::invalid_argument("calibration length exceeds the series");

    ThresholdTable table;
    table.delta = delta;
    table.eta = options.eta;
    table.num_intervals = options.num_intervals;
    table.seed = options.seed;
    table.lengths = threshold_grid(std::max(delta, 4), std::max(len_max, 4), options.grid_ratio);

    const int n = static_cast<int>(table.lengths.size());
    table.values.assign(n, 0.0);
    const int nt = resolve_threads(options.threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
    for (int i = 0; i < n; ++i) {
        const int len = table.lengths[i];
        Rng rng(derive_seed(options.seed, 0xc5c + len));
        std::vector<double> scores(options.num_intervals);
        std::vector<int> rows(len);
        MatrixD scratch(len, xs.cols);
        for (int j = 0; j < options.num_intervals; ++j) {
            const int s = static_cast<int>(rng.uniform_int(xs.rows - len + 1));
            std::iota(rows.begin(), rows.end(), s);
            rng.shuffle(rows);
            for (int r = 0; r < len; ++r)
                for (int c = 0; c < xs.cols; ++c) scratch(r, c) = xs(rows[r], c);
            scores[j] = cusum_statistic(scratch, 0, len - 1).value;
        }
        std::sort(scores.begin(), scores.end());
        std::size_t idx = static_cast<std::size_t>(std::ceil(options.eta * scores.size()));
        idx = std::clamp<std::size_t>(idx, 1, scores.size());
        table.values[i] = scores[idx - 1];
    }
    return table;
}

ChangepointResult lsa_detect(const LsaEmbedding& embedding, const LsaDetectConfig& config) {
    const MatrixD& xs = embedding.doc_vectors;
    const int t = xs.rows;
    if (config.delta < 2 || config.delta > t)
        throw std::invalid_argument("invalid delta for the embedding length");

    CalibrateOptions calib;
    calib.num_intervals = config.calib_num_intervals;
    calib.eta = config.eta;
    calib.seed = derive_seed(config.seed, 0xca2);
    calib.grid_ratio = config.calib_grid_ratio;
    calib.len_max = config.calib_len_max;
    if (calib.len_max == 0 && config.threshold_envelope)
        calib.len_max = std::min(t, std::max(3 * config.delta, 60));
    calib.threads = config.threads;
    ThresholdTable thresholds = calibrate_cusum_shuffle(xs, config.delta, calib);
    if (config.threshold_envelope) thresholds = power_law_envelope(thresholds, t, 0.5);

    const long num_intervals = config.num_intervals > 0 ? config.num_intervals : 5L * t;
    Rng rng(derive_seed(config.seed, 0x5a4));
    std::vector<Interval> intervals;
    intervals.reserve(num_intervals);
    for (long i = 0; i < num_intervals; ++i) {
        for (;;) {
            int s = static_cast<int>(rng.uniform_int(t));
            int e = static_cast<int>(rng.uniform_int(t));
            if (s > e) std::swap(s, e);
            if (e - s + 1 >= config.delta) {
                intervals.push_back({s, e});
                break;
            }
        }
    }

    std::vector<CusumResult> scores(intervals.size());
    const int nt = resolve_threads(config.threads);
#pragma omp parallel for schedule(dynamic, 16) num_threads(nt)
    for (std::size_t i = 0; i < intervals.size(); ++i)
        scores[i] = cusum_statistic(xs, intervals[i].s, intervals[i].e);

    ScoredIntervalSet retained;
    retained.seed = config.seed;
    retained.num_sampled = num_intervals;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        // zero CUSUM carries no evidence (constant data), never retained
        if (scores[i].value > 0.0 && scores[i].value >= thresholds.at(intervals[i].length())) {
            retained.intervals.push_back(intervals[i]);
            retained.scores.push_back(scores[i].value);
            retained.emit_points.push_back(scores[i].argmax_t);
        }
    }

    ChangepointResult result = mwbs(0, t - 1, retained);
    result.changepoints_full = result.changepoints;  // LSA runs on the source corpus directly
    json j;
    j["method"] = "lsa";
    j["k"] = embedding.k;
    j["delta"] = config.delta;
    j["eta"] = config.eta;
    j["num_intervals"] = num_intervals;
    j["calib_num_intervals"] = config.calib_num_intervals;
    j["seed"] = config.seed;
    result.config_snapshot = j.dump();
    return result;
}

void save_embedding(const LsaEmbedding& embedding, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    json header;
    header["T"] = embedding.doc_vectors.rows;
    header["V"] = embedding.left_vectors.rows;
    header["k"] = embedding.k;
    header["num_singular_values"] = embedding.singular_values.size();
    out << header.dump() << '\n';
    auto write_doubles = [&](const std::vector<double>& xs) {
        out.write(reinterpret_cast<const char*>(xs.data()),
                  static_cast<std::streamsize>(xs.size() * sizeof(double)));
    };
    write_doubles(embedding.doc_vectors.data);
    write_doubles(embedding.left_vectors.data);
    write_doubles(embedding.singular_values);
    if (!out) throw std::runtime_error("write failure: " + path);
}

LsaEmbedding load_embedding(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open embedding file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header");
    const json header = json::parse(line);
    LsaEmbedding emb;
    const int t = header.at("T").get<int>();
    const int v = header.at("V").get<int>();
    emb.k = header.at("k").get<int>();
    const std::size_t n_sigma = header.at("num_singular_values").get<std::size_t>();
    emb.doc_vectors = MatrixD(t, emb.k);
    emb.left_vectors = MatrixD(v, emb.k);
    emb.singular_values.resize(n_sigma);
    auto read_doubles = [&](std::vector<double>& xs) {
        in.read(reinterpret_cast<char*>(xs.data()),
                static_cast<std::streamsize>(xs.size() * sizeof(double)));
    };
    read_doubles(emb.doc_vectors.data);
    read_doubles(emb.left_vectors.data);
    read_doubles(emb.singular_values);
    if (!in) throw std::runtime_error(path + ": truncated embedding file");
    return emb;
}

void save_scree_csv(const LsaEmbedding& embedding, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "rank,singular_value\n";
    char buf[64];
    for (std::size_t i = 0; i < embedding.singular_values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, embedding.singular_values[i]);
        out << buf;
    }
}

}  // namespace ttmc
