#include "ttmc/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <omp.h>

#include "ttmc/parallel.hpp"
#include "ttmc/rng.hpp"
#include "ttmc/synthgen.hpp"

using nlohmann::json;

namespace ttmc {

double ThresholdTable::at(int length) const {
    if (lengths.empty()) throw std::logic_error("empty threshold table");
    if (length <= lengths.front()) return values.front();
    if (length >= lengths.back()) return values.back();
    const auto it = std::lower_bound(lengths.begin(), lengths.end(), length);
    const std::size_t hi = static_cast<std::size_t>(it - lengths.begin());
    if (lengths[hi] == length) return values[hi];
    const std::size_t lo = hi - 1;
    const double w = (std::log(length) - std::log(lengths[lo])) /
                     (std::log(lengths[hi]) - std::log(lengths[lo]));
    const double a = values[lo], b = values[hi];
    if (a > 0.0 && b > 0.0) return std::exp((1.0 - w) * std::log(a) + w * std::log(b));
    return (1.0 - w) * a + w * b;  // linear fallback near zero thresholds
}

std::vector<int> threshold_grid(int delta, int len_max, double grid_ratio) {
    if (delta < 4) throw std::invalid_argument("delta must be at least 4");
    if (len_max < delta) throw std::invalid_argument("len_max must be at least delta");
    if (grid_ratio <= 1.0) throw std::invalid_argument("grid ratio must exceed 1");
    std::vector<int> grid;
    int len = delta;
    while (len < len_max) {
        grid.push_back(len);
        len = std::max(len + 1, static_cast<int>(std::lround(len * grid_ratio)));
    }
    grid.push_back(len_max);
    return grid;
}

namespace {

double quantile_nearest_rank(std::vector<double>& xs, double eta) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    std::size_t idx = static_cast<std::size_t>(std::ceil(eta * static_cast<double>(n)));
    if (idx == 0) idx = 1;
    if (idx > n) idx = n;
    return xs[idx - 1];
}

// Interleaving permutation of [s, s + len - 1]: even offsets fill the
// left half, odd offsets the right; odd trailing element dropped.
std::vector<int> interleaved_rows(int s, int len) {
    const int len_even = len - (len % 2);
    const int half = len_even / 2;
    std::vector<int> rows(len_even);
    for (int i = 0; i < half; ++i) {
        rows[i] = s + 2 * i;
        rows[half + i] = s + 2 * i + 1;
    }
    return rows;
}

double permuted_score_quantile(const TopicCounts& z, int len, const CalibrateOptions& options,
                               std::uint64_t task_seed) {
    Rng rng(task_seed);
    std::vector<double> scores;
    scores.reserve(options.num_intervals);
    std::vector<int> shuffled(len);
    for (int i = 0; i < options.num_intervals; ++i) {
        const int s = static_cast<int>(rng.uniform_int(z.rows - len + 1));
        if (options.scheme == PermutationScheme::Interleave) {
            scores.push_back(lr_statistic_rows(z, interleaved_rows(s, len), options.mle).value);
        } else {
            std::iota(shuffled.begin(), shuffled.end(), s);
            rng.shuffle(shuffled);
            scores.push_back(lr_statistic_rows(z, shuffled, options.mle).value);
        }
    }
    return quantile_nearest_rank(scores, options.eta);
}

void validate_inputs(const TopicCounts& z, int delta, const CalibrateOptions& options) {
    if (delta < 4) throw std::invalid_argument("delta must be at least 4");
    if (!(options.eta > 0.0) || options.eta > 1.0)
        throw std::invalid_argument("eta must lie in (0, 1]");
    if (options.num_intervals < 1) throw std::invalid_argument("num_intervals must be positive");
    const int len_max = options.len_max > 0 ? options.len_max : z.rows;
    if (len_max > z.rows)
        throw std::invalid_argument("calibration length exceeds the corpus length");
    if (delta > len_max) throw std::invalid_argument("delta exceeds the maximum length");
}

ThresholdTable make_table(int delta, double eta, int num_intervals, std::uint64_t seed,
                          std::vector<int> grid) {
    ThresholdTable table;
    table.delta = delta;
    table.eta = eta;
    table.num_intervals = num_intervals;
    table.seed = seed;
    table.lengths = std::move(grid);
    table.values.assign(table.lengths.size(), 0.0);
    return table;
}

}  // namespace

ThresholdTable calibrate_permutation(const TopicCounts& z, int delta,
                                     const CalibrateOptions& options) {
    validate_inputs(z, delta, options);
    const int len_max = options.len_max > 0 ? options.len_max : z.rows;
    ThresholdTable table = make_table(delta, options.eta, options.num_intervals, options.seed,
                                      threshold_grid(delta, len_max, options.grid_ratio));

    const int n = static_cast<int>(table.lengths.size());
    const int nt = resolve_threads(options.threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
    for (int i = 0; i < n; ++i)
        table.values[i] = permuted_score_quantile(z, table.lengths[i], options,
                                                  derive_seed(options.seed, 0xca1 + table.lengths[i]));
    return table;
}

ThresholdTable calibrate_permutation_serial(const TopicCounts& z, int delta,
                                            const CalibrateOptions& options) {
    validate_inputs(z, delta, options);
    const int len_max = options.len_max > 0 ? options.len_max : z.rows;
    ThresholdTable table = make_table(delta, options.eta, options.num_intervals, options.seed,
                                      threshold_grid(delta, len_max, options.grid_ratio));
    for (std::size_t i = 0; i < table.lengths.size(); ++i)
        table.values[i] = permuted_score_quantile(z, table.lengths[i], options,
                                                  derive_seed(options.seed, 0xca1 + table.lengths[i]));
    return table;
}

ThresholdTable calibrate_simulation(const TopicModel& model, int t, int doc_len_min,
                                    int doc_len_max, int delta, const CalibrateOptions& options) {
    if (t < delta) throw std::invalid_argument("simulation length must be at least delta");

    TtmcSpec spec;
    spec.T = t;
    spec.V = model.phi.rows;
    spec.K = model.K;
    spec.doc_len_min = doc_len_min;
    spec.doc_len_max = doc_len_max;
    spec.alphas = {model.alpha_fit};
    spec.phi = model.phi;
    spec.seed = derive_seed(options.seed, 0x51b);

    auto [corpus, truth] = generate(spec, options.threads);
    (void)truth;
    const TopicCounts z = estimate_topic_counts(model, corpus, options.threads);
    validate_inputs(z, delta, options);

    const int len_max = options.len_max > 0 ? options.len_max : z.rows;
    ThresholdTable table = make_table(delta, options.eta, options.num_intervals, options.seed,
                                      threshold_grid(delta, len_max, options.grid_ratio));

    const int n = static_cast<int>(table.lengths.size());
    const int nt = resolve_threads(options.threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
    for (int i = 0; i < n; ++i) {
        const int len = table.lengths[i];
        Rng rng(derive_seed(options.seed, 0x51b2 + len));
        std::vector<double> scores;
        scores.reserve(options.num_intervals);
        for (int j = 0; j < options.num_intervals; ++j) {
            const int s = static_cast<int>(rng.uniform_int(z.rows - len + 1));
            scores.push_back(lr_statistic(z, {s, s + len - 1}, options.mle).value);
        }
        table.values[i] = quantile_nearest_rank(scores, options.eta);
    }
    return table;
}

ThresholdTable power_law_envelope(const ThresholdTable& table, int extend_to_len,
                                  double exponent) {
    if (table.lengths.empty()) throw std::invalid_argument("empty threshold table");
    if (!(exponent > 0.0)) throw std::invalid_argument("envelope exponent must be positive");
    double c = 0.0;
    for (std::size_t i = 0; i < table.lengths.size(); ++i)
        c = std::max(c, table.values[i] * std::pow(static_cast<double>(table.lengths[i]), exponent));

    ThresholdTable out = table;
    int len = table.lengths.back();
    while (len < extend_to_len) {
        len = std::max(len + 1, static_cast<int>(std::lround(len * 1.25)));
        if (len > extend_to_len) len = extend_to_len;
        out.lengths.push_back(len);
        out.values.push_back(0.0);
    }
    for (std::size_t i = 0; i < out.lengths.size(); ++i)
        out.values[i] = c / std::pow(static_cast<double>(out.lengths[i]), exponent);
    return out;
}

void save_thresholds_csv(const ThresholdTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    json meta;
    meta["eta"] = table.eta;
    meta["num_intervals"] = table.num_intervals;
    meta["seed"] = table.seed;
    meta["delta"] = table.delta;
    out << "# " << meta.dump() << "\n";
    out << "length,threshold\n";
    char buf[64];
    for (std::size_t i = 0; i < table.lengths.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%d,%.17g\n", table.lengths[i], table.values[i]);
        out << buf;
    }
}

ThresholdTable load_thresholds_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open thresholds file: " + path);
    ThresholdTable table;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw std::runtime_error(path + ": missing JSON header line");
    const json meta = json::parse(line.substr(2));
    table.eta = meta.value("eta", 0.5);
    table.num_intervals = meta.value("num_intervals", 0);
    table.seed = meta.value("seed", std::uint64_t{0});
    table.delta = meta.value("delta", 0);
    std::getline(in, line);  // column header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        int len;
        char comma;
        double value;
        if (!(row >> len >> comma >> value)) throw std::runtime_error(path + ": malformed row: " + line);
        table.lengths.push_back(len);
        table.values.push_back(value);
    }
    if (table.lengths.empty()) throw std::runtime_error(path + ": no threshold rows");
    return table;
}

}  // namespace ttmc
