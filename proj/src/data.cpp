#include "diss/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace diss {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

bool parse_double(const std::string& raw, double& out) {
    const std::string s = trim(raw);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && std::isfinite(out);
}

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        s += diff * diff;
    }
    return s;
}

}  // namespace

int Dataset::label(std::size_t i) const {
    const auto& lab = instances[i].label;
    if (!lab.has_value()) throw std::logic_error("instance has no label");
    return *lab;
}

Dataset load_csv(const std::string& path, const LabelColumn& label_column, bool has_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);

    Dataset ds;
    ds.name = path;

    std::string line;
    std::size_t line_no = 0;
    std::size_t n_columns = 0;
    int label_index = -1;

    if (has_header) {
        if (!std::getline(in, line)) throw std::runtime_error("empty csv file: " + path);
        ++line_no;
        const auto header = split_line(line);
        n_columns = header.size();
        if (std::holds_alternative<std::string>(label_column)) {
            const auto& want = std::get<std::string>(label_column);
            for (std::size_t c = 0; c < header.size(); ++c) {
                if (trim(header[c]) == want) label_index = static_cast<int>(c);
            }
            if (label_index < 0) {
                throw std::runtime_error("label column '" + want + "' not found in header");
            }
        } else {
            label_index = std::get<int>(label_column);
        }
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (static_cast<int>(c) != label_index) ds.feature_names.push_back(trim(header[c]));
        }
    } else {
        if (std::holds_alternative<std::string>(label_column)) {
            throw std::runtime_error("label column by name requires a header row");
        }
        label_index = std::get<int>(label_column);
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (n_columns == 0) {
            n_columns = cells.size();
            if (label_index < 0 || label_index >= static_cast<int>(n_columns)) {
                throw std::runtime_error("label column index out of range");
            }
            for (std::size_t c = 0; c < n_columns; ++c) {
                if (static_cast<int>(c) != label_index) {
                    ds.feature_names.push_back("f" + std::to_string(c));
                }
            }
        }
        if (cells.size() != n_columns) {
            throw std::runtime_error("malformed row at line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(n_columns) + " cells, got " +
                                     std::to_string(cells.size()));
        }
        Instance inst;
        inst.features.reserve(n_columns - 1);
        for (std::size_t c = 0; c < n_columns; ++c) {
            double v;
            if (!parse_double(cells[c], v)) {
                throw std::runtime_error("malformed row at line " + std::to_string(line_no) +
                                         ": cell '" + cells[c] + "' is not a number");
            }
            if (static_cast<int>(c) == label_index) {
                if (v != 0.0 && v != 1.0) {
                    throw std::runtime_error("non-binary label '" + cells[c] + "' at line " +
                                             std::to_string(line_no));
                }
                inst.label = static_cast<int>(v);
            } else {
                inst.features.push_back(v);
            }
        }
        ds.instances.push_back(std::move(inst));
    }
    if (ds.instances.empty()) throw std::runtime_error("csv file has no data rows: " + path);
    if (label_index >= static_cast<int>(n_columns)) {
        throw std::runtime_error("label column index out of range");
    }
    return ds;
}

std::pair<Dataset, StandardizeStats> standardize(const Dataset& ds) {
    const std::size_t n = ds.size();
    const std::size_t d = ds.dim();
    StandardizeStats stats;
    stats.mean.assign(d, 0.0);
    stats.stddev.assign(d, 0.0);
    for (const auto& inst : ds.instances) {
        for (std::size_t j = 0; j < d; ++j) stats.mean[j] += inst.features[j];
    }
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] /= static_cast<double>(n);
    for (const auto& inst : ds.instances) {
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = inst.features[j] - stats.mean[j];
            stats.stddev[j] += diff * diff;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        stats.stddev[j] = std::sqrt(stats.stddev[j] / static_cast<double>(n));
    }
    return {apply_standardize(ds, stats), stats};
}

Dataset apply_standardize(const Dataset& ds, const StandardizeStats& stats) {
    if (stats.mean.size() != ds.dim()) throw std::invalid_argument("transform dimension mismatch");
    Dataset out = ds;
    for (auto& inst : out.instances) {
        for (std::size_t j = 0; j < inst.features.size(); ++j) {
            inst.features[j] = stats.stddev[j] > 0.0
                                   ? (inst.features[j] - stats.mean[j]) / stats.stddev[j]
                                   : 0.0;
        }
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    if (spec.test_fraction <= 0.0 || spec.test_fraction >= 1.0) {
        throw std::invalid_argument("test_fraction must be in (0,1)");
    }
    const std::size_t n = ds.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.seed);
    std::shuffle(order.begin(), order.end(), rng);

    auto n_test = static_cast<std::size_t>(std::lround(spec.test_fraction * static_cast<double>(n)));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

    Dataset train, test;
    train.name = ds.name;
    test.name = ds.name;
    train.feature_names = ds.feature_names;
    test.feature_names = ds.feature_names;
    for (std::size_t i = 0; i < n; ++i) {
        (i < n_test ? test : train).instances.push_back(ds.instances[order[i]]);
    }
    return {std::move(train), std::move(test)};
}

Dataset subsample(const Dataset& ds, std::size_t cap, std::uint64_t seed) {
    if (cap == 0 || ds.size() <= cap) return ds;
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    Dataset out;
    out.name = ds.name;
    out.feature_names = ds.feature_names;
    out.instances.reserve(cap);
    for (std::size_t i = 0; i < cap; ++i) out.instances.push_back(ds.instances[order[i]]);
    return out;
}

Clustering kmeans(const Dataset& ds, int k, std::uint64_t seed, int max_iter) {
    const std::size_t n = ds.size();
    const std::size_t d = ds.dim();
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (n < static_cast<std::size_t>(k)) throw std::invalid_argument("k exceeds dataset size");

    Rng rng(seed);
    Clustering cl;
    cl.k = k;
    cl.assignments.assign(n, 0);

    // k-means++ seeding
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    cl.centroids.push_back(ds.features(first(rng)));
    std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());
    while (cl.centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            min_sq[i] = std::min(min_sq[i], sq_distance(ds.features(i), cl.centroids.back()));
            total += min_sq[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += min_sq[i];
                if (cum >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        cl.centroids.push_back(ds.features(pick));
    }

    std::vector<std::size_t> counts(k, 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_sq = sq_distance(ds.features(i), cl.centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double sq = sq_distance(ds.features(i), cl.centroids[c]);
                if (sq < best_sq) {
                    best_sq = sq;
                    best = c;
                }
            }
            if (cl.assignments[i] != best) {
                cl.assignments[i] = best;
                changed = true;
            }
        }

        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) ++counts[cl.assignments[i]];
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            std::size_t farthest = 0;
            double far_sq = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[cl.assignments[i]] <= 1) continue;
                const double sq = sq_distance(ds.features(i), cl.centroids[cl.assignments[i]]);
                if (sq > far_sq) {
                    far_sq = sq;
                    farthest = i;
                }
            }
            --counts[cl.assignments[farthest]];
            cl.assignments[farthest] = c;
            counts[c] = 1;
            changed = true;
        }

        for (auto& centroid : cl.centroids) std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& x = ds.features(i);
            auto& centroid = cl.centroids[cl.assignments[i]];
            for (std::size_t j = 0; j < d; ++j) centroid[j] += x[j];
        }
        for (int c = 0; c < k; ++c) {
            for (std::size_t j = 0; j < d; ++j) {
                cl.centroids[c][j] /= static_cast<double>(counts[c]);
            }
        }

        if (!changed && iter > 0) break;
    }
    return cl;
}

double kmeans_objective(const Dataset& ds, const Clustering& clustering) {
    double total = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        total += sq_distance(ds.features(i), clustering.centroids[clustering.assignments[i]]);
    }
    return total;
}

int nearest_centroid(const Clustering& clustering, const std::vector<double>& x) {
    int best = 0;
    double best_sq = sq_distance(x, clustering.centroids[0]);
    for (int c = 1; c < clustering.k; ++c) {
        const double sq = sq_distance(x, clustering.centroids[c]);
        if (sq < best_sq) {
            best_sq = sq;
            best = c;
        }
    }
    return best;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
    for (auto j : spec.informative) {
        if (j >= spec.d) throw std::invalid_argument("informative feature index out of range");
    }
    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Dataset ds;
    ds.name = "synthetic";
    for (std::size_t j = 0; j < spec.d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    ds.instances.reserve(spec.n);
    const double denom = std::sqrt(static_cast<double>(std::max<std::size_t>(spec.informative.size(), 1)));
    for (std::size_t i = 0; i < spec.n; ++i) {
        Instance inst;
        inst.features.resize(spec.d);
        for (std::size_t j = 0; j < spec.d; ++j) inst.features[j] = normal(rng);
        double score = 0.0;
        for (auto j : spec.informative) score += inst.features[j];
        const double p = spec.informative.empty() ? 0.5 : sigmoid(spec.slope * score / denom);
        inst.label = unif(rng) < p ? 1 : 0;
        ds.instances.push_back(std::move(inst));
    }
    return ds;
}

}  // namespace diss
