#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "diss/core.hpp"

namespace diss {

/// Fully labeled supervised dataset; all instances share dimensionality.
struct Dataset {
    std::vector<Instance> instances;
    std::string name;
    std::vector<std::string> feature_names;

    std::size_t size() const { return instances.size(); }
    std::size_t dim() const { return instances.empty() ? 0 : instances[0].dim(); }
    const std::vector<double>& features(std::size_t i) const { return instances[i].features; }
    int label(std::size_t i) const;
};

struct SplitSpec {
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct StandardizeStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // population; 0 marks a constant column
};

struct Clustering {
    int k = 1;
    std::vector<int> assignments;
    std::vector<std::vector<double>> centroids;
};

/// Label column addressed by header name or zero-based index.
using LabelColumn = std::variant<int, std::string>;

Dataset load_csv(const std::string& path, const LabelColumn& label_column, bool has_header);

/// Column-wise zero mean / unit population std; constant columns map to zero.
std::pair<Dataset, StandardizeStats> standardize(const Dataset& ds);
Dataset apply_standardize(const Dataset& ds, const StandardizeStats& stats);

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

/// Uniform row sample without replacement when the dataset exceeds `cap`.
Dataset subsample(const Dataset& ds, std::size_t cap, std::uint64_t seed);

/// Lloyd's algorithm with k-means++ seeding; empty clusters are repaired by
/// stealing the point farthest from its assigned centroid.
Clustering kmeans(const Dataset& ds, int k, std::uint64_t seed, int max_iter = 100);

double kmeans_objective(const Dataset& ds, const Clustering& clustering);

int nearest_centroid(const Clustering& clustering, const std::vector<double>& x);

struct SyntheticSpec {
    std::size_t n = 1000;
    std::size_t d = 8;
    std::uint64_t seed = 0;
    std::vector<std::size_t> informative;
    double slope = 4.0;
};

/// Gaussian features; the label is Bernoulli with a logistic link on the
/// normalized sum of the informative features (pure coin when none).
Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace diss
