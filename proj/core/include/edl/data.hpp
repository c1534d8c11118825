#pragma once

// Datasets of feature vectors with binary labels, synthetic generators for
// class overlap, label noise and dataset shift, and CSV persistence.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edl {

struct Sample {
  std::uint64_t id = 0;
  std::vector<double> features;
  int label = 0;
  std::optional<std::uint64_t> group;
  /// 1 when the label was flipped by the generator; synthetic data only.
  std::optional<int> noise_flag;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Samples sharing one feature dimension with unique ids. A dataset may be
/// empty only as the result of a split with a zero fraction.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Sample> samples, std::size_t feature_dim, std::string provenance = {});

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::string& provenance() const noexcept { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }

  Eigen::MatrixXd feature_matrix() const;
  std::vector<int> labels() const;
  std::vector<std::uint64_t> ids() const;
  std::size_t count_label(int label) const;

  /// Samples at the given positions, in the given order.
  Dataset subset(std::span<const std::size_t> positions) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.feature_dim_ == b.feature_dim_ && a.samples_ == b.samples_;
  }

 private:
  std::vector<Sample> samples_;
  std::size_t feature_dim_ = 0;
  std::string provenance_;
};

struct GaussianOverlapConfig {
  std::size_t n = 1000;
  std::size_t dim = 2;
  /// Distance between the two unit-variance class means.
  double separation = 2.0;
  double flip_rate = 0.0;
  /// Fraction of samples generated from the positive cluster.
  double positive_fraction = 0.5;
  /// When > 0, consecutive blocks of this many ids share a group id.
  std::size_t group_size = 0;
};

/// Two isotropic unit-variance Gaussians with means at -separation/2 and
/// +separation/2 along the first axis. Labels follow the generating cluster
/// and are then flipped independently with probability flip_rate.
Dataset gen_gaussian_overlap(const GaussianOverlapConfig& cfg, std::uint64_t seed);

/// Separation for which the Bayes-optimal ROC-AUC of the noise-free problem equals `auc`.
double separation_for_bayes_auc(double auc);

/// Bayes-optimal ROC-AUC of the noise-free problem, Phi(separation / sqrt(2)).
double bayes_auc_for_separation(double separation);

/// Unit-variance cluster centred offset_sigmas away from the mean of `base`,
/// displaced along the second axis (the first when dim == 1). Labels alternate.
Dataset gen_ood_probe(const Dataset& base, double offset_sigmas, std::size_t n, std::uint64_t seed);

struct SplitFractions {
  double train = 0.9;
  double val = 0.1;
  double test = 0.0;
};

/// Partitions groups (ids when a sample has no group) across the three
/// splits so that no group spans two of them.
std::array<Dataset, 3> split_by_group(const Dataset& d, const SplitFractions& fractions,
                                      std::uint64_t seed);

/// Thrown by load_csv; carries the 1-based line number of the offending row.
class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

void save_csv(const Dataset& d, const std::filesystem::path& path);
std::string to_csv_string(const Dataset& d);
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(const std::string& text, const std::string& provenance = {});

}  // namespace edl
