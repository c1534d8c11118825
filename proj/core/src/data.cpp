#include "edl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace edl {

Dataset::Dataset(std::vector<Sample> samples, std::size_t feature_dim, std::string provenance)
    : samples_(std::move(samples)), feature_dim_(feature_dim), provenance_(std::move(provenance)) {
  std::unordered_set<std::uint64_t> seen;
  for (const auto& s : samples_) {
    if (s.features.size() != feature_dim_) {
      throw std::invalid_argument("Dataset: sample " + std::to_string(s.id) + " has " +
                                  std::to_string(s.features.size()) + " features, expected " +
                                  std::to_string(feature_dim_));
    }
    if (s.label != 0 && s.label != 1) {
      throw std::invalid_argument("Dataset: sample " + std::to_string(s.id) + " has non-binary label");
    }
    for (double f : s.features) {
      if (!std::isfinite(f)) {
        throw std::invalid_argument("Dataset: sample " + std::to_string(s.id) + " has a non-finite feature");
      }
    }
    if (!seen.insert(s.id).second) {
      throw std::invalid_argument("Dataset: duplicate id " + std::to_string(s.id));
    }
  }
}

Eigen::MatrixXd Dataset::feature_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(samples_.size()), static_cast<Eigen::Index>(feature_dim_));
  for (std::size_t r = 0; r < samples_.size(); ++r) {
    for (std::size_t c = 0; c < feature_dim_; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = samples_[r].features[c];
    }
  }
  return m;
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.label);
  return out;
}

std::vector<std::uint64_t> Dataset::ids() const {
  std::vector<std::uint64_t> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.id);
  return out;
}

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(samples_.begin(), samples_.end(), [label](const Sample& s) { return s.label == label; }));
}

Dataset Dataset::subset(std::span<const std::size_t> positions) const {
  std::vector<Sample> out;
  out.reserve(positions.size());
  for (auto p : positions) out.push_back(samples_.at(p));
  return Dataset(std::move(out), feature_dim_, provenance_);
}

Dataset gen_gaussian_overlap(const GaussianOverlapConfig& cfg, std::uint64_t seed) {
  if (cfg.dim < 1) throw std::invalid_argument("gen_gaussian_overlap: dim must be >= 1");
  if (!(cfg.flip_rate >= 0.0 && cfg.flip_rate < 0.5)) {
    throw std::invalid_argument("gen_gaussian_overlap: flip_rate must lie in [0, 0.5)");
  }
  if (!(cfg.positive_fraction > 0.0 && cfg.positive_fraction < 1.0)) {
    throw std::invalid_argument("gen_gaussian_overlap: positive_fraction must lie in (0, 1)");
  }
  if (!std::isfinite(cfg.separation) || cfg.separation < 0.0) {
    throw std::invalid_argument("gen_gaussian_overlap: separation must be finite and >= 0");
  }
  const auto n_pos = static_cast<std::size_t>(std::llround(cfg.positive_fraction * static_cast<double>(cfg.n)));
  if (n_pos < 2 || cfg.n - n_pos < 2) {
    throw std::invalid_argument("gen_gaussian_overlap: need at least 2 samples per class");
  }

  std::mt19937_64 rng(seed);
  std::vector<int> cluster(cfg.n, 0);
  std::fill(cluster.begin(), cluster.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
  std::shuffle(cluster.begin(), cluster.end(), rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution flip(cfg.flip_rate);
  const double half = 0.5 * cfg.separation;

  std::vector<Sample> samples;
  samples.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    Sample s;
    s.id = i;
    s.features.resize(cfg.dim);
    for (auto& f : s.features) f = normal(rng);
    s.features[0] += cluster[i] == 1 ? half : -half;
    const bool flipped = flip(rng);
    s.label = flipped ? 1 - cluster[i] : cluster[i];
    s.noise_flag = flipped ? 1 : 0;
    if (cfg.group_size > 0) s.group = i / cfg.group_size;
    samples.push_back(std::move(s));
  }

  std::ostringstream prov;
  prov << "gaussian_overlap(n=" << cfg.n << ",dim=" << cfg.dim << ",separation=" << cfg.separation
       << ",flip_rate=" << cfg.flip_rate << ",positive_fraction=" << cfg.positive_fraction
       << ",seed=" << seed << ")";
  return Dataset(std::move(samples), cfg.dim, prov.str());
}

double bayes_auc_for_separation(double separation) {
  return 0.5 * std::erfc(-separation / 2.0);
}

double separation_for_bayes_auc(double auc) {
  if (!(auc >= 0.5 && auc < 1.0)) {
    throw std::invalid_argument("separation_for_bayes_auc: auc must lie in [0.5, 1)");
  }
  // Bisection on the monotone map separation -> Phi(separation / sqrt 2).
  double lo = 0.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bayes_auc_for_separation(mid) < auc ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Dataset gen_ood_probe(const Dataset& base, double offset_sigmas, std::size_t n, std::uint64_t seed) {
  if (base.empty()) throw std::invalid_argument("gen_ood_probe: base dataset is empty");
  const std::size_t dim = base.feature_dim();
  std::vector<double> centre(dim, 0.0);
  for (const auto& s : base.samples()) {
    for (std::size_t c = 0; c < dim; ++c) centre[c] += s.features[c];
  }
  for (auto& c : centre) c /= static_cast<double>(base.size());
  centre[dim >= 2 ? 1 : 0] += offset_sigmas;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Sample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = i;
    s.features.resize(dim);
    for (std::size_t c = 0; c < dim; ++c) s.features[c] = centre[c] + normal(rng);
    s.label = static_cast<int>(i % 2);
    samples.push_back(std::move(s));
  }
  std::ostringstream prov;
  prov << "ood_probe(offset_sigmas=" << offset_sigmas << ",n=" << n << ",seed=" << seed << ")";
  return Dataset(std::move(samples), dim, prov.str());
}

std::array<Dataset, 3> split_by_group(const Dataset& d, const SplitFractions& fractions,
                                      std::uint64_t seed) {
  const std::array<double, 3> frac{fractions.train, fractions.val, fractions.test};
  for (double f : frac) {
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("split_by_group: fractions must lie in [0, 1]");
  }
  if (std::abs(frac[0] + frac[1] + frac[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split_by_group: fractions must sum to 1");
  }

  std::vector<std::uint64_t> keys;
  std::set<std::uint64_t> seen;
  for (const auto& s : d.samples()) {
    // Ids and group ids live in separate key spaces; ungrouped samples are
    // their own singleton groups.
    const std::uint64_t key = s.group ? *s.group : s.id;
    if (seen.insert(key).second) keys.push_back(key);
  }
  const auto nonzero = static_cast<std::size_t>(std::count_if(frac.begin(), frac.end(), [](double f) { return f > 0.0; }));
  if (keys.size() < nonzero) {
    throw std::invalid_argument("split_by_group: " + std::to_string(keys.size()) +
                                " group(s) cannot fill " + std::to_string(nonzero) + " nonempty splits");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(keys.begin(), keys.end(), rng);

  const std::size_t g = keys.size();
  std::array<std::size_t, 3> counts{};
  for (std::size_t i = 0; i < 3; ++i) {
    counts[i] = static_cast<std::size_t>(std::llround(frac[i] * static_cast<double>(g)));
    if (frac[i] > 0.0 && counts[i] == 0) counts[i] = 1;
    if (frac[i] == 0.0) counts[i] = 0;
  }
  // Absorb rounding in the largest split.
  auto total = counts[0] + counts[1] + counts[2];
  const auto largest = static_cast<std::size_t>(std::max_element(frac.begin(), frac.end()) - frac.begin());
  while (total > g) {
    --counts[largest];
    --total;
  }
  counts[largest] += g - total;

  std::map<std::uint64_t, std::size_t> assignment;
  std::size_t k = 0;
  for (std::size_t split = 0; split < 3; ++split) {
    for (std::size_t i = 0; i < counts[split]; ++i) assignment[keys[k++]] = split;
  }

  std::array<std::vector<std::size_t>, 3> positions;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& s = d[i];
    positions[assignment.at(s.group ? *s.group : s.id)].push_back(i);
  }
  return {d.subset(positions[0]), d.subset(positions[1]), d.subset(positions[2])};
}

CsvError::CsvError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

namespace {

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
T parse_number(std::string_view cell, std::size_t line, const char* column) {
  T value{};
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || cell.empty()) {
    throw CsvError(line, std::string("non-numeric value '") + std::string(cell) + "' in column " + column);
  }
  return value;
}

}  // namespace

std::string to_csv_string(const Dataset& d) {
  std::string out = "id,group,label,noise_flag";
  for (std::size_t c = 0; c < d.feature_dim(); ++c) out += ",f" + std::to_string(c);
  out += '\n';
  for (const auto& s : d.samples()) {
    out += std::to_string(s.id);
    out += ',';
    if (s.group) out += std::to_string(*s.group);
    out += ',';
    out += std::to_string(s.label);
    out += ',';
    if (s.noise_flag) out += std::to_string(*s.noise_flag);
    for (double f : s.features) {
      out += ',';
      out += format_double(f);
    }
    out += '\n';
  }
  return out;
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_csv_string(d);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Dataset parse_csv(const std::string& text, const std::string& provenance) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw CsvError(1, "empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_fields(line);
  static constexpr std::array<std::string_view, 4> kFixed{"id", "group", "label", "noise_flag"};
  for (std::size_t i = 0; i < kFixed.size(); ++i) {
    if (i >= header.size() || header[i] != kFixed[i]) {
      throw CsvError(line_no, "missing column '" + std::string(kFixed[i]) + "' at position " + std::to_string(i));
    }
  }
  const std::size_t dim = header.size() - kFixed.size();
  if (dim == 0) throw CsvError(line_no, "no feature columns (expected f0, f1, ...)");
  for (std::size_t c = 0; c < dim; ++c) {
    const std::string expected = "f" + std::to_string(c);
    if (header[kFixed.size() + c] != expected) {
      throw CsvError(line_no, "expected column '" + expected + "', found '" +
                                  std::string(header[kFixed.size() + c]) + "'");
    }
  }

  std::vector<Sample> samples;
  std::unordered_set<std::uint64_t> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw CsvError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
    }
    Sample s;
    s.id = parse_number<std::uint64_t>(fields[0], line_no, "id");
    if (!fields[1].empty()) s.group = parse_number<std::uint64_t>(fields[1], line_no, "group");
    s.label = parse_number<int>(fields[2], line_no, "label");
    if (s.label != 0 && s.label != 1) throw CsvError(line_no, "label must be 0 or 1");
    if (!fields[3].empty()) {
      s.noise_flag = parse_number<int>(fields[3], line_no, "noise_flag");
      if (*s.noise_flag != 0 && *s.noise_flag != 1) throw CsvError(line_no, "noise_flag must be 0, 1 or empty");
    }
    s.features.reserve(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      const std::string column = "f" + std::to_string(c);
      const double v = parse_number<double>(fields[kFixed.size() + c], line_no, column.c_str());
      if (!std::isfinite(v)) throw CsvError(line_no, "non-finite value in column " + column);
      s.features.push_back(v);
    }
    if (!ids.insert(s.id).second) throw CsvError(line_no, "duplicate id " + std::to_string(s.id));
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw CsvError(line_no, "no data rows");
  return Dataset(std::move(samples), dim, provenance);
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

}  // namespace edl
