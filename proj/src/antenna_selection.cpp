#include "gsmsim/antenna_selection.hpp"

#include <limits>
#include <string>

#include "gsmsim/errors.hpp"

namespace gsmsim {

SubsetPartition partition_subsets(const std::vector<AntennaCombination>& cluster,
                                  int spatial_bits) {
  if (spatial_bits < 0 || spatial_bits > 20)
    throw ConfigError("partition_subsets: spatial_bits out of range");
  const int group = 1 << spatial_bits;
  const int k = static_cast<int>(cluster.size()) / group;
  if (k < 2)
    throw ConfigError("partition_subsets: need at least two subsets, got K=" +
                      std::to_string(k) + " from C=" + std::to_string(cluster.size()));

  SubsetPartition p;
  p.spatial_bits = spatial_bits;
  p.n_tx = cluster.empty() ? 0 : static_cast<int>(cluster.front().mask.size());
  p.leftover = static_cast<int>(cluster.size()) - k * group;
  p.subsets.reserve(static_cast<std::size_t>(k));
  for (int s = 0; s < k; ++s)
    p.subsets.emplace_back(cluster.begin() + static_cast<std::ptrdiff_t>(s) * group,
                           cluster.begin() + static_cast<std::ptrdiff_t>(s + 1) * group);
  return p;
}

double edas_subset_metric(const ChannelMatrix& h, const AntennaCombination& combo,
                          std::span<const std::complex<double>> constellation,
                          EdasMetric variant) {
  const Eigen::VectorXcd u = combined_column(h, combo);
  double best = std::numeric_limits<double>::infinity();
  const int m = static_cast<int>(constellation.size());
  // metric is symmetric in (s1, s2); unordered pairs suffice
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      const std::complex<double> d = constellation[static_cast<std::size_t>(a)] -
                                     constellation[static_cast<std::size_t>(b)];
      double value = 0.0;
      if (variant == EdasMetric::as_printed) {
        value = std::norm(d * u.sum());
      } else {
        for (Eigen::Index i = 0; i < u.size(); ++i) value += std::norm(d * u(i));
      }
      if (value < best) best = value;
    }
  }
  return best;
}

double edas_subset_score(const ChannelMatrix& h, std::span<const AntennaCombination> subset,
                         std::span<const std::complex<double>> constellation,
                         EdasMetric variant) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& combo : subset) {
    const double metric = edas_subset_metric(h, combo, constellation, variant);
    if (metric < worst) worst = metric;
  }
  return worst;
}

int edas_select(const ChannelMatrix& h, const SubsetPartition& partition,
                std::span<const std::complex<double>> constellation,
                EdasMetric variant) {
  int best_index = 0;
  double best_score = -1.0;
  for (int k = 0; k < partition.subset_count(); ++k) {
    const double score =
        edas_subset_score(h, partition.subsets[static_cast<std::size_t>(k)],
                          constellation, variant);
    if (score > best_score) {
      best_score = score;
      best_index = k;
    }
  }
  return best_index;
}

int random_select(const SubsetPartition& partition, Rng& rng) {
  return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(partition.subset_count())));
}

}  // namespace gsmsim
