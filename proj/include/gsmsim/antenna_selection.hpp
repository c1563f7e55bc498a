#pragma once

#include <span>
#include <vector>

#include "gsmsim/gsm_link.hpp"

namespace gsmsim {

/// Which form of the minimum-distance metric the selector uses.
///  - as_printed:  min over symbol pairs of |(s1-s2) * sum_i (row_i . mask)|^2,
///    the modulus taken after summing over receive antennas.
///  - per_rx_norm: min over symbol pairs of sum_i |(s1-s2) * (row_i . mask)|^2,
///    the conventional per-antenna accumulation.
enum class EdasMetric { as_printed, per_rx_norm };

/// K disjoint groups of 2^spatial_bits combinations, formed as consecutive
/// lexicographic blocks. Trailing combinations that do not fill a group are
/// dropped.
struct SubsetPartition {
  std::vector<std::vector<AntennaCombination>> subsets;
  int spatial_bits = 0;
  int n_tx = 0;
  int leftover = 0;  ///< combinations discarded from the tail

  int subset_count() const { return static_cast<int>(subsets.size()); }
  int combos_per_subset() const { return 1 << spatial_bits; }
};

/// Splits the combination cluster into K = floor(C / 2^spatial_bits) groups.
/// Throws ConfigError when K < 2 (selection needs at least two subsets).
SubsetPartition partition_subsets(const std::vector<AntennaCombination>& cluster,
                                  int spatial_bits);

/// Minimum squared pairwise received-constellation distance of one combination.
double edas_subset_metric(const ChannelMatrix& h, const AntennaCombination& combo,
                          std::span<const std::complex<double>> constellation,
                          EdasMetric variant = EdasMetric::as_printed);

/// Worst-case member combination metric of one subset.
double edas_subset_score(const ChannelMatrix& h, std::span<const AntennaCombination> subset,
                         std::span<const std::complex<double>> constellation,
                         EdasMetric variant = EdasMetric::as_printed);

/// argmax over subsets of the min-over-members metric; ties break toward the
/// lowest subset index.
int edas_select(const ChannelMatrix& h, const SubsetPartition& partition,
                std::span<const std::complex<double>> constellation,
                EdasMetric variant = EdasMetric::as_printed);

/// Uniform baseline selector.
int random_select(const SubsetPartition& partition, Rng& rng);

}  // namespace gsmsim
