#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "gepop/bitstring.hpp"
#include "gepop/population.hpp"

namespace gepop {

/// Symmetric pairwise distance matrix with zero diagonal. Entries built
/// from Hamming distance are integer-valued.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n)
      : size_(n), entries_(n * n, 0.0) {}

  std::size_t size() const { return size_; }
  double at(std::size_t i, std::size_t j) const {
    return entries_[i * size_ + j];
  }
  void set(std::size_t i, std::size_t j, double d) {
    entries_[i * size_ + j] = d;
    entries_[j * size_ + i] = d;
  }

 private:
  std::size_t size_;
  std::vector<double> entries_;
};

/// Fraction of distinct genotype bit strings in the population.
inline double diversity(const Population& pop) {
  if (pop.empty()) throw std::invalid_argument("diversity: empty population");
  std::unordered_set<BitString, BitStringHash> seen;
  for (const auto& ind : pop) seen.insert(ind.genotype);
  return static_cast<double>(seen.size()) / static_cast<double>(pop.size());
}

/// Deduplicate genotypes (exact bit equality, first-occurrence order) and
/// return their pairwise Hamming matrix. Off-diagonal entries are >= 1 by
/// construction, which is what makes the TWO-NN ratios well defined on
/// populations full of duplicates.
inline DistanceMatrix unique_distance_matrix(
    std::span<const BitString> genotypes) {
  std::vector<const BitString*> unique;
  std::unordered_set<BitString, BitStringHash> seen;
  for (const auto& g : genotypes)
    if (seen.insert(g).second) unique.push_back(&g);
  DistanceMatrix dm(unique.size());
  for (std::size_t i = 0; i < unique.size(); ++i)
    for (std::size_t j = i + 1; j < unique.size(); ++j)
      dm.set(i, j, static_cast<double>(hamming(*unique[i], *unique[j])));
  return dm;
}

inline DistanceMatrix unique_distance_matrix(const Population& pop) {
  std::vector<BitString> genotypes;
  genotypes.reserve(pop.size());
  for (const auto& ind : pop) genotypes.push_back(ind.genotype);
  return unique_distance_matrix(std::span<const BitString>(genotypes));
}

/// Line-fit flavor for the TWO-NN estimator. The derivation fixes a zero
/// intercept; the free-intercept variant exists for comparison only.
enum class IdFit { through_origin, free_intercept };

enum class IdStatus {
  ok,
  too_few_points,  // fewer than 3 points: no two neighbors plus a fit
  degenerate_fit,  // every point's two nearest neighbors are equidistant
};

/// TWO-NN estimate: the intrinsic dimension plus the product-moment
/// correlation of the fitted points as a fit-quality diagnostic. id and
/// fit_quality are NaN unless status == ok.
struct TwoNnResult {
  IdStatus status = IdStatus::ok;
  double id = std::numeric_limits<double>::quiet_NaN();
  double fit_quality = std::numeric_limits<double>::quiet_NaN();
  int n_points = 0;
};

/// TWO-NN intrinsic-dimension estimator.
///
/// For each point take the two smallest off-diagonal distances d1 <= d2 of
/// its row and form r = d2/d1; sort the ratios ascending; fit a straight
/// line to x_i = log r_(i) against y_i = -log(1 - (i-1)/n). The slope is
/// the estimate. Duplicate points (d1 == 0) are a caller error: deduplicate
/// first.
inline TwoNnResult estimate_id(const DistanceMatrix& dm,
                               IdFit fit = IdFit::through_origin) {
  const std::size_t n = dm.size();
  TwoNnResult res;
  res.n_points = static_cast<int>(n);
  if (n < 3) {
    res.status = IdStatus::too_few_points;
    return res;
  }

  std::vector<double> ratios(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = dm.at(i, j);
      if (d < d1) {
        d2 = d1;
        d1 = d;
      } else if (d < d2) {
        d2 = d;
      }
    }
    if (d1 <= 0.0)
      throw std::invalid_argument(
          "estimate_id: zero nearest-neighbor distance (duplicate points)");
    ratios[i] = d2 / d1;
  }
  std::sort(ratios.begin(), ratios.end());

  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = std::log(ratios[i]);
    ys[i] = -std::log(1.0 - static_cast<double>(i) / static_cast<double>(n));
  }

  double sum_x = 0, sum_y = 0, sum_xx = 0, sum_yy = 0, sum_xy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_x += xs[i];
    sum_y += ys[i];
    sum_xx += xs[i] * xs[i];
    sum_yy += ys[i] * ys[i];
    sum_xy += xs[i] * ys[i];
  }
  if (sum_xx == 0.0) {
    res.status = IdStatus::degenerate_fit;
    return res;
  }

  const double nn = static_cast<double>(n);
  if (fit == IdFit::through_origin) {
    res.id = sum_xy / sum_xx;
  } else {
    const double var_x = sum_xx - sum_x * sum_x / nn;
    if (var_x == 0.0) {
      res.status = IdStatus::degenerate_fit;
      return res;
    }
    res.id = (sum_xy - sum_x * sum_y / nn) / var_x;
  }
  const double cov = sum_xy - sum_x * sum_y / nn;
  const double var_x = sum_xx - sum_x * sum_x / nn;
  const double var_y = sum_yy - sum_y * sum_y / nn;
  res.fit_quality = (var_x > 0.0 && var_y > 0.0)
                        ? cov / std::sqrt(var_x * var_y)
                        : std::numeric_limits<double>::quiet_NaN();
  return res;
}

/// Per-generation instrumentation record. id and id_fit_quality are NaN
/// when the estimate is undefined (too few unique genotypes, or a
/// degenerate fit); that is an expected late-evolution outcome, not an
/// error.
struct SnapshotMetrics {
  int generation = 0;
  double best_fitness = 1.0;
  double diversity = 0.0;
  double id = std::numeric_limits<double>::quiet_NaN();
  double id_fit_quality = std::numeric_limits<double>::quiet_NaN();
  int unique_count = 0;
};

inline SnapshotMetrics snapshot(const Population& pop, int generation,
                                IdFit fit = IdFit::through_origin) {
  if (pop.empty()) throw std::invalid_argument("snapshot: empty population");
  SnapshotMetrics m;
  m.generation = generation;
  m.best_fitness = pop[0].fitness;
  for (const auto& ind : pop) m.best_fitness = std::min(m.best_fitness, ind.fitness);
  const auto dm = unique_distance_matrix(pop);
  m.unique_count = static_cast<int>(dm.size());
  m.diversity = static_cast<double>(dm.size()) / static_cast<double>(pop.size());
  const auto id = estimate_id(dm, fit);
  if (id.status == IdStatus::ok) {
    m.id = id.id;
    m.id_fit_quality = id.fit_quality;
  }
  return m;
}

}  // namespace gepop
