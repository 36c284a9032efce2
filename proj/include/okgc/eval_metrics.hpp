#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "okgc/kg_core.hpp"

namespace okgc {

struct MetricReport {
  double macro_p = 0, macro_r = 0, macro_f1 = 0;
  double micro_p = 0, micro_r = 0, micro_f1 = 0;
  double pair_p = 0, pair_r = 0, pair_f1 = 0;
  double mean_f1 = 0;
};

// Harmonic mean; 0 when p + r == 0.
double f1_score(double p, double r);

// Both clusterings are restricted to `universe` (mention ids valid in both).
// Macro: fraction of clusters contained in a single cluster of the other side.
// Micro: sum over clusters of the largest overlap, divided by |universe|.
// Pair: co-clustered pairs shared by both sides over each side's pair count.
// Empty denominators give 1. Throws DimensionError if an id is out of range.
MetricReport evaluate(const Clustering& pred, const Clustering& gold,
                      const std::vector<MentionId>& universe);

// Universe = every mention id.
MetricReport evaluate(const Clustering& pred, const Clustering& gold);

// `name=value` lines in a fixed order.
void write_metrics(std::ostream& out, const MetricReport& m, const std::string& prefix = "");

}  // namespace okgc
