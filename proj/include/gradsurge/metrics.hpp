#pragma once

#include <vector>

namespace gradsurge {

// Probability that a uniformly random positive outscores a uniformly random
// negative, ties counted 1/2. Rank-statistics computation, O(n log n).
// Throws UsageError when only one class is present (metric undefined).
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace gradsurge
