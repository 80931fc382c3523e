#pragma once

#include <string>
#include <vector>

#include "qm/error.hpp"

namespace qm {

enum class RankDirection { Ascending, Descending };

// Items with their average ranks: the best score gets rank 1, tied scores
// share the mean of the positions they span.
struct RankVector {
    std::vector<std::string> labels;
    std::vector<double> ranks;
};

RankVector average_ranks(const std::vector<std::string>& labels,
                         const std::vector<double>& scores, RankDirection direction);

struct CorrelationResult {
    enum class Method { ExactPermutation, TApproximation };

    double r = 0.0;
    double p_one_sided = 1.0;  // for the hypothesis r > 0
    int n = 0;
    Method method = Method::ExactPermutation;
};

// Spearman's rank correlation: Pearson correlation of the two rank lists
// (tie-correct because the inputs carry average ranks). The one-sided p is
// computed by exact permutation over all n! label permutations for n <= 8
// and by the t approximation with n-2 degrees of freedom above that.
// Throws on label mismatch and zero rank variance.
CorrelationResult spearman(const RankVector& a, const RankVector& b);

// 100 * (old - new) / old: positive when the grade improved (shrank).
double improvement_percent(double old_grade, double new_grade);

std::string to_string(CorrelationResult::Method method);

} // namespace qm
