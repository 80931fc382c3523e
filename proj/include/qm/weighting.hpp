#pragma once

#include <map>
#include <string>
#include <vector>

#include "qm/error.hpp"

namespace qm {

// Importance ranking over sibling model elements. Ranks use competition
// style: ties share a rank value and consume the following positions
// (1,2,2,4 is legal, 1,2,2,3 is not).
struct Ranking {
    std::vector<std::pair<std::string, int>> items;
};

// Rank-Order Centroid weights for n ranked positions: position k gets
// (1/n) * sum_{i=k..n} 1/i. Strictly decreasing, sums to 1.
std::vector<double> roc_weights(int n);

// ROC weights assigned by rank; tied elements share the arithmetic mean of
// the weights of the positions they span. Throws Error("bad-ranking") on a
// malformed rank multiset.
std::map<std::string, double> weights_from_ranking(const Ranking& ranking);

// `parentId,childId,rank` rows grouped by parent.
std::map<std::string, Ranking> read_ranking_csv(std::string_view text);

} // namespace qm
