#include "qm/weighting.hpp"

#include <algorithm>
#include <cmath>

#include "qm/csv.hpp"

namespace qm {

std::vector<double> roc_weights(int n) {
    if (n < 1) {
        throw Error("bad-ranking", "", "need at least one ranked element");
    }
    std::vector<double> weights(static_cast<std::size_t>(n));
    double suffix = 0.0;
    for (int k = n; k >= 1; --k) {
        suffix += 1.0 / k;
        weights[static_cast<std::size_t>(k - 1)] = suffix / n;
    }
    return weights;
}

std::map<std::string, double> weights_from_ranking(const Ranking& ranking) {
    const int n = static_cast<int>(ranking.items.size());
    if (n == 0) {
        throw Error("bad-ranking", "", "empty ranking");
    }

    std::map<int, int> tally;  // rank value -> tie count
    std::map<std::string, int> by_id;
    for (const auto& [id, rank] : ranking.items) {
        if (rank < 1) {
            throw Error("bad-ranking", id, "ranks must be positive");
        }
        if (!by_id.emplace(id, rank).second) {
            throw Error("bad-ranking", id, "element ranked twice");
        }
        ++tally[rank];
    }
    // Competition ranking: each group must start where the previous ended.
    int expected = 1;
    for (const auto& [rank, count] : tally) {
        if (rank != expected) {
            throw Error("bad-ranking", "",
                        "rank " + std::to_string(rank) + " breaks the competition sequence (expected " +
                            std::to_string(expected) + ")");
        }
        expected += count;
    }

    const std::vector<double> roc = roc_weights(n);
    std::map<std::string, double> weights;
    for (const auto& [id, rank] : by_id) {
        const int span = tally.at(rank);
        double sum = 0.0;
        for (int pos = rank; pos < rank + span; ++pos) {
            sum += roc[static_cast<std::size_t>(pos - 1)];
        }
        weights[id] = sum / span;
    }
    return weights;
}

std::map<std::string, Ranking> read_ranking_csv(std::string_view text) {
    const CsvTable table = parse_csv(text);
    if (table.header != std::vector<std::string>{"parentId", "childId", "rank"}) {
        throw ParseError("csv-shape", "ranking header must be 'parentId,childId,rank'");
    }
    std::map<std::string, Ranking> rankings;
    int line = 1;
    for (const auto& row : table.rows) {
        ++line;
        const double rank = parse_csv_number(row[2], line);
        if (rank != std::floor(rank) || rank < 1) {
            throw ParseError("csv-number", "rank '" + row[2] + "' must be a positive integer", line);
        }
        rankings[row[0]].items.emplace_back(row[1], static_cast<int>(rank));
    }
    return rankings;
}

} // namespace qm
