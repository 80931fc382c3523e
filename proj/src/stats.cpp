#include "qm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace qm {

namespace {

constexpr int kExactPermutationLimit = 8;

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double cov = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    return cov / std::sqrt(var_a * var_b);
}

// Regularized incomplete beta function I_x(a, b) via the continued fraction
// expansion; standard machinery for the Student-t tail probability.
double betacf(double a, double b, double x) {
    constexpr int kMaxIterations = 200;
    constexpr double kEpsilon = 3e-14;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEpsilon) {
            break;
        }
    }
    return h;
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// One-sided upper tail P(T >= t) for Student's t with df degrees of freedom.
double student_t_upper_tail(double t, double df) {
    const double x = df / (df + t * t);
    const double half_tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
    return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

} // namespace

std::string to_string(CorrelationResult::Method method) {
    return method == CorrelationResult::Method::ExactPermutation ? "exact-permutation"
                                                                 : "t-approximation";
}

RankVector average_ranks(const std::vector<std::string>& labels,
                         const std::vector<double>& scores, RankDirection direction) {
    if (labels.size() != scores.size() || labels.empty()) {
        throw Error("length-mismatch", "", "labels and scores must be nonempty and equally long");
    }
    for (double score : scores) {
        if (!std::isfinite(score)) {
            throw Error("non-finite", "", "scores must be finite");
        }
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
        if (scores[lhs] != scores[rhs]) {
            return direction == RankDirection::Ascending ? scores[lhs] < scores[rhs]
                                                         : scores[lhs] > scores[rhs];
        }
        return lhs < rhs;
    });

    RankVector out;
    out.labels = labels;
    out.ranks.resize(scores.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) {
            ++j;
        }
        // Positions are 1-based; tied scores share the mean of i+1 .. j+1.
        const double rank = static_cast<double>(i + j + 2) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            out.ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return out;
}

CorrelationResult spearman(const RankVector& a, const RankVector& b) {
    if (a.labels.size() != a.ranks.size() || b.labels.size() != b.ranks.size() ||
        a.labels.size() != b.labels.size()) {
        throw Error("length-mismatch", "", "rank vectors must be equally long");
    }
    const std::size_t n = a.labels.size();
    if (n < 2) {
        throw Error("zero-variance", "", "need at least two items");
    }

    // Align b to a's label order.
    std::vector<double> b_ranks(n);
    if (a.labels == b.labels) {
        b_ranks = b.ranks;
    } else {
        std::map<std::string, double> by_label;
        for (std::size_t i = 0; i < n; ++i) {
            if (!by_label.emplace(b.labels[i], b.ranks[i]).second) {
                throw Error("label-mismatch", b.labels[i], "duplicate label");
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto it = by_label.find(a.labels[i]);
            if (it == by_label.end()) {
                throw Error("label-mismatch", a.labels[i], "label missing from second vector");
            }
            b_ranks[i] = it->second;
        }
    }

    auto variance_is_zero = [](const std::vector<double>& ranks) {
        return std::all_of(ranks.begin(), ranks.end(),
                           [&](double r) { return r == ranks.front(); });
    };
    if (variance_is_zero(a.ranks) || variance_is_zero(b_ranks)) {
        throw Error("zero-variance", "", "rank correlation is undefined for constant ranks");
    }

    CorrelationResult result;
    result.n = static_cast<int>(n);
    result.r = pearson(a.ranks, b_ranks);

    if (n <= kExactPermutationLimit) {
        result.method = CorrelationResult::Method::ExactPermutation;
        // All n! permutations of the second ranking; indices rather than rank
        // values so tied ranks keep their multiplicity.
        std::vector<std::size_t> index(n);
        std::iota(index.begin(), index.end(), 0);
        std::vector<double> permuted(n);
        long long total = 0;
        long long at_least = 0;
        const double threshold = result.r - 1e-12;
        do {
            for (std::size_t i = 0; i < n; ++i) {
                permuted[i] = b_ranks[index[i]];
            }
            ++total;
            if (pearson(a.ranks, permuted) >= threshold) {
                ++at_least;
            }
        } while (std::next_permutation(index.begin(), index.end()));
        result.p_one_sided = static_cast<double>(at_least) / static_cast<double>(total);
    } else {
        result.method = CorrelationResult::Method::TApproximation;
        const double r2 = result.r * result.r;
        if (r2 >= 1.0) {
            result.p_one_sided = result.r > 0.0 ? 0.0 : 1.0;
        } else {
            const double df = static_cast<double>(n - 2);
            const double t = result.r * std::sqrt(df / (1.0 - r2));
            result.p_one_sided = student_t_upper_tail(t, df);
        }
    }
    return result;
}

double improvement_percent(double old_grade, double new_grade) {
    if (!std::isfinite(old_grade) || !std::isfinite(new_grade)) {
        throw Error("non-finite", "", "grades must be finite");
    }
    if (old_grade <= 0.0) {
        throw Error("bad-grade", "", "the reference grade must be positive");
    }
    return 100.0 * (old_grade - new_grade) / old_grade;
}

} // namespace qm
