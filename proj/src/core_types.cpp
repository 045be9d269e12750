#include "dirrho/core_types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dirrho/errors.hpp"
#include "dirrho/rng.hpp"

namespace dirrho {

// ---------------------------------------------------------------------------
// Direction
// ---------------------------------------------------------------------------

Direction::Direction(std::vector<int> signs) : signs_(std::move(signs)) {
    if (signs_.size() < 2)
        throw std::invalid_argument("direction needs dimension >= 2");
    for (int s : signs_)
        if (s != 1 && s != -1)
            throw std::invalid_argument("direction entries must be +1 or -1");
}

Direction Direction::all_plus(int d) { return Direction(std::vector<int>(static_cast<std::size_t>(d), 1)); }
Direction Direction::all_minus(int d) { return Direction(std::vector<int>(static_cast<std::size_t>(d), -1)); }

Direction Direction::parse(std::string_view text) {
    std::vector<int> signs;
    std::string cleaned;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) cleaned.push_back(c);
    if (!cleaned.empty() && cleaned.front() == '(' && cleaned.back() == ')')
        cleaned = cleaned.substr(1, cleaned.size() - 2);

    if (cleaned.find(',') == std::string::npos && cleaned.find('1') == std::string::npos) {
        // compact form "-++-"
        for (char c : cleaned) {
            if (c == '+') signs.push_back(1);
            else if (c == '-') signs.push_back(-1);
            else throw UsageError("bad direction character '" + std::string(1, c) + "' in \"" +
                                  std::string(text) + "\"");
        }
    } else {
        std::size_t pos = 0;
        while (pos < cleaned.size()) {
            std::size_t comma = cleaned.find(',', pos);
            std::string tok = cleaned.substr(pos, comma == std::string::npos ? comma : comma - pos);
            if (tok == "1" || tok == "+1") signs.push_back(1);
            else if (tok == "-1") signs.push_back(-1);
            else throw UsageError("bad direction component \"" + tok + "\" in \"" +
                                  std::string(text) + "\"");
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    if (signs.size() < 2)
        throw UsageError("direction \"" + std::string(text) + "\" has dimension < 2");
    return Direction(std::move(signs));
}

std::vector<Direction> Direction::enumerate(int d) {
    if (d < 2 || d > 20)
        throw std::domain_error("direction enumeration supports 2 <= d <= 20");
    std::vector<Direction> all;
    const std::uint32_t count = 1u << d;
    all.reserve(count);
    for (std::uint32_t bits = 0; bits < count; ++bits) {
        std::vector<int> signs(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            signs[static_cast<std::size_t>(i)] = (bits >> (d - 1 - i)) & 1u ? -1 : 1;
        all.emplace_back(std::move(signs));
    }
    return all;
}

int Direction::negative_count() const {
    return static_cast<int>(std::count(signs_.begin(), signs_.end(), -1));
}

Direction Direction::reflected() const {
    std::vector<int> flipped(signs_.size());
    std::transform(signs_.begin(), signs_.end(), flipped.begin(), [](int s) { return -s; });
    return Direction(std::move(flipped));
}

std::string Direction::to_string() const {
    std::string out = "(";
    for (std::size_t i = 0; i < signs_.size(); ++i) {
        if (i) out += ",";
        out += signs_[i] == 1 ? "1" : "-1";
    }
    return out + ")";
}

std::string Direction::compact() const {
    std::string out;
    for (int s : signs_) out += s == 1 ? '+' : '-';
    return out;
}

SignPartition partition_from_direction(const Direction& alpha) {
    SignPartition p;
    p.dim = alpha.dim();
    for (int i = 0; i < alpha.dim(); ++i)
        (alpha.sign(i) == -1 ? p.negatives : p.positives).push_back(i);
    return p;
}

// ---------------------------------------------------------------------------
// DataMatrix and ranks
// ---------------------------------------------------------------------------

DataMatrix::DataMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("data matrix must have at least one row and one column");
}

long long RankMatrix::total_ties() const {
    return std::accumulate(ties_per_column.begin(), ties_per_column.end(), 0LL);
}

RankMatrix RankMatrix::select_columns(const std::vector<int>& columns) const {
    if (columns.empty()) throw std::invalid_argument("column selection is empty");
    RankMatrix out;
    out.rows = rows;
    out.cols = columns.size();
    out.ranks.resize(rows * columns.size());
    out.ties_per_column.resize(columns.size());
    for (std::size_t k = 0; k < columns.size(); ++k) {
        int c = columns[k];
        if (c < 0 || static_cast<std::size_t>(c) >= cols)
            throw std::invalid_argument("column index out of range");
        out.ties_per_column[k] = ties_per_column[static_cast<std::size_t>(c)];
        for (std::size_t r = 0; r < rows; ++r)
            out.ranks[r * out.cols + k] = (*this)(r, static_cast<std::size_t>(c));
    }
    return out;
}

RankMatrix compute_ranks(const DataMatrix& data, TiePolicy policy, std::uint64_t seed) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();

    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c)
            if (!std::isfinite(data(r, c)))
                throw DataError("non-finite value at row " + std::to_string(r + 1) +
                                ", column " + std::to_string(c + 1));

    RankMatrix out;
    out.rows = n;
    out.cols = d;
    out.ranks.resize(n * d);
    out.ties_per_column.assign(d, 0);

    std::vector<std::size_t> order(n);
    auto rng = make_engine(seed);
    for (std::size_t c = 0; c < d; ++c) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return data(a, c) < data(b, c);
        });

        long long broken = 0;
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i + 1;
            while (j < n && data(order[j], c) == data(order[i], c)) ++j;
            broken += static_cast<long long>(j - i - 1);
            if (policy == TiePolicy::random && j - i > 1) {
                for (std::size_t k = j - i - 1; k > 0; --k) {
                    std::size_t pick = rng() % (k + 1);
                    std::swap(order[i + k], order[i + pick]);
                }
            }
            i = j;
        }
        out.ties_per_column[c] = broken;
        for (std::size_t rank = 0; rank < n; ++rank)
            out.ranks[order[rank] * d + c] = static_cast<int>(rank + 1);
    }
    return out;
}

IntMatrix directional_ranks(const RankMatrix& ranks, const Direction& alpha) {
    if (static_cast<std::size_t>(alpha.dim()) != ranks.cols)
        throw std::invalid_argument("direction dimension does not match rank matrix");
    IntMatrix out;
    out.rows = ranks.rows;
    out.cols = ranks.cols;
    out.values.resize(ranks.rows * ranks.cols);
    const int flip = static_cast<int>(ranks.rows) + 1;
    for (std::size_t r = 0; r < ranks.rows; ++r)
        for (std::size_t c = 0; c < ranks.cols; ++c) {
            int v = ranks(r, c);
            out.values[r * out.cols + c] = alpha.sign(static_cast<int>(c)) == 1 ? v : flip - v;
        }
    return out;
}

PseudoObservations pseudo_observations(const RankMatrix& ranks) {
    PseudoObservations out;
    out.rows = ranks.rows;
    out.cols = ranks.cols;
    out.u.resize(ranks.rows * ranks.cols);
    const double scale = 1.0 / (static_cast<double>(ranks.rows) + 1.0);
    for (std::size_t i = 0; i < out.u.size(); ++i)
        out.u[i] = static_cast<double>(ranks.ranks[i]) * scale;
    return out;
}

std::string_view method_name(Method m) {
    switch (m) {
        case Method::closed_form: return "closed_form";
        case Method::decomposition: return "decomposition";
        case Method::quadrature: return "quadrature";
        case Method::monte_carlo: return "monte_carlo";
        case Method::rank_estimator: return "rank_estimator";
    }
    return "unknown";
}

Rational normalization_constant(int d) {
    if (d < 2) throw std::domain_error("normalization constant needs d >= 2");
    if (d > 60) throw std::overflow_error("normalization constant: d too large");
    const __int128 pow2 = static_cast<__int128>(1) << d;
    return Rational::reduce(pow2 * (d + 1), pow2 - (d + 1));
}

} // namespace dirrho
