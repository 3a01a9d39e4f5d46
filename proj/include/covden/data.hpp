#ifndef COVDEN_DATA_HPP
#define COVDEN_DATA_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "covden/io.hpp"
#include "covden/types.hpp"

namespace covden {

using Date = std::chrono::sys_days;

inline Date parse_date(std::string_view text, std::size_t row = 0, std::size_t column = 0) {
    auto bad = [&]() -> ParseError { return ParseError("malformed date '" + std::string(text) + "'", row, column); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
    auto digits = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (text[i] < '0' || text[i] > '9') throw bad();
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    const std::chrono::year_month_day ymd{std::chrono::year{digits(0, 4)},
                                          std::chrono::month{static_cast<unsigned>(digits(5, 2))},
                                          std::chrono::day{static_cast<unsigned>(digits(8, 2))}};
    if (!ymd.ok()) throw bad();
    return Date{ymd};
}

inline std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

/// Prices on a date x symbol grid. Missing observations are NaN.
struct PricePanel {
    std::vector<Date> dates;
    std::vector<std::string> symbols;
    Matrix prices;  // dates x symbols

    Index date_count() const noexcept { return static_cast<Index>(dates.size()); }
    Index symbol_count() const noexcept { return static_cast<Index>(symbols.size()); }

    void validate() const {
        if (dates.size() < 2) throw InvalidParameter("price panel needs at least 2 dates");
        if (prices.rows() != date_count() || prices.cols() != symbol_count()) {
            throw InvalidParameter("price panel shape does not match its labels");
        }
        for (std::size_t i = 1; i < dates.size(); ++i) {
            if (!(dates[i - 1] < dates[i])) throw InvalidParameter("price panel dates must be strictly increasing");
        }
    }
};

/// Log returns, p x n, dated by the later of the two prices.
struct ReturnsPanel {
    std::vector<Date> dates;
    std::vector<std::string> symbols;
    Matrix returns;  // symbols x dates

    Index asset_count() const noexcept { return returns.rows(); }
    Index day_count() const noexcept { return returns.cols(); }

    ReturnsPanel slice(Index begin, Index end) const {
        if (begin < 0 || end > day_count() || begin > end) throw InvalidParameter("returns slice out of range");
        ReturnsPanel out;
        out.dates.assign(dates.begin() + begin, dates.begin() + end);
        out.symbols = symbols;
        out.returns = returns.middleCols(begin, end - begin);
        return out;
    }

    Index symbol_index(std::string_view symbol) const {
        for (std::size_t i = 0; i < symbols.size(); ++i) {
            if (symbols[i] == symbol) return static_cast<Index>(i);
        }
        throw InvalidParameter("unknown symbol '" + std::string(symbol) + "'");
    }
};

/// CSV: header "date,SYM1,SYM2,...", ISO dates, empty cell = missing.
inline PricePanel parse_prices(std::string_view text) {
    PricePanel panel;
    std::vector<std::vector<double>> rows;
    std::size_t row = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto eol = text.find('\n', pos);
        const std::string_view raw =
            io::strip_cr(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        ++row;
        if (raw.empty()) continue;
        const auto cells = io::split(raw, ',');
        if (row == 1) {
            if (cells.empty() || cells[0] != "date") throw ParseError("first header column must be 'date'", 1, 1);
            std::set<std::string> seen;
            for (std::size_t c = 1; c < cells.size(); ++c) {
                if (cells[c].empty()) throw ParseError("empty symbol name", 1, c + 1);
                if (!seen.insert(cells[c]).second) throw ParseError("duplicate symbol '" + cells[c] + "'", 1, c + 1);
                panel.symbols.push_back(cells[c]);
            }
            continue;
        }
        if (cells.size() != panel.symbols.size() + 1) {
            throw ParseError("expected " + std::to_string(panel.symbols.size() + 1) + " columns, got " +
                                 std::to_string(cells.size()),
                             row);
        }
        const Date d = parse_date(cells[0], row, 1);
        if (!panel.dates.empty() && !(panel.dates.back() < d)) {
            throw ParseError(panel.dates.back() == d ? "duplicate date " + cells[0] : "dates out of order at " + cells[0],
                             row, 1);
        }
        panel.dates.push_back(d);
        std::vector<double> values(panel.symbols.size());
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (cells[c].empty()) {
                values[c - 1] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            const double v = io::parse_double(cells[c], row, c + 1);
            if (!std::isfinite(v) || !(v > 0.0)) throw ParseError("price must be positive, got '" + cells[c] + "'", row, c + 1);
            values[c - 1] = v;
        }
        rows.push_back(std::move(values));
    }
    if (row == 0) throw ParseError("empty price file");
    panel.prices.resize(static_cast<Index>(rows.size()), static_cast<Index>(panel.symbols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) panel.prices(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
    if (panel.dates.size() < 2) throw ParseError("price file needs at least 2 dates");
    return panel;
}

inline PricePanel load_prices(const std::filesystem::path& path) { return parse_prices(io::read_file(path)); }

inline std::string format_prices(const PricePanel& panel) {
    std::string out = "date";
    for (const auto& s : panel.symbols) out += "," + s;
    out += "\n";
    for (Index r = 0; r < panel.date_count(); ++r) {
        out += format_date(panel.dates[static_cast<std::size_t>(r)]);
        for (Index c = 0; c < panel.symbol_count(); ++c) {
            out += ",";
            const double v = panel.prices(r, c);
            if (!std::isnan(v)) out += io::format_double(v);
        }
        out += "\n";
    }
    return out;
}

inline void write_prices(const PricePanel& panel, const std::filesystem::path& path) {
    io::write_atomic(path, format_prices(panel));
}

/// Same CSV shape as prices: one row per date, one column per symbol.
inline std::string format_returns(const ReturnsPanel& r) {
    std::string out = "date";
    for (const auto& s : r.symbols) out += "," + s;
    out += "\n";
    for (Index t = 0; t < r.day_count(); ++t) {
        out += format_date(r.dates[static_cast<std::size_t>(t)]);
        for (Index i = 0; i < r.asset_count(); ++i) out += "," + io::format_double(r.returns(i, t));
        out += "\n";
    }
    return out;
}

inline ReturnsPanel parse_returns(std::string_view text) {
    ReturnsPanel out;
    std::size_t row = 0;
    std::size_t pos = 0;
    std::vector<std::vector<double>> cols;
    while (pos < text.size()) {
        const auto eol = text.find('\n', pos);
        const std::string_view raw =
            io::strip_cr(text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        ++row;
        if (raw.empty()) continue;
        const auto cells = io::split(raw, ',');
        if (row == 1) {
            if (cells.empty() || cells[0] != "date") throw ParseError("first header column must be 'date'", 1, 1);
            out.symbols.assign(cells.begin() + 1, cells.end());
            continue;
        }
        if (cells.size() != out.symbols.size() + 1) throw ParseError("wrong number of columns", row);
        const Date d = parse_date(cells[0], row, 1);
        if (!out.dates.empty() && !(out.dates.back() < d)) throw ParseError("dates must be strictly increasing", row, 1);
        out.dates.push_back(d);
        std::vector<double> v;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const double x = io::parse_double(cells[c], row, c + 1);
            if (!std::isfinite(x)) throw ParseError("non-finite return", row, c + 1);
            v.push_back(x);
        }
        cols.push_back(std::move(v));
    }
    out.returns.resize(static_cast<Index>(out.symbols.size()), static_cast<Index>(cols.size()));
    for (std::size_t t = 0; t < cols.size(); ++t) {
        for (std::size_t i = 0; i < cols[t].size(); ++i) out.returns(static_cast<Index>(i), static_cast<Index>(t)) = cols[t][i];
    }
    if (out.day_count() < 1 || out.asset_count() < 1) throw ParseError("returns file has no data");
    return out;
}

inline ReturnsPanel load_returns(const std::filesystem::path& path) { return parse_returns(io::read_file(path)); }

struct CleaningOptions {
    double missing_threshold = 0.01;
    double volatility_quantile = 0.10;
    std::vector<std::string> exclusions;
};

struct CleaningSummary {
    std::vector<std::string> dropped_missing;
    std::vector<std::string> dropped_leading_gap;
    std::vector<std::string> dropped_volatility;
    std::vector<std::string> dropped_excluded;
    std::vector<std::string> warnings;
};

struct CleanResult {
    PricePanel panel;
    CleaningSummary summary;
};

namespace detail {

inline PricePanel keep_columns(const PricePanel& in, const std::vector<Index>& keep) {
    PricePanel out;
    out.dates = in.dates;
    out.prices.resize(in.date_count(), static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.symbols.push_back(in.symbols[static_cast<std::size_t>(keep[k])]);
        out.prices.col(static_cast<Index>(k)) = in.prices.col(keep[k]);
    }
    return out;
}

inline double log_return_stdev(const Eigen::Ref<const Vector>& prices) {
    const Index n = prices.size() - 1;
    if (n < 2) return 0.0;
    Vector r(n);
    for (Index t = 0; t < n; ++t) r(t) = std::log(prices(t + 1) / prices(t));
    const double mean = r.mean();
    return std::sqrt((r.array() - mean).square().sum() / static_cast<double>(n - 1));
}

}  // namespace detail

/// Missing-value filter, forward fill, volatility trim, exclusion list, in that order.
///
/// The volatility rule drops ceil(quantile * count) symbols with the largest
/// log-return standard deviation; among equal deviations the alphabetically
/// later symbol goes first.
inline CleanResult clean_panel(const PricePanel& panel, const CleaningOptions& options) {
    panel.validate();
    if (!(options.missing_threshold >= 0.0 && options.missing_threshold <= 1.0) ||
        !(options.volatility_quantile >= 0.0 && options.volatility_quantile <= 1.0)) {
        throw InvalidParameter("cleaning thresholds must lie in [0, 1]");
    }
    CleaningSummary summary;
    const Index n_dates = panel.date_count();

    std::vector<Index> keep;
    for (Index c = 0; c < panel.symbol_count(); ++c) {
        const Index missing = panel.prices.col(c).array().isNaN().count();
        const double fraction = static_cast<double>(missing) / static_cast<double>(n_dates);
        if (fraction > options.missing_threshold) {
            summary.dropped_missing.push_back(panel.symbols[static_cast<std::size_t>(c)]);
        } else if (std::isnan(panel.prices(0, c))) {
            summary.dropped_leading_gap.push_back(panel.symbols[static_cast<std::size_t>(c)]);
        } else {
            keep.push_back(c);
        }
    }
    PricePanel out = detail::keep_columns(panel, keep);
    for (Index c = 0; c < out.symbol_count(); ++c) {
        for (Index r = 1; r < n_dates; ++r) {
            if (std::isnan(out.prices(r, c))) out.prices(r, c) = out.prices(r - 1, c);
        }
    }

    const auto n_vol = static_cast<Index>(std::ceil(options.volatility_quantile * static_cast<double>(out.symbol_count()) - 1e-12));
    if (n_vol > 0) {
        std::vector<std::pair<double, Index>> ranked;
        for (Index c = 0; c < out.symbol_count(); ++c) ranked.emplace_back(detail::log_return_stdev(out.prices.col(c)), c);
        std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return out.symbols[static_cast<std::size_t>(a.second)] > out.symbols[static_cast<std::size_t>(b.second)];
        });
        std::set<Index> drop;
        for (Index k = 0; k < std::min(n_vol, static_cast<Index>(ranked.size())); ++k) {
            drop.insert(ranked[static_cast<std::size_t>(k)].second);
            summary.dropped_volatility.push_back(out.symbols[static_cast<std::size_t>(ranked[static_cast<std::size_t>(k)].second)]);
        }
        std::vector<Index> rest;
        for (Index c = 0; c < out.symbol_count(); ++c) {
            if (!drop.count(c)) rest.push_back(c);
        }
        out = detail::keep_columns(out, rest);
    }

    const std::set<std::string> excluded(options.exclusions.begin(), options.exclusions.end());
    std::vector<Index> rest;
    for (Index c = 0; c < out.symbol_count(); ++c) {
        if (excluded.count(out.symbols[static_cast<std::size_t>(c)])) {
            summary.dropped_excluded.push_back(out.symbols[static_cast<std::size_t>(c)]);
        } else {
            rest.push_back(c);
        }
    }
    for (const auto& name : excluded) {
        if (std::find(panel.symbols.begin(), panel.symbols.end(), name) == panel.symbols.end()) {
            summary.warnings.push_back("excluded symbol '" + name + "' is not in the panel");
        }
    }
    out = detail::keep_columns(out, rest);
    if (out.symbol_count() == 0) throw InvalidParameter("cleaning removed every symbol");
    return {std::move(out), std::move(summary)};
}

/// r_t = ln(s_t / s_{t-1}); requires a fully filled panel.
inline ReturnsPanel log_returns(const PricePanel& panel) {
    panel.validate();
    if (panel.prices.array().isNaN().any()) throw InvalidParameter("log_returns: panel still has missing values");
    ReturnsPanel out;
    out.symbols = panel.symbols;
    out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    const Index n = panel.date_count() - 1;
    out.returns.resize(panel.symbol_count(), n);
    for (Index i = 0; i < panel.symbol_count(); ++i) {
        for (Index t = 0; t < n; ++t) out.returns(i, t) = std::log(panel.prices(t + 1, i) / panel.prices(t, i));
    }
    return out;
}

/// Newline-delimited symbol list; blank lines and '#' comments ignored.
inline std::vector<std::string> parse_symbol_list(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& line : io::split(text, '\n')) {
        std::string s(io::strip_cr(line));
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t") + 1);
        if (!s.empty() && s[0] != '#') out.push_back(s);
    }
    return out;
}

/// Covariance of a p x T block of returns: demeaned, divided by T.
inline CovarianceMatrix window_covariance(const Eigen::Ref<const Matrix>& returns) {
    if (returns.cols() < 2) throw InvalidParameter("window covariance needs at least 2 observations");
    const Matrix centered = returns.colwise() - returns.rowwise().mean();
    const Index p = returns.rows();
    Matrix s = Matrix::Zero(p, p);
    s.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / static_cast<double>(returns.cols()));
    s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
    for (Index i = 0; i < p; ++i) {
        if (!(s(i, i) > 0.0)) throw InvalidParameter("degenerate variance: asset " + std::to_string(i) + " is constant over the window");
    }
    return {std::move(s), "sample"};
}

}  // namespace covden

#endif  // COVDEN_DATA_HPP
