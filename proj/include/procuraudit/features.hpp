#pragma once

// Engineered numeric features: log transforms, overdraw difference/flag,
// date-inconsistency flag, one-hot encodings, matrix assembly.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "procuraudit/errors.hpp"
#include "procuraudit/ingest.hpp"

namespace procuraudit::features {

using std::optional;

struct RowKey {
    std::string contract_id; // empty when the source field was null
    std::size_t row_index = 0;
    auto operator<=>(const RowKey&) const = default;
};

struct ContractFeatures {
    RowKey key;
    optional<double> log_cuantia;
    optional<double> log_valor_definitivo;
    optional<double> log_valor_contrato;
    optional<double> log_valor_adiciones;
    optional<double> log_valor_total;
    optional<double> amount_diff;       // log_valor_definitivo - log_cuantia
    optional<int> overdraw_flag;        // raw valor_definitivo > raw cuantia
    optional<int> date_inconsistency_flag;
};

// ln(1+v); zero-safe log scale for peso amounts.
inline optional<double> log_transform(optional<double> v) {
    if (!v) return std::nullopt;
    return std::log1p(*v);
}

inline std::pair<optional<double>, optional<int>> derive_overdraw(optional<double> cuantia,
                                                                  optional<double> valor_definitivo) {
    if (!cuantia || !valor_definitivo) return {std::nullopt, std::nullopt};
    double diff = std::log1p(*valor_definitivo) - std::log1p(*cuantia);
    return {diff, *valor_definitivo > *cuantia ? 1 : 0};
}

inline optional<int> derive_date_flag(optional<ingest::Date> created, optional<ingest::Date> awarded) {
    if (!created || !awarded) return std::nullopt;
    return *created > *awarded ? 1 : 0;
}

inline ContractFeatures compute_features(const ingest::RawContract& rec) {
    ContractFeatures f;
    f.key = {rec.id_objeto_contrato.value_or(""), rec.row_index};
    f.log_cuantia = log_transform(rec.cuantia);
    f.log_valor_definitivo = log_transform(rec.valor_definitivo);
    f.log_valor_contrato = log_transform(rec.valor_contrato);
    f.log_valor_adiciones = log_transform(rec.valor_adiciones);
    f.log_valor_total = log_transform(rec.valor_total);
    auto [diff, over] = derive_overdraw(rec.cuantia, rec.valor_definitivo);
    f.amount_diff = diff;
    f.overdraw_flag = over;
    f.date_inconsistency_flag = derive_date_flag(rec.fechacreacion, rec.fecha_adjudicado);
    return f;
}

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw DegenerateInput("pearson requires two equal-length samples of size >= 2");
    double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("pearson: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

struct OneHot {
    std::vector<std::string> columns;
    std::vector<std::vector<int>> rows; // n x k, exactly one 1 per row
};

// One column per category with frequency >= min_count, plus __OTHER__
// absorbing the rest and nulls. Columns sorted lexicographically.
inline OneHot one_hot(const std::vector<optional<std::string>>& values, std::size_t min_count) {
    std::map<std::string, std::size_t> freq;
    for (const auto& v : values)
        if (v) ++freq[*v];

    OneHot out;
    for (const auto& [cat, count] : freq)
        if (count >= min_count) out.columns.push_back(cat);
    std::sort(out.columns.begin(), out.columns.end());
    out.columns.push_back("__OTHER__");

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i + 1 < out.columns.size(); ++i) index[out.columns[i]] = i;

    std::size_t other = out.columns.size() - 1;
    out.rows.reserve(values.size());
    for (const auto& v : values) {
        std::vector<int> row(out.columns.size(), 0);
        std::size_t col = other;
        if (v) {
            auto it = index.find(*v);
            if (it != index.end()) col = it->second;
        }
        row[col] = 1;
        out.rows.push_back(std::move(row));
    }
    return out;
}

struct FeatureMatrix {
    std::vector<std::string> column_names;
    std::vector<RowKey> row_keys;
    std::vector<double> data; // row-major, n x d

    std::size_t n_rows() const { return row_keys.size(); }
    std::size_t n_cols() const { return column_names.size(); }
    double at(std::size_t r, std::size_t c) const { return data[r * n_cols() + c]; }
    const double* row(std::size_t r) const { return data.data() + r * n_cols(); }
};

struct NullableColumn {
    std::string name;
    std::vector<optional<double>> values;
};

struct NamedBlock {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// Nullable columns are median-imputed (all-null -> 0) and each source gets
// a companion flag:miss_<name> indicator column.
struct AssembleInput {
    std::vector<RowKey> row_keys;
    std::vector<NullableColumn> numeric;  // "num:" prefix
    std::vector<NullableColumn> flags;    // "flag:" prefix
    OneHot categorical;                   // "cat:" prefix; may be empty
    NamedBlock text;                      // "tok:" prefix; may be empty
};

inline double median_ignoring_nulls(const std::vector<optional<double>>& col) {
    std::vector<double> vals;
    for (const auto& v : col)
        if (v) vals.push_back(*v);
    if (vals.empty()) return 0.0;
    std::sort(vals.begin(), vals.end());
    std::size_t n = vals.size();
    return n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

inline FeatureMatrix assemble_matrix(const AssembleInput& in) {
    const std::size_t n = in.row_keys.size();
    auto check = [&](std::size_t rows, const char* what) {
        if (rows != n) throw AlignmentError(std::string("row-count mismatch in ") + what);
    };
    for (const auto& c : in.numeric) check(c.values.size(), "numeric block");
    for (const auto& c : in.flags) check(c.values.size(), "flag block");
    if (!in.categorical.columns.empty()) check(in.categorical.rows.size(), "categorical block");
    if (!in.text.columns.empty()) check(in.text.rows.size(), "text block");

    FeatureMatrix m;
    m.row_keys = in.row_keys;

    struct Imputed {
        std::string name;
        std::vector<double> values;
        std::vector<double> miss;
        bool any_null = false;
    };
    std::vector<Imputed> num_cols, flag_cols;
    auto impute = [&](const NullableColumn& c, const char* prefix) {
        Imputed out;
        out.name = std::string(prefix) + c.name;
        double med = median_ignoring_nulls(c.values);
        out.values.reserve(n);
        out.miss.reserve(n);
        for (const auto& v : c.values) {
            out.values.push_back(v ? *v : med);
            out.miss.push_back(v ? 0.0 : 1.0);
            if (!v) out.any_null = true;
        }
        return out;
    };
    for (const auto& c : in.numeric) num_cols.push_back(impute(c, "num:"));
    for (const auto& c : in.flags) flag_cols.push_back(impute(c, "flag:"));

    // Column layout: [numeric | flags | missing flags | one-hot | text]
    for (const auto& c : num_cols) m.column_names.push_back(c.name);
    for (const auto& c : flag_cols) m.column_names.push_back(c.name);
    for (const auto& c : in.numeric) m.column_names.push_back("flag:miss_" + c.name);
    for (const auto& c : in.flags) m.column_names.push_back("flag:miss_" + c.name);
    for (const auto& c : in.categorical.columns) m.column_names.push_back("cat:" + c);
    for (const auto& c : in.text.columns) m.column_names.push_back("tok:" + c);

    const std::size_t d = m.column_names.size();
    m.data.resize(n * d);
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t c = 0;
        for (const auto& col : num_cols) m.data[r * d + c++] = col.values[r];
        for (const auto& col : flag_cols) m.data[r * d + c++] = col.values[r];
        for (const auto& col : num_cols) m.data[r * d + c++] = col.miss[r];
        for (const auto& col : flag_cols) m.data[r * d + c++] = col.miss[r];
        if (!in.categorical.columns.empty())
            for (int v : in.categorical.rows[r]) m.data[r * d + c++] = v;
        if (!in.text.columns.empty())
            for (double v : in.text.rows[r]) m.data[r * d + c++] = v;
    }
    for (double v : m.data)
        if (!std::isfinite(v)) throw AlignmentError("non-finite entry in assembled matrix");
    return m;
}

} // namespace procuraudit::features
