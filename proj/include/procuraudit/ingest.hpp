#pragma once

// Contract CSV ingestion: 28-column schema, date/amount normalization,
// duplicate collapse keyed on (contract id, creation date).

#include <algorithm>
#include <array>
#include <cctype>
#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "procuraudit/csv.hpp"
#include "procuraudit/errors.hpp"
#include "procuraudit/numfmt.hpp"

namespace procuraudit::ingest {

struct Date {
    int year = 0;
    int month = 0;
    int day = 0;
    auto operator<=>(const Date&) const = default;
};

inline bool valid_date(int y, int m, int d) {
    if (y < 1 || m < 1 || m > 12 || d < 1) return false;
    static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int dim = days[m - 1];
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (m == 2 && leap) dim = 29;
    return d <= dim;
}

inline std::string date_to_string(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

// Pattern language: YYYY, MM, DD match digit groups; hh/mm/ss match and
// discard time digits; every other character must match literally.
inline std::optional<Date> parse_date_one(const std::string& text, const std::string& pattern) {
    int y = -1, mo = -1, da = -1;
    std::size_t ti = 0, pi = 0;
    auto read_int = [&](std::size_t n, int& out) -> bool {
        if (ti + n > text.size()) return false;
        int v = 0;
        for (std::size_t k = 0; k < n; ++k) {
            char c = text[ti + k];
            if (c < '0' || c > '9') return false;
            v = v * 10 + (c - '0');
        }
        ti += n;
        out = v;
        return true;
    };
    while (pi < pattern.size()) {
        int dummy;
        if (pattern.compare(pi, 4, "YYYY") == 0) {
            if (!read_int(4, y)) return std::nullopt;
            pi += 4;
        } else if (pattern.compare(pi, 2, "MM") == 0) {
            if (!read_int(2, mo)) return std::nullopt;
            pi += 2;
        } else if (pattern.compare(pi, 2, "DD") == 0) {
            if (!read_int(2, da)) return std::nullopt;
            pi += 2;
        } else if (pattern.compare(pi, 2, "hh") == 0 || pattern.compare(pi, 2, "mm") == 0 ||
                   pattern.compare(pi, 2, "ss") == 0) {
            if (!read_int(2, dummy)) return std::nullopt;
            pi += 2;
        } else {
            if (ti >= text.size() || text[ti] != pattern[pi]) return std::nullopt;
            ++ti;
            ++pi;
        }
    }
    if (ti != text.size()) return std::nullopt;
    if (!valid_date(y, mo, da)) return std::nullopt;
    return Date{y, mo, da};
}

inline const std::vector<std::string>& default_date_formats() {
    static const std::vector<std::string> f = {"YYYY-MM-DD", "DD/MM/YYYY", "MM/DD/YYYY hh:mm:ss"};
    return f;
}

inline std::optional<Date> parse_date(const std::string& text, const std::vector<std::string>& formats) {
    std::size_t a = text.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return std::nullopt;
    std::size_t b = text.find_last_not_of(" \t\r\n");
    std::string t = text.substr(a, b - a + 1);
    for (const auto& fmt : formats) {
        if (auto d = parse_date_one(t, fmt)) return d;
    }
    return std::nullopt;
}

enum class DecimalSeparator { point, comma };

// Thousands separators stripped, decimal separator per config. Negative or
// garbage input -> nullopt (the caller emits the diagnostic).
inline std::optional<double> parse_amount(const std::string& text, DecimalSeparator sep) {
    char dec = sep == DecimalSeparator::comma ? ',' : '.';
    char thou = sep == DecimalSeparator::comma ? '.' : ',';
    std::string cleaned;
    bool negative = false;
    bool seen_digit = false;
    bool seen_dec = false;
    bool seen_exp = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '$') continue;
        if (c == '-' && !seen_digit && !negative && !seen_exp) {
            negative = true;
        } else if ((c == '-' || c == '+') && seen_exp && (cleaned.back() == 'e')) {
            cleaned += c;
        } else if (c >= '0' && c <= '9') {
            cleaned += c;
            seen_digit = true;
        } else if ((c == 'e' || c == 'E') && seen_digit && !seen_exp) {
            cleaned += 'e';
            seen_exp = true;
        } else if (c == thou && !seen_exp) {
            if (!seen_digit || seen_dec) return std::nullopt;
        } else if (c == dec && !seen_exp) {
            if (seen_dec) return std::nullopt;
            cleaned += '.';
            seen_dec = true;
        } else {
            return std::nullopt;
        }
    }
    if (!seen_digit || (seen_exp && !std::isdigit(static_cast<unsigned char>(cleaned.back()))))
        return std::nullopt;
    if (negative) return std::nullopt; // amounts are >= 0 by invariant
    return std::stod(cleaned);
}

// Logical field names, Table-1 order.
inline const std::vector<std::string>& field_names() {
    static const std::vector<std::string> names = {
        "NIVEL", "ORDEN", "NIT_ENTIDAD", "NOMBRE_ENTIDAD", "TIPO_MODALIDAD",
        "NUMERO_CONSTANCIA", "ID_OBJETO_CONTRATO", "OBJETO_CONTRATO", "DETALLE_OBJETO",
        "TIPO_CONTRATO", "CUANTIA", "VALOR_DEFINITIVO", "FECHACREACION",
        "FECHAESTADOBORRADOR", "FECHAESTADODESCARTADO", "FECHAESTADOCONVOCADO",
        "FECHAESTADOADJUDICADO", "FECHAESTADOTERMANORMALDESPCONV",
        "FECHAESTADOTERMANORMALDESPCONV_1", "FECHAESTADOTERMANORMALDESPCONV_2",
        "FECHAESTADOTERMANORMALDESPCONV_3", "ESTADO_PROCESO", "NOMBRE_CONTRATISTA",
        "NIT_CONTRATISTA", "FECHA_FIRMA_CONTRATO", "VALOR_CONTRATO", "VALOR_ADICIONES",
        "VALOR_TOTAL"};
    return names;
}

inline bool is_amount_field(const std::string& f) {
    return f == "CUANTIA" || f == "VALOR_DEFINITIVO" || f == "VALOR_CONTRATO" ||
           f == "VALOR_ADICIONES" || f == "VALOR_TOTAL";
}

inline bool is_date_field(const std::string& f) {
    return f.rfind("FECHA", 0) == 0;
}

struct SchemaConfig {
    std::map<std::string, std::string> column_map; // logical field -> CSV header
    std::vector<std::string> date_formats = default_date_formats();
    DecimalSeparator decimal_separator = DecimalSeparator::comma;

    static SchemaConfig defaults() {
        SchemaConfig cfg;
        for (const auto& f : field_names()) cfg.column_map[f] = f;
        return cfg;
    }

    // Dialect of the cleaned CSV this toolkit writes: identity headers,
    // ISO dates, point decimals.
    static SchemaConfig canonical() {
        SchemaConfig cfg = defaults();
        cfg.decimal_separator = DecimalSeparator::point;
        return cfg;
    }

    void validate() const {
        static const char* required[] = {"ID_OBJETO_CONTRATO", "FECHACREACION", "CUANTIA",
                                         "VALOR_DEFINITIVO", "DETALLE_OBJETO"};
        for (const char* r : required) {
            if (!column_map.count(r))
                throw SchemaError(std::string("column_map must bind ") + r);
        }
        std::unordered_set<std::string> headers;
        for (const auto& [field, header] : column_map) {
            if (!headers.insert(header).second)
                throw SchemaError("two logical fields map to the same CSV header: " + header);
        }
        if (date_formats.empty()) throw SchemaError("date_formats must be non-empty");
    }

    static SchemaConfig from_json(const nlohmann::json& j) {
        SchemaConfig cfg = defaults();
        if (j.contains("column_map")) {
            cfg.column_map.clear();
            for (auto it = j["column_map"].begin(); it != j["column_map"].end(); ++it)
                cfg.column_map[it.key()] = it.value().get<std::string>();
        }
        if (j.contains("date_formats"))
            cfg.date_formats = j["date_formats"].get<std::vector<std::string>>();
        if (j.contains("decimal_separator")) {
            std::string s = j["decimal_separator"].get<std::string>();
            if (s == "point")
                cfg.decimal_separator = DecimalSeparator::point;
            else if (s == "comma")
                cfg.decimal_separator = DecimalSeparator::comma;
            else
                throw SchemaError("decimal_separator must be \"point\" or \"comma\"");
        }
        cfg.validate();
        return cfg;
    }
};

struct RawContract {
    // Text fields
    std::optional<std::string> nivel, orden, nit_entidad, nombre_entidad, tipo_modalidad,
        numero_constancia, id_objeto_contrato, objeto_contrato, detalle_objeto, tipo_contrato,
        estado_proceso, nombre_contratista, nit_contratista;
    // Amounts (Colombian pesos, >= 0)
    std::optional<double> cuantia, valor_definitivo, valor_contrato, valor_adiciones, valor_total;
    // Dates
    std::optional<Date> fechacreacion, fecha_borrador, fecha_descartado, fecha_convocado,
        fecha_adjudicado, fecha_term_0, fecha_term_1, fecha_term_2, fecha_term_3,
        fecha_firma_contrato;
    std::size_t row_index = 0; // source line number

    std::optional<std::string>& text_field(const std::string& name) {
        static const std::unordered_map<std::string, std::optional<std::string> RawContract::*> m = {
            {"NIVEL", &RawContract::nivel},
            {"ORDEN", &RawContract::orden},
            {"NIT_ENTIDAD", &RawContract::nit_entidad},
            {"NOMBRE_ENTIDAD", &RawContract::nombre_entidad},
            {"TIPO_MODALIDAD", &RawContract::tipo_modalidad},
            {"NUMERO_CONSTANCIA", &RawContract::numero_constancia},
            {"ID_OBJETO_CONTRATO", &RawContract::id_objeto_contrato},
            {"OBJETO_CONTRATO", &RawContract::objeto_contrato},
            {"DETALLE_OBJETO", &RawContract::detalle_objeto},
            {"TIPO_CONTRATO", &RawContract::tipo_contrato},
            {"ESTADO_PROCESO", &RawContract::estado_proceso},
            {"NOMBRE_CONTRATISTA", &RawContract::nombre_contratista},
            {"NIT_CONTRATISTA", &RawContract::nit_contratista}};
        return this->*m.at(name);
    }

    std::optional<double>& amount_field(const std::string& name) {
        static const std::unordered_map<std::string, std::optional<double> RawContract::*> m = {
            {"CUANTIA", &RawContract::cuantia},
            {"VALOR_DEFINITIVO", &RawContract::valor_definitivo},
            {"VALOR_CONTRATO", &RawContract::valor_contrato},
            {"VALOR_ADICIONES", &RawContract::valor_adiciones},
            {"VALOR_TOTAL", &RawContract::valor_total}};
        return this->*m.at(name);
    }

    std::optional<Date>& date_field(const std::string& name) {
        static const std::unordered_map<std::string, std::optional<Date> RawContract::*> m = {
            {"FECHACREACION", &RawContract::fechacreacion},
            {"FECHAESTADOBORRADOR", &RawContract::fecha_borrador},
            {"FECHAESTADODESCARTADO", &RawContract::fecha_descartado},
            {"FECHAESTADOCONVOCADO", &RawContract::fecha_convocado},
            {"FECHAESTADOADJUDICADO", &RawContract::fecha_adjudicado},
            {"FECHAESTADOTERMANORMALDESPCONV", &RawContract::fecha_term_0},
            {"FECHAESTADOTERMANORMALDESPCONV_1", &RawContract::fecha_term_1},
            {"FECHAESTADOTERMANORMALDESPCONV_2", &RawContract::fecha_term_2},
            {"FECHAESTADOTERMANORMALDESPCONV_3", &RawContract::fecha_term_3},
            {"FECHA_FIRMA_CONTRATO", &RawContract::fecha_firma_contrato}};
        return this->*m.at(name);
    }
};

struct Diagnostic {
    std::size_t row = 0;
    std::string column;
    std::string reason;
};

inline nlohmann::json diagnostic_to_json(const Diagnostic& d) {
    return nlohmann::json{{"row", d.row}, {"column", d.column}, {"reason", d.reason}};
}

struct ParseResult {
    std::vector<RawContract> records;
    std::vector<Diagnostic> diagnostics;
};

// One RawContract per data row. Cell failures degrade to null + diagnostic;
// rows are never dropped here.
inline ParseResult parse_csv(std::istream& in, const SchemaConfig& cfg) {
    cfg.validate();
    std::vector<std::string> header;
    std::size_t line = 0;
    if (!csv::read_record(in, header, line))
        throw ParseError("empty input: header row required");

    std::unordered_map<std::string, std::size_t> header_pos;
    for (std::size_t i = 0; i < header.size(); ++i) header_pos.emplace(header[i], i);

    // logical field -> column position
    std::vector<std::pair<std::string, std::size_t>> bound;
    for (const auto& [field, col] : cfg.column_map) {
        auto it = header_pos.find(col);
        if (it == header_pos.end())
            throw SchemaError("header missing column \"" + col + "\" mapped to " + field);
        bound.emplace_back(field, it->second);
    }

    ParseResult result;
    std::vector<std::string> row;
    while (true) {
        std::size_t row_line = line + 1;
        if (!csv::read_record(in, row, line)) break;
        if (row.size() == 1 && row[0].empty()) continue; // trailing blank line
        RawContract rec;
        rec.row_index = row_line;
        for (const auto& [field, pos] : bound) {
            std::string cell = pos < row.size() ? row[pos] : std::string();
            bool empty = cell.find_first_not_of(" \t\r\n") == std::string::npos;
            if (is_amount_field(field)) {
                if (empty) continue;
                auto v = parse_amount(cell, cfg.decimal_separator);
                if (v)
                    rec.amount_field(field) = v;
                else
                    result.diagnostics.push_back({row_line, field, "unparseable amount: " + cell});
            } else if (is_date_field(field)) {
                if (empty) continue;
                auto d = parse_date(cell, cfg.date_formats);
                if (d)
                    rec.date_field(field) = d;
                else
                    result.diagnostics.push_back({row_line, field, "unparseable date: " + cell});
            } else {
                if (!empty) rec.text_field(field) = cell;
            }
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

// For each (ID_OBJETO_CONTRATO, FECHACREACION) key only the first record by
// row_index survives; null-keyed records are never merged.
inline std::pair<std::vector<RawContract>, std::size_t> deduplicate(const std::vector<RawContract>& records) {
    std::vector<RawContract> kept;
    kept.reserve(records.size());
    std::map<std::pair<std::string, Date>, bool> seen;
    std::size_t removed = 0;
    for (const auto& rec : records) {
        if (!rec.id_objeto_contrato || !rec.fechacreacion) {
            kept.push_back(rec);
            continue;
        }
        auto key = std::make_pair(*rec.id_objeto_contrato, *rec.fechacreacion);
        if (seen.emplace(key, true).second)
            kept.push_back(rec);
        else
            ++removed;
    }
    return {std::move(kept), removed};
}

// Canonical CSV: all 28 logical columns in Table-1 order, ISO dates,
// 17-significant-digit amounts.
inline void write_canonical_header(std::ostream& os) {
    csv::write_record(os, field_names());
}

inline void write_canonical_row(std::ostream& os, const RawContract& in) {
    RawContract rec = in;
    std::vector<std::string> row;
    for (const auto& f : field_names()) {
        if (is_amount_field(f)) {
            auto v = rec.amount_field(f);
            row.push_back(v ? fmt_double(*v) : "");
        } else if (is_date_field(f)) {
            auto d = rec.date_field(f);
            row.push_back(d ? date_to_string(*d) : "");
        } else {
            auto t = rec.text_field(f);
            row.push_back(t ? *t : "");
        }
    }
    csv::write_record(os, row);
}

inline void write_canonical_csv(std::ostream& os, const std::vector<RawContract>& records) {
    write_canonical_header(os);
    for (const auto& rec : records) write_canonical_row(os, rec);
}

} // namespace procuraudit::ingest
