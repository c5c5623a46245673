#pragma once

// Minimal RFC-4180-ish CSV reader/writer: comma separated, double-quote
// escaping, LF line endings on output, accepts CRLF on input.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "procuraudit/errors.hpp"

namespace procuraudit::csv {

// Reads one record. Returns false on clean EOF. Throws ParseError on an
// unterminated quoted field. `line` is advanced past every consumed line.
inline bool read_record(std::istream& in, std::vector<std::string>& out, std::size_t& line) {
    out.clear();
    int c = in.get();
    if (c == EOF) return false;
    std::string field;
    bool in_quotes = false;
    bool any = true;
    ++line;
    while (true) {
        if (c == EOF) {
            if (in_quotes)
                throw ParseError("unterminated quoted field at line " + std::to_string(line - 1));
            out.push_back(field);
            return any;
        }
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field += ch;
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else if (ch == '\r') {
            // swallow; CRLF handled by the \n branch
        } else if (ch == '\n') {
            out.push_back(field);
            return true;
        } else {
            field += ch;
        }
        c = in.get();
    }
}

inline bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

inline void write_field(std::ostream& os, const std::string& s) {
    if (!needs_quoting(s)) {
        os << s;
        return;
    }
    os << '"';
    for (char ch : s) {
        if (ch == '"') os << '"';
        os << ch;
    }
    os << '"';
}

inline void write_record(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        write_field(os, fields[i]);
    }
    os << '\n';
}

} // namespace procuraudit::csv
