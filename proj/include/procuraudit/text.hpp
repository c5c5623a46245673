#pragma once

// Bag-of-words pipeline: Unicode-aware Spanish tokenizer, stopword removal,
// document-frequency pruning with strict bounds, max-features cap, sparse
// count matrix.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "procuraudit/errors.hpp"
#include "procuraudit/numfmt.hpp"

namespace procuraudit::text {

// --- minimal UTF-8 handling, enough for Spanish text ---

inline std::size_t decode_utf8(const std::string& s, std::size_t i, std::uint32_t& cp) {
    unsigned char c = s[i];
    if (c < 0x80) {
        cp = c;
        return 1;
    }
    std::size_t len = (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : (c & 0xF8) == 0xF0 ? 4 : 1;
    if (len == 1 || i + len > s.size()) {
        cp = 0xFFFD;
        return 1;
    }
    static const std::uint32_t mask[] = {0, 0x7F, 0x1F, 0x0F, 0x07};
    cp = c & mask[len];
    for (std::size_t k = 1; k < len; ++k) {
        unsigned char cc = s[i + k];
        if ((cc & 0xC0) != 0x80) {
            cp = 0xFFFD;
            return 1;
        }
        cp = (cp << 6) | (cc & 0x3F);
    }
    return len;
}

inline void encode_utf8(std::uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Letters: ASCII plus the Latin-1 supplement (covers ñ/á/é/í/ó/ú/ü and
// their uppercase forms).
inline bool is_letter(std::uint32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
    if (cp >= 0xC0 && cp <= 0xFF && cp != 0xD7 && cp != 0xF7) return true;
    return false;
}

inline std::uint32_t to_lower(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

// Lowercase, split on every non-letter, drop tokens shorter than
// min_token_len codepoints.
inline std::vector<std::string> tokenize(const std::optional<std::string>& input,
                                         std::size_t min_token_len = 2) {
    std::vector<std::string> tokens;
    if (!input) return tokens;
    const std::string& s = *input;
    std::string current;
    std::size_t current_len = 0;
    auto flush = [&] {
        if (current_len >= min_token_len) tokens.push_back(current);
        current.clear();
        current_len = 0;
    };
    std::size_t i = 0;
    while (i < s.size()) {
        std::uint32_t cp;
        i += decode_utf8(s, i, cp);
        if (is_letter(cp)) {
            encode_utf8(to_lower(cp), current);
            ++current_len;
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

struct VectorizerParams {
    double min_df_fraction = 0.0001;
    double max_df_fraction = 0.5;
    std::size_t max_features = 10000;
    std::unordered_set<std::string> stopwords;
    std::size_t min_token_len = 2;

    void validate() const {
        if (!(0.0 <= min_df_fraction && min_df_fraction < max_df_fraction && max_df_fraction <= 1.0))
            throw DegenerateInput("require 0 <= min_df < max_df <= 1");
        if (max_features < 1) throw DegenerateInput("max_features >= 1");
    }
};

struct Vocabulary {
    std::vector<std::string> tokens; // lexicographic
    std::unordered_map<std::string, std::size_t> index;
    std::unordered_map<std::string, std::size_t> doc_freq;
    std::size_t n_docs = 0;
};

// Stopwords removed first, then strict df bounds (kept iff
// min_df < df/n < max_df), then the max_features highest-total-count
// tokens (lexicographic earlier wins ties).
inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs,
                                   const VectorizerParams& params) {
    params.validate();
    if (docs.empty()) throw DegenerateInput("build_vocabulary requires at least one document");

    std::map<std::string, std::size_t> df, total;
    for (const auto& doc : docs) {
        std::unordered_set<std::string> seen;
        for (const auto& tok : doc) {
            if (params.stopwords.count(tok)) continue;
            ++total[tok];
            if (seen.insert(tok).second) ++df[tok];
        }
    }

    const double n = static_cast<double>(docs.size());
    std::vector<std::string> survivors;
    for (const auto& [tok, d] : df) {
        double frac = d / n;
        if (frac > params.min_df_fraction && frac < params.max_df_fraction)
            survivors.push_back(tok);
    }
    if (survivors.size() > params.max_features) {
        std::sort(survivors.begin(), survivors.end(), [&](const std::string& a, const std::string& b) {
            std::size_t ca = total.at(a), cb = total.at(b);
            if (ca != cb) return ca > cb;
            return a < b;
        });
        survivors.resize(params.max_features);
        std::sort(survivors.begin(), survivors.end());
    }
    if (survivors.empty()) throw EmptyVocabulary("no tokens survive stopword/df pruning");

    Vocabulary vocab;
    vocab.n_docs = docs.size();
    vocab.tokens = std::move(survivors);
    for (std::size_t i = 0; i < vocab.tokens.size(); ++i) {
        vocab.index[vocab.tokens[i]] = i;
        vocab.doc_freq[vocab.tokens[i]] = df.at(vocab.tokens[i]);
    }
    return vocab;
}

struct SparseCounts {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    // per row: sorted (column, count), counts >= 1
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rows;
};

inline SparseCounts vectorize(const std::vector<std::vector<std::string>>& docs, const Vocabulary& vocab) {
    SparseCounts out;
    out.n_rows = docs.size();
    out.n_cols = vocab.tokens.size();
    out.rows.reserve(docs.size());
    for (const auto& doc : docs) {
        std::map<std::size_t, std::size_t> counts;
        for (const auto& tok : doc) {
            auto it = vocab.index.find(tok);
            if (it != vocab.index.end()) ++counts[it->second];
        }
        out.rows.emplace_back(counts.begin(), counts.end());
    }
    return out;
}

inline std::unordered_set<std::string> parse_stopword_lines(std::istream& in) {
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::size_t a = line.find_first_not_of(" \t");
        if (a == std::string::npos) continue;
        std::size_t b = line.find_last_not_of(" \t");
        std::string word = line.substr(a, b - a + 1);
        // lowercase via the tokenizer's case fold
        std::string lowered;
        std::size_t i = 0;
        while (i < word.size()) {
            std::uint32_t cp;
            i += decode_utf8(word, i, cp);
            encode_utf8(to_lower(cp), lowered);
        }
        out.insert(lowered);
    }
    return out;
}

inline std::unordered_set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read stopword file: " + path);
    return parse_stopword_lines(in);
}

// JSON form: {"n_docs": int, "tokens": [{"t": str, "df": int}, ...]}
inline nlohmann::json vocabulary_to_json(const Vocabulary& vocab) {
    nlohmann::json toks = nlohmann::json::array();
    for (const auto& t : vocab.tokens)
        toks.push_back({{"t", t}, {"df", vocab.doc_freq.at(t)}});
    return nlohmann::json{{"n_docs", vocab.n_docs}, {"tokens", toks}};
}

inline Vocabulary vocabulary_from_json(const nlohmann::json& j) {
    Vocabulary vocab;
    vocab.n_docs = j.at("n_docs").get<std::size_t>();
    for (const auto& e : j.at("tokens")) {
        std::string t = e.at("t").get<std::string>();
        vocab.index[t] = vocab.tokens.size();
        vocab.doc_freq[t] = e.at("df").get<std::size_t>();
        vocab.tokens.push_back(t);
    }
    return vocab;
}

// Triplet CSV (row, col, count) sorted by (row, col).
inline void write_sparse_counts_csv(std::ostream& os, const SparseCounts& m) {
    os << "row,col,count\n";
    for (std::size_t r = 0; r < m.rows.size(); ++r)
        for (const auto& [c, v] : m.rows[r]) os << r << ',' << c << ',' << v << '\n';
}

} // namespace procuraudit::text
