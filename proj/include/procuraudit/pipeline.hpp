#pragma once

// Pipeline orchestration shared by the CLI and the acceptance suite:
// config handling, featurization, and the clean/score/report stages.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procuraudit/explain.hpp"
#include "procuraudit/features.hpp"
#include "procuraudit/iforest.hpp"
#include "procuraudit/ingest.hpp"
#include "procuraudit/numfmt.hpp"
#include "procuraudit/regress.hpp"
#include "procuraudit/stopwords_es.hpp"
#include "procuraudit/synth.hpp"
#include "procuraudit/text.hpp"

namespace procuraudit::pipeline {

struct RegressionConfig {
    double z_threshold = 3.0;
    std::size_t max_iter = 5;
    std::vector<std::string> design_columns = {"num:log_cuantia"};
    std::string target_column = "num:log_valor_definitivo";
};

struct ExplainConfig {
    std::size_t max_depth = 5;
    std::string label_file; // empty -> model top-k labels
};

struct PipelineConfig {
    ingest::SchemaConfig schema = ingest::SchemaConfig::defaults();
    text::VectorizerParams vectorizer;
    iforest::ForestParams forest;
    RegressionConfig regression;
    ExplainConfig explain_cfg;
    std::size_t top_k = 10;
    bool use_text = true;
    bool use_categoricals = true;
    bool include_objeto_contrato = false;
    std::size_t one_hot_min_count = 5;

    PipelineConfig() { vectorizer.stopwords = text::builtin_spanish_stopwords(); }

    static PipelineConfig from_json(const nlohmann::json& j) {
        PipelineConfig cfg;
        if (j.contains("schema")) cfg.schema = ingest::SchemaConfig::from_json(j["schema"]);
        if (j.contains("vectorizer")) {
            const auto& v = j["vectorizer"];
            if (v.contains("min_df_fraction")) cfg.vectorizer.min_df_fraction = v["min_df_fraction"];
            if (v.contains("max_df_fraction")) cfg.vectorizer.max_df_fraction = v["max_df_fraction"];
            if (v.contains("max_features")) cfg.vectorizer.max_features = v["max_features"];
            if (v.contains("min_token_len")) cfg.vectorizer.min_token_len = v["min_token_len"];
            if (v.contains("stopword_file"))
                cfg.vectorizer.stopwords = text::load_stopwords(v["stopword_file"]);
            cfg.vectorizer.validate();
        }
        if (j.contains("forest")) {
            const auto& f = j["forest"];
            if (f.contains("n_trees")) cfg.forest.n_trees = f["n_trees"];
            if (f.contains("subsample_size")) cfg.forest.subsample_size = f["subsample_size"];
            if (f.contains("max_depth")) cfg.forest.max_depth = f["max_depth"];
            if (f.contains("seed")) cfg.forest.seed = f["seed"];
            cfg.forest.validate();
        }
        if (j.contains("regression")) {
            const auto& r = j["regression"];
            if (r.contains("z_threshold")) cfg.regression.z_threshold = r["z_threshold"];
            if (r.contains("max_iter")) cfg.regression.max_iter = r["max_iter"];
            if (r.contains("design_columns"))
                cfg.regression.design_columns = r["design_columns"].get<std::vector<std::string>>();
            if (r.contains("target_column")) cfg.regression.target_column = r["target_column"];
        }
        if (j.contains("explain")) {
            const auto& e = j["explain"];
            if (e.contains("max_depth")) cfg.explain_cfg.max_depth = e["max_depth"];
            if (e.contains("label_file")) cfg.explain_cfg.label_file = e["label_file"];
        }
        if (j.contains("top_k")) cfg.top_k = j["top_k"];
        if (j.contains("use_text")) cfg.use_text = j["use_text"];
        if (j.contains("use_categoricals")) cfg.use_categoricals = j["use_categoricals"];
        if (j.contains("include_objeto_contrato"))
            cfg.include_objeto_contrato = j["include_objeto_contrato"];
        if (j.contains("one_hot_min_count")) cfg.one_hot_min_count = j["one_hot_min_count"];
        if (cfg.top_k < 1) throw DegenerateInput("top_k >= 1");
        return cfg;
    }

    static PipelineConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot read config file: " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }
};

struct Featurized {
    features::FeatureMatrix matrix;
    std::vector<features::ContractFeatures> engineered;
    std::size_t vocabulary_size = 0; // 0 when text disabled
    std::optional<text::Vocabulary> vocabulary;
};

inline Featurized featurize(const std::vector<ingest::RawContract>& records,
                            const PipelineConfig& cfg) {
    Featurized out;
    out.engineered.reserve(records.size());
    for (const auto& rec : records) out.engineered.push_back(features::compute_features(rec));

    features::AssembleInput in;
    for (const auto& f : out.engineered) in.row_keys.push_back(f.key);

    auto numeric = [&](const char* name, auto getter) {
        features::NullableColumn col;
        col.name = name;
        for (const auto& f : out.engineered) col.values.push_back(getter(f));
        in.numeric.push_back(std::move(col));
    };
    numeric("log_cuantia", [](const auto& f) { return f.log_cuantia; });
    numeric("log_valor_definitivo", [](const auto& f) { return f.log_valor_definitivo; });
    numeric("log_valor_contrato", [](const auto& f) { return f.log_valor_contrato; });
    numeric("log_valor_adiciones", [](const auto& f) { return f.log_valor_adiciones; });
    numeric("log_valor_total", [](const auto& f) { return f.log_valor_total; });
    numeric("amount_diff", [](const auto& f) { return f.amount_diff; });

    auto flag = [&](const char* name, auto getter) {
        features::NullableColumn col;
        col.name = name;
        for (const auto& f : out.engineered) {
            auto v = getter(f);
            col.values.push_back(v ? std::optional<double>(static_cast<double>(*v)) : std::nullopt);
        }
        in.flags.push_back(std::move(col));
    };
    flag("overdraw", [](const auto& f) { return f.overdraw_flag; });
    flag("date_inconsistency", [](const auto& f) { return f.date_inconsistency_flag; });

    if (cfg.use_categoricals) {
        // merged one-hot over the categorical Table-1 columns, categories
        // namespaced by source field
        static const std::vector<std::pair<std::string, std::optional<std::string> ingest::RawContract::*>>
            cat_fields = {{"TIPO_CONTRATO", &ingest::RawContract::tipo_contrato},
                          {"TIPO_MODALIDAD", &ingest::RawContract::tipo_modalidad},
                          {"NIVEL", &ingest::RawContract::nivel},
                          {"ORDEN", &ingest::RawContract::orden},
                          {"ESTADO_PROCESO", &ingest::RawContract::estado_proceso}};
        features::OneHot merged;
        merged.rows.resize(records.size());
        for (const auto& [field, member] : cat_fields) {
            std::vector<std::optional<std::string>> values;
            values.reserve(records.size());
            for (const auto& rec : records) values.push_back(rec.*member);
            features::OneHot enc = features::one_hot(values, cfg.one_hot_min_count);
            for (const auto& c : enc.columns) merged.columns.push_back(field + "=" + c);
            for (std::size_t r = 0; r < records.size(); ++r)
                merged.rows[r].insert(merged.rows[r].end(), enc.rows[r].begin(), enc.rows[r].end());
        }
        in.categorical = std::move(merged);
    }

    if (cfg.use_text) {
        std::vector<std::vector<std::string>> docs;
        docs.reserve(records.size());
        for (const auto& rec : records) {
            std::string combined = rec.detalle_objeto.value_or("");
            if (cfg.include_objeto_contrato && rec.objeto_contrato)
                combined += " " + *rec.objeto_contrato;
            docs.push_back(text::tokenize(combined, cfg.vectorizer.min_token_len));
        }
        text::Vocabulary vocab = text::build_vocabulary(docs, cfg.vectorizer);
        text::SparseCounts counts = text::vectorize(docs, vocab);
        features::NamedBlock block;
        block.columns = vocab.tokens;
        block.rows.assign(counts.n_rows, std::vector<double>(counts.n_cols, 0.0));
        for (std::size_t r = 0; r < counts.n_rows; ++r)
            for (const auto& [c, v] : counts.rows[r]) block.rows[r][c] = static_cast<double>(v);
        in.text = std::move(block);
        out.vocabulary_size = vocab.tokens.size();
        out.vocabulary = std::move(vocab);
    }

    out.matrix = features::assemble_matrix(in);
    return out;
}

// FeatureMatrix CSV (header = column names) + sidecar row-keys JSON.
inline void write_feature_matrix(const features::FeatureMatrix& m, const std::string& csv_path,
                                 const std::string& keys_path) {
    std::ofstream os(csv_path);
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        if (c) os << ',';
        csv::write_field(os, m.column_names[c]);
    }
    os << '\n';
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        for (std::size_t c = 0; c < m.n_cols(); ++c) {
            if (c) os << ',';
            os << fmt_double(m.at(r, c));
        }
        os << '\n';
    }
    nlohmann::json keys = nlohmann::json::array();
    for (const auto& k : m.row_keys)
        keys.push_back({{"id", k.contract_id}, {"row_index", k.row_index}});
    std::ofstream ks(keys_path);
    ks << nlohmann::json{{"row_keys", keys}}.dump(2) << '\n';
}

inline features::FeatureMatrix read_feature_matrix(const std::string& csv_path,
                                                   const std::string& keys_path) {
    std::ifstream is(csv_path);
    if (!is) throw IoError("cannot read " + csv_path);
    features::FeatureMatrix m;
    std::size_t line = 0;
    std::vector<std::string> rec;
    if (!csv::read_record(is, rec, line)) throw ParseError("empty feature matrix file");
    m.column_names = rec;
    while (csv::read_record(is, rec, line)) {
        if (rec.size() == 1 && rec[0].empty()) continue;
        if (rec.size() != m.column_names.size())
            throw ParseError("feature matrix row width mismatch at line " + std::to_string(line));
        for (const auto& cell : rec) m.data.push_back(std::stod(cell));
    }
    std::ifstream ks(keys_path);
    if (!ks) throw IoError("cannot read " + keys_path);
    nlohmann::json j;
    ks >> j;
    for (const auto& k : j.at("row_keys"))
        m.row_keys.push_back({k.at("id").get<std::string>(), k.at("row_index").get<std::size_t>()});
    if (m.row_keys.size() * m.column_names.size() != m.data.size())
        throw ParseError("feature matrix / row-key size mismatch");
    return m;
}

struct CleanSummary {
    std::size_t rows_in = 0;
    std::size_t rows_out = 0;
    std::size_t duplicates_removed = 0;
    std::size_t date_inversions = 0;
    std::size_t diagnostics = 0;
};

inline CleanSummary run_clean(const std::string& input_path, const PipelineConfig& cfg,
                              const std::string& out_dir) {
    std::ifstream in(input_path);
    if (!in) throw IoError("cannot read input: " + input_path);
    ingest::ParseResult parsed = ingest::parse_csv(in, cfg.schema);
    auto [kept, removed] = ingest::deduplicate(parsed.records);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream os(out_dir + "/cleaned.csv");
        ingest::write_canonical_csv(os, kept);
    }
    {
        std::ofstream ds(out_dir + "/diagnostics.jsonl");
        for (const auto& d : parsed.diagnostics) ds << ingest::diagnostic_to_json(d).dump() << '\n';
    }
    CleanSummary s;
    s.rows_in = parsed.records.size();
    s.rows_out = kept.size();
    s.duplicates_removed = removed;
    s.diagnostics = parsed.diagnostics.size();
    for (const auto& rec : kept)
        if (features::derive_date_flag(rec.fechacreacion, rec.fecha_adjudicado).value_or(0) == 1)
            ++s.date_inversions;
    return s;
}

struct ScoreOutput {
    Featurized featurized;
    iforest::ScoreVector forest_scores;
    regress::LinearModel model;
    regress::ResidualScores residuals;
};

inline regress::Design build_design(const features::FeatureMatrix& m,
                                    const std::vector<std::string>& columns) {
    regress::Design X;
    X.n = m.n_rows();
    X.p = columns.size() + 1;
    X.data.resize(X.n * X.p);
    std::vector<std::size_t> pos;
    for (const auto& name : columns) {
        auto it = std::find(m.column_names.begin(), m.column_names.end(), name);
        if (it == m.column_names.end()) throw DimensionError("design column not found: " + name);
        pos.push_back(static_cast<std::size_t>(it - m.column_names.begin()));
    }
    for (std::size_t r = 0; r < X.n; ++r) {
        X.data[r * X.p] = 1.0;
        for (std::size_t c = 0; c < pos.size(); ++c) X.data[r * X.p + 1 + c] = m.at(r, pos[c]);
    }
    return X;
}

inline std::vector<double> extract_column(const features::FeatureMatrix& m, const std::string& name) {
    auto it = std::find(m.column_names.begin(), m.column_names.end(), name);
    if (it == m.column_names.end()) throw DimensionError("column not found: " + name);
    std::size_t pos = static_cast<std::size_t>(it - m.column_names.begin());
    std::vector<double> out(m.n_rows());
    for (std::size_t r = 0; r < m.n_rows(); ++r) out[r] = m.at(r, pos);
    return out;
}

inline ScoreOutput run_score(const std::string& cleaned_path, const PipelineConfig& cfg,
                             const std::string& out_dir) {
    std::ifstream in(cleaned_path);
    if (!in) throw IoError("cannot read cleaned input: " + cleaned_path);
    ingest::ParseResult parsed = ingest::parse_csv(in, ingest::SchemaConfig::canonical());

    ScoreOutput out;
    out.featurized = featurize(parsed.records, cfg);
    const features::FeatureMatrix& m = out.featurized.matrix;

    iforest::IsolationForest forest = iforest::build_forest(m, cfg.forest);
    out.forest_scores = iforest::score(forest, m);

    regress::Design X = build_design(m, cfg.regression.design_columns);
    std::vector<double> y = extract_column(m, cfg.regression.target_column);
    out.model = regress::robust_fit(X, y, cfg.regression.z_threshold, cfg.regression.max_iter);
    out.residuals = regress::residual_scores(out.model, X, y, cfg.regression.z_threshold);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream os(out_dir + "/scores.csv");
        os << "row,id,row_index,expected_path,score,residual,z,overspend_flag\n";
        for (std::size_t r = 0; r < m.n_rows(); ++r) {
            os << r << ',';
            csv::write_field(os, m.row_keys[r].contract_id);
            os << ',' << m.row_keys[r].row_index << ',' << fmt_double(out.forest_scores.expected_path[r])
               << ',' << fmt_double(out.forest_scores.score[r]) << ','
               << fmt_double(out.residuals.residual[r]) << ',' << fmt_double(out.residuals.z[r]) << ','
               << out.residuals.overspend_flag[r] << '\n';
        }
    }
    {
        std::ofstream os(out_dir + "/forest.json");
        os << iforest::forest_to_json(forest).dump(2) << '\n';
    }
    {
        std::ofstream os(out_dir + "/regression.json");
        os << regress::model_to_json(out.model).dump(2) << '\n';
    }
    if (out.featurized.vocabulary) {
        std::ofstream os(out_dir + "/vocabulary.json");
        os << text::vocabulary_to_json(*out.featurized.vocabulary).dump(2) << '\n';
    }
    write_feature_matrix(m, out_dir + "/features.csv", out_dir + "/features_keys.json");
    {
        std::size_t n_text = out.featurized.vocabulary_size;
        nlohmann::json manifest{{"n_rows", m.n_rows()},
                                {"n_columns", m.n_cols()},
                                {"n_text_columns", n_text},
                                {"use_text", cfg.use_text},
                                {"use_categoricals", cfg.use_categoricals},
                                {"vocabulary_size", n_text}};
        std::ofstream os(out_dir + "/manifest.json");
        os << manifest.dump(2) << '\n';
    }
    return out;
}

struct ScoreRow {
    std::size_t row = 0;
    std::string id;
    std::size_t row_index = 0;
    double expected_path = 0.0;
    double score = 0.0;
    double residual = 0.0;
    double z = 0.0;
    int overspend_flag = 0;
};

inline std::vector<ScoreRow> read_scores(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path);
    std::vector<std::string> rec;
    std::size_t line = 0;
    if (!csv::read_record(is, rec, line)) throw ParseError("empty scores file");
    std::vector<ScoreRow> rows;
    while (csv::read_record(is, rec, line)) {
        if (rec.size() == 1 && rec[0].empty()) continue;
        if (rec.size() != 8) throw ParseError("bad scores row at line " + std::to_string(line));
        ScoreRow r;
        r.row = std::stoull(rec[0]);
        r.id = rec[1];
        r.row_index = std::stoull(rec[2]);
        r.expected_path = std::stod(rec[3]);
        r.score = std::stod(rec[4]);
        r.residual = std::stod(rec[5]);
        r.z = std::stod(rec[6]);
        r.overspend_flag = std::stoi(rec[7]);
        rows.push_back(std::move(r));
    }
    return rows;
}

// External label file: CSV "row,label" over score-row positions.
inline std::vector<int> read_label_file(const std::string& path, std::size_t n) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read label file: " + path);
    std::vector<int> labels(n, 0);
    std::vector<std::string> rec;
    std::size_t line = 0;
    if (!csv::read_record(is, rec, line)) throw ParseError("empty label file");
    while (csv::read_record(is, rec, line)) {
        if (rec.size() == 1 && rec[0].empty()) continue;
        if (rec.size() != 2) throw ParseError("bad label row at line " + std::to_string(line));
        std::size_t row = std::stoull(rec[0]);
        if (row < n) labels[row] = std::stoi(rec[1]) ? 1 : 0;
    }
    return labels;
}

struct ReportOutput {
    std::size_t rows_reported = 0;
    explain::ImportanceReport importances;
    bool truncated_warning = false;
};

inline ReportOutput run_report(const std::string& out_dir, const PipelineConfig& cfg) {
    std::vector<ScoreRow> scores = read_scores(out_dir + "/scores.csv");
    features::FeatureMatrix m =
        read_feature_matrix(out_dir + "/features.csv", out_dir + "/features_keys.json");
    if (m.n_rows() != scores.size()) throw AlignmentError("scores and features row counts differ");

    // cleaned contracts for the report's contract-type columns
    std::ifstream in(out_dir + "/cleaned.csv");
    if (!in) throw IoError("cannot read " + out_dir + "/cleaned.csv");
    ingest::ParseResult parsed = ingest::parse_csv(in, ingest::SchemaConfig::canonical());
    if (parsed.records.size() != scores.size())
        throw AlignmentError("cleaned.csv and scores.csv row counts differ");

    iforest::ScoreVector sv;
    for (const auto& r : scores) {
        sv.expected_path.push_back(r.expected_path);
        sv.score.push_back(r.score);
    }
    ReportOutput out;
    std::size_t k = cfg.top_k;
    if (k >= scores.size()) {
        k = scores.size();
        out.truncated_warning = true;
    }
    auto ranked = iforest::rank_anomalies(sv, k);

    std::vector<int> labels;
    if (!cfg.explain_cfg.label_file.empty()) {
        labels = read_label_file(cfg.explain_cfg.label_file, scores.size());
    } else {
        labels.assign(scores.size(), 0);
        for (const auto& [row, s] : ranked) labels[row] = 1;
    }
    explain::TreeParams tp;
    tp.max_depth = cfg.explain_cfg.max_depth;
    explain::DecisionTree tree = explain::fit_tree(m, labels, tp);
    out.importances = explain::feature_importance(tree, m.column_names);

    std::string top3;
    for (std::size_t i = 0; i < out.importances.entries.size() && i < 3; ++i) {
        if (i) top3 += ";";
        top3 += out.importances.entries[i].first;
    }

    {
        std::ofstream os(out_dir + "/report.csv");
        os << "rank,row,id,row_index,iforest_score,regression_z,overspend_flag,overdraw_flag,"
              "date_inconsistency_flag,tipo_contrato,tipo_modalidad,top_features\n";
        std::size_t rank = 1;
        for (const auto& [row, s] : ranked) {
            const auto& rec = parsed.records[row];
            auto feats = features::compute_features(rec);
            os << rank << ',' << row << ',';
            csv::write_field(os, scores[row].id);
            os << ',' << scores[row].row_index << ',' << fmt_double(s) << ','
               << fmt_double(scores[row].z) << ',' << scores[row].overspend_flag << ','
               << (feats.overdraw_flag ? std::to_string(*feats.overdraw_flag) : "") << ','
               << (feats.date_inconsistency_flag ? std::to_string(*feats.date_inconsistency_flag) : "")
               << ',';
            csv::write_field(os, rec.tipo_contrato.value_or(""));
            os << ',';
            csv::write_field(os, rec.tipo_modalidad.value_or(""));
            os << ',';
            csv::write_field(os, top3);
            os << '\n';
            ++rank;
        }
        out.rows_reported = ranked.size();
    }
    {
        std::ofstream os(out_dir + "/explain.txt");
        explain::print_tree(os, tree, m.column_names);
        os << "\nfeature,importance\n";
        for (const auto& [name, imp] : out.importances.entries) {
            csv::write_field(os, name);
            os << ',' << fmt_double(imp) << '\n';
        }
    }
    {
        std::ofstream os(out_dir + "/tree.json");
        os << explain::tree_to_json(tree).dump(2) << '\n';
    }
    return out;
}

inline void run_synth(const synth::SynthConfig& cfg, const std::string& out_dir) {
    synth::SynthOutput out = synth::generate(cfg);
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream os(out_dir + "/synth.csv");
        os << out.csv;
    }
    {
        std::ofstream os(out_dir + "/ground_truth.jsonl");
        synth::write_ground_truth(os, out.ground_truth);
    }
}

} // namespace procuraudit::pipeline
