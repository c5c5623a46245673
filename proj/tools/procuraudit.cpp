// procuraudit: clean, score, and explain public-procurement contract data.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "procuraudit/pipeline.hpp"

using namespace procuraudit;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string input;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t top_k = 0;
    bool no_text = false;
    std::size_t workers = 1; // accepted for symmetry; results are worker-count independent
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_input) {
    cmd->add_option("--config", opts.config_path, "pipeline config JSON");
    auto* in = cmd->add_option("--input", opts.input, "input CSV");
    if (needs_input) in->required();
    cmd->add_option("--out-dir", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "forest / generator seed")->each([&](const std::string&) {
        opts.seed_set = true;
    });
    cmd->add_option("--top-k", opts.top_k, "anomalies to report");
    cmd->add_flag("--no-text", opts.no_text, "disable bag-of-words features");
    cmd->add_option("--workers", opts.workers, "worker count (outputs are identical for any value)");
}

pipeline::PipelineConfig load_config(const CommonOpts& opts) {
    pipeline::PipelineConfig cfg = opts.config_path.empty()
                                       ? pipeline::PipelineConfig()
                                       : pipeline::PipelineConfig::load(opts.config_path);
    if (opts.seed_set) cfg.forest.seed = opts.seed;
    if (opts.top_k) cfg.top_k = opts.top_k;
    if (opts.no_text) cfg.use_text = false;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"procuraudit: anomaly screening for public-procurement contract data"};
    app.require_subcommand(1);

    CommonOpts clean_opts, score_opts, report_opts, synth_opts;
    auto* clean = app.add_subcommand("clean", "parse, normalize, and deduplicate a contract CSV");
    add_common(clean, clean_opts, true);
    auto* score = app.add_subcommand("score", "featurize and score a cleaned CSV");
    add_common(score, score_opts, false);
    auto* report = app.add_subcommand("report", "rank anomalies and fit the surrogate explainer");
    add_common(report, report_opts, false);

    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic contract data");
    add_common(synth_cmd, synth_opts, false);
    std::size_t synth_n = 1000;
    double anomaly_rate = 0.0, duplicate_rate = 0.0, date_inversion_rate = 0.0;
    synth_cmd->add_option("--n", synth_n, "number of base contracts");
    synth_cmd->add_option("--anomaly-rate", anomaly_rate, "planted anomaly fraction");
    synth_cmd->add_option("--duplicate-rate", duplicate_rate, "duplicated-row fraction");
    synth_cmd->add_option("--date-inversion-rate", date_inversion_rate, "date inversion fraction");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*clean) {
            auto cfg = load_config(clean_opts);
            auto s = pipeline::run_clean(clean_opts.input, cfg, clean_opts.out_dir);
            std::cout << "rows in: " << s.rows_in << "\nrows out: " << s.rows_out
                      << "\nduplicates removed: " << s.duplicates_removed
                      << "\ndate inversions: " << s.date_inversions
                      << "\ndiagnostics: " << s.diagnostics << '\n';
        } else if (*score) {
            auto cfg = load_config(score_opts);
            std::string input =
                score_opts.input.empty() ? score_opts.out_dir + "/cleaned.csv" : score_opts.input;
            auto out = pipeline::run_score(input, cfg, score_opts.out_dir);
            std::cout << "rows scored: " << out.featurized.matrix.n_rows()
                      << "\nfeature columns: " << out.featurized.matrix.n_cols()
                      << "\nvocabulary size: " << out.featurized.vocabulary_size
                      << "\nregression rows excluded: " << out.model.excluded_rows.size() << '\n';
        } else if (*report) {
            auto cfg = load_config(report_opts);
            auto out = pipeline::run_report(report_opts.out_dir, cfg);
            if (out.truncated_warning)
                std::cerr << "warning: top-k is at least the row count; reporting all rows\n";
            std::cout << "anomalies reported: " << out.rows_reported << '\n';
            for (std::size_t i = 0; i < out.importances.entries.size() && i < 3; ++i)
                std::cout << "importance[" << i << "]: " << out.importances.entries[i].first << " = "
                          << fmt_double(out.importances.entries[i].second) << '\n';
        } else if (*synth_cmd) {
            synth::SynthConfig cfg;
            cfg.n_contracts = synth_n;
            cfg.anomaly_rate = anomaly_rate;
            cfg.duplicate_rate = duplicate_rate;
            cfg.date_inversion_rate = date_inversion_rate;
            cfg.seed = synth_opts.seed;
            pipeline::run_synth(cfg, synth_opts.out_dir);
            std::cout << "synthetic contracts written to " << synth_opts.out_dir << "/synth.csv\n";
        }
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 2;
    } catch (const EmptyVocabulary& e) {
        std::cerr << "feature error: " << e.what() << '\n';
        return 3;
    } catch (const InsufficientData& e) {
        std::cerr << "feature error: " << e.what() << '\n';
        return 3;
    } catch (const AlignmentError& e) {
        std::cerr << "feature error: " << e.what() << '\n';
        return 3;
    } catch (const SingleClassError& e) {
        std::cerr << "explain error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
