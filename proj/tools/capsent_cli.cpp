// Command-line surface of the multi-domain sentiment toolkit:
//   synth    write a synthetic labeled corpus (JSONL)
//   train    train the per-domain ensemble and save the model file
//   eval     score a dataset with a saved model, write a JSON report
//   predict  read documents (stdin or file), write one JSON prediction per line
//   dbd      dump the token/domain belonging-degree table as TSV
// Exit codes: 0 success, 1 usage error, 2 data/model error.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "capsent/evaluate.hpp"
#include "capsent/model.hpp"
#include "capsent/serialize.hpp"
#include "capsent/synthetic.hpp"
#include "capsent/train.hpp"

namespace {

// Bare file names resolve against CAPSENT_MODEL_DIR when it is set; paths
// containing a separator are taken verbatim.
std::string resolve_model_path(const std::string& path) {
    if (path.find('/') != std::string::npos) return path;
    const char* dir = std::getenv("CAPSENT_MODEL_DIR");
    if (dir == nullptr || *dir == '\0') return path;
    std::string base(dir);
    if (base.back() != '/') base.push_back('/');
    return base + path;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw capsent::io_error("cannot open output file: " + path);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw capsent::io_error("failed writing output file: " + path);
}

capsent::dataset load_by_extension(const std::string& path) {
    bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    return capsent::load_dataset(
        path, csv ? capsent::dataset_format::csv : capsent::dataset_format::jsonl);
}

nlohmann::json prediction_to_json(const std::string& text, const capsent::prediction& p) {
    return {{"text", text},
            {"domain", p.domain},
            {"polarity", capsent::polarity_name(p.label)},
            {"score", p.score},
            {"dbd", p.dbd},
            {"confidence", p.polarity_scores},
            {"no_evidence", p.no_evidence}};
}

struct cli_options {
    // synth
    capsent::synthetic_spec synth;
    std::string synth_output;
    // train
    std::string train_data;
    std::string train_output = "model.bin";
    capsent::ensemble_config train_cfg;
    bool batch_size_given = false;
    std::string minority;
    std::string stopwords_path;
    // eval
    std::string eval_model;
    std::string eval_data;
    std::string eval_output = "report.json";
    std::size_t folds = 0;
    // predict
    std::string predict_model;
    std::string predict_input;
    std::string predict_output;
    // dbd
    std::string dbd_data;
    std::string dbd_output;
    std::size_t dbd_min_count = 2;
    bool dbd_sum = false;
};

int run_synth(const cli_options& opt) {
    capsent::dataset data = capsent::generate_synthetic(opt.synth);
    capsent::save_jsonl(data, opt.synth_output);
    std::cout << "wrote " << data.documents.size() << " documents over "
              << data.domains.size() << " domains to " << opt.synth_output << "\n";
    return 0;
}

int run_train(cli_options& opt) {
    capsent::ensemble_config cfg = opt.train_cfg;
    if (!opt.stopwords_path.empty())
        cfg.pipeline.stopwords = capsent::load_stopwords(opt.stopwords_path);
    if (!opt.minority.empty())
        cfg.training.minority_override = opt.minority == "positive"
                                             ? capsent::polarity::positive
                                             : capsent::polarity::negative;
    // the conventional batch size differs between the plain and the
    // cost-sensitive objective; an explicit flag always wins
    if (!opt.batch_size_given && cfg.training.cost_sensitive)
        cfg.training.batch_size = 128;

    capsent::dataset data = load_by_extension(opt.train_data);
    capsent::ensemble_model model = capsent::train_ensemble(data, cfg);
    std::string model_path = resolve_model_path(opt.train_output);
    capsent::save_model(model, model_path);

    nlohmann::json log = {{"model", model_path},
                          {"documents", data.documents.size()},
                          {"seed", cfg.training.seed},
                          {"epochs", cfg.training.epochs},
                          {"batch_size", cfg.training.batch_size},
                          {"learning_rate", cfg.training.learning_rate},
                          {"cost_sensitive", cfg.training.cost_sensitive},
                          {"max_len", model.net.max_len},
                          {"vocab_size", model.vocab.size()},
                          {"domains", nlohmann::json::array()}};
    for (const capsent::domain_model& dm : model.models)
        log["domains"].push_back(
            {{"domain", dm.domain}, {"epoch_losses", dm.epoch_losses}});
    write_text_file(model_path + ".log.json", log.dump(2) + "\n");
    std::cout << "trained " << model.models.size() << " domain models, saved to "
              << model_path << "\n";
    return 0;
}

int run_eval(const cli_options& opt) {
    capsent::ensemble_model model = capsent::load_model(resolve_model_path(opt.eval_model));
    capsent::dataset data = load_by_extension(opt.eval_data);
    nlohmann::json out;
    if (opt.folds > 0) {
        std::vector<capsent::evaluate_report> reports =
            capsent::evaluate_folds(model, data, opt.folds);
        out["folds"] = nlohmann::json::array();
        double accuracy_sum = 0.0;
        for (const capsent::evaluate_report& r : reports) {
            out["folds"].push_back(capsent::report_to_json(r));
            accuracy_sum += r.polarity_metrics.accuracy;
        }
        out["mean_polarity_accuracy"] = accuracy_sum / static_cast<double>(reports.size());
        std::cout << "cross-validation mean polarity accuracy "
                  << out["mean_polarity_accuracy"].dump() << " over " << reports.size()
                  << " folds\n";
    } else {
        capsent::evaluate_report report = capsent::evaluate(model, data);
        out = capsent::report_to_json(report);
        std::cout << "polarity accuracy " << format_double(report.polarity_metrics.accuracy)
                  << ", domain accuracy " << format_double(report.domain_accuracy) << " on "
                  << report.n << " documents\n";
    }
    write_text_file(opt.eval_output, out.dump(2) + "\n");
    return 0;
}

int run_predict(const cli_options& opt) {
    if (opt.predict_model.empty()) {
        std::cerr << "predict: missing required model file (--model)\n";
        return 2;
    }
    capsent::ensemble_model model =
        capsent::load_model(resolve_model_path(opt.predict_model));

    std::istream* in = &std::cin;
    std::ifstream file;
    if (!opt.predict_input.empty()) {
        file.open(opt.predict_input, std::ios::binary);
        if (!file) throw capsent::io_error("cannot open input file: " + opt.predict_input);
        in = &file;
    }
    std::ostream* out = &std::cout;
    std::ofstream out_file;
    if (!opt.predict_output.empty()) {
        out_file.open(opt.predict_output, std::ios::binary | std::ios::trunc);
        if (!out_file)
            throw capsent::io_error("cannot open output file: " + opt.predict_output);
        out = &out_file;
    }

    std::string line;
    while (std::getline(*in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        capsent::prediction p = capsent::predict(model, line);
        (*out) << prediction_to_json(line, p).dump() << "\n";
    }
    return 0;
}

int run_dbd(const cli_options& opt) {
    capsent::pipeline_config pipeline;
    pipeline.min_count = opt.dbd_min_count;
    pipeline.dbd_sum_mode = opt.dbd_sum;
    capsent::dataset data = load_by_extension(opt.dbd_data);
    capsent::domain_stats stats = capsent::build_domain_stats(data, pipeline);

    std::string table = "token\tdomain\tcount\ttf\tidf\tdbd\n";
    for (const auto& [token, row] : stats.counts()) {
        for (std::size_t d = 0; d < stats.num_domains(); ++d) {
            capsent::word_dbd_result w = capsent::word_dbd(token, d, stats);
            table += token;
            table += '\t';
            table += stats.domains()[d];
            table += '\t';
            table += std::to_string(row[d]);
            table += '\t';
            table += format_double(w.tf);
            table += '\t';
            table += format_double(w.idf);
            table += '\t';
            table += format_double(w.dbd);
            table += '\n';
        }
    }
    if (opt.dbd_output.empty())
        std::cout << table;
    else
        write_text_file(opt.dbd_output, table);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-domain sentiment classifier: per-domain recurrent-capsule "
                 "networks weighted by corpus belonging degrees"};
    app.require_subcommand(1);
    cli_options opt;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    synth->add_option("--domains", opt.synth.num_domains, "number of domains")
        ->check(CLI::PositiveNumber);
    synth->add_option("--docs-per-domain", opt.synth.docs_per_domain, "documents per domain")
        ->check(CLI::PositiveNumber);
    synth->add_option("--domain-vocab", opt.synth.domain_vocab_size,
                      "domain-specific vocabulary size")
        ->check(CLI::PositiveNumber);
    synth->add_option("--sentiment-lexicon", opt.synth.sentiment_lexicon_size,
                      "sentiment lexicon size (split between positive and negative)")
        ->check(CLI::PositiveNumber);
    synth->add_option("--overlap", opt.synth.vocab_overlap,
                      "fraction of domain vocabulary drawn from a shared pool")
        ->check(CLI::Range(0.0, 1.0));
    synth->add_option("--imbalance-ratio", opt.synth.imbalance_ratio,
                      "majority/minority polarity ratio per domain")
        ->check(CLI::Range(1.0, 1e6));
    synth->add_option("--len-min", opt.synth.doc_len_min, "minimum document length")
        ->check(CLI::PositiveNumber);
    synth->add_option("--len-max", opt.synth.doc_len_max, "maximum document length")
        ->check(CLI::PositiveNumber);
    synth->add_option("--seed", opt.synth.seed, "random seed");
    synth->add_option("-o,--output", opt.synth_output, "output JSONL path")->required();

    CLI::App* train = app.add_subcommand("train", "train the per-domain ensemble");
    train->add_option("data", opt.train_data, "training dataset (JSONL or CSV)")->required();
    train->add_option("-o,--output", opt.train_output,
                      "model file path (bare names resolve in CAPSENT_MODEL_DIR)");
    train->add_option("--seed", opt.train_cfg.training.seed, "random seed");
    train->add_option("--epochs", opt.train_cfg.training.epochs, "training epochs")
        ->check(CLI::PositiveNumber);
    train->add_option("--batch-size", opt.train_cfg.training.batch_size, "minibatch size")
        ->check(CLI::PositiveNumber)
        ->trigger_on_parse();
    train->get_option("--batch-size")->each([&opt](const std::string&) {
        opt.batch_size_given = true;
    });
    train
        ->add_option("--learning-rate", opt.train_cfg.training.learning_rate,
                     "optimizer step size")
        ->check(CLI::PositiveNumber);
    train->add_flag("--cost-sensitive", opt.train_cfg.training.cost_sensitive,
                    "dynamic cost-sensitive objective (default batch size becomes 128)");
    train
        ->add_option("--minority", opt.minority,
                     "pin the minority polarity instead of detecting it")
        ->check(CLI::IsMember({"positive", "negative"}));
    train->add_option("--hidden", opt.train_cfg.net.hidden, "recurrent units per direction")
        ->check(CLI::PositiveNumber);
    train->add_option("--embed-dim", opt.train_cfg.pipeline.embed_dim, "embedding width")
        ->check(CLI::PositiveNumber);
    train->add_option("--capsules", opt.train_cfg.net.num_capsules, "output capsules")
        ->check(CLI::PositiveNumber);
    train->add_option("--capsule-dim", opt.train_cfg.net.capsule_dim, "capsule width")
        ->check(CLI::PositiveNumber);
    train
        ->add_option("--routing-iterations", opt.train_cfg.net.routing_iterations,
                     "dynamic routing iterations")
        ->check(CLI::PositiveNumber);
    train->add_option("--min-count", opt.train_cfg.pipeline.min_count,
                      "minimum token frequency kept in the vocabulary")
        ->check(CLI::PositiveNumber);
    train->add_option("--max-len", opt.train_cfg.pipeline.max_len_cap,
                      "cap on the padded document length (0: longest document)");
    train->add_option("--stopwords", opt.stopwords_path, "stopword list, one per line");
    train->add_option("--embeddings", opt.train_cfg.training.embeddings_path,
                      "pretrained word-vector file (text format)");
    train->add_flag("--dbd-sum", opt.train_cfg.pipeline.dbd_sum_mode,
                    "aggregate document belonging degrees by sum instead of mean");
    train->add_flag("--candidate-sigmoid", opt.train_cfg.net.candidate_sigmoid,
                    "audit mode: sigmoid candidate activation in the recurrent cell");
    train->add_flag("--softmin", opt.train_cfg.net.softmin_mode,
                    "audit mode: negate logits before the output softmax");

    CLI::App* eval = app.add_subcommand("eval", "score a dataset with a saved model");
    eval->add_option("model", opt.eval_model, "model file")->required();
    eval->add_option("data", opt.eval_data, "dataset to score")->required();
    eval->add_option("-o,--output", opt.eval_output, "report JSON path");
    eval->add_option("--folds", opt.folds, "k-fold cross validation (retrains per fold)")
        ->check(CLI::PositiveNumber);

    CLI::App* predict = app.add_subcommand("predict", "predict domain and polarity");
    predict->add_option("--model", opt.predict_model, "model file");
    predict->add_option("input", opt.predict_input,
                        "input file, one document per line (default: stdin)");
    predict->add_option("-o,--output", opt.predict_output,
                        "output path (default: stdout), one JSON per line");

    CLI::App* dbd = app.add_subcommand("dbd", "dump the belonging-degree table as TSV");
    dbd->add_option("data", opt.dbd_data, "dataset to analyze")->required();
    dbd->add_option("-o,--output", opt.dbd_output, "TSV output path (default: stdout)");
    dbd->add_option("--min-count", opt.dbd_min_count,
                    "minimum token frequency (informational; counting keeps all tokens)");
    dbd->add_flag("--sum", opt.dbd_sum, "label output for sum aggregation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth->parsed()) return run_synth(opt);
        if (train->parsed()) return run_train(opt);
        if (eval->parsed()) return run_eval(opt);
        if (predict->parsed()) return run_predict(opt);
        if (dbd->parsed()) return run_dbd(opt);
    } catch (const capsent::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
