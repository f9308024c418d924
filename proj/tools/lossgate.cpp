#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lossgate/config.hpp"
#include "lossgate/data.hpp"
#include "lossgate/error.hpp"
#include "lossgate/metapredictor.hpp"
#include "lossgate/model.hpp"
#include "lossgate/report.hpp"
#include "lossgate/sweep.hpp"
#include "lossgate/toy.hpp"
#include "lossgate/trainer.hpp"

namespace lg = lossgate;

namespace {

struct DataArgs {
  std::string data;
  std::string test;
  std::string format;
  bool header = false;
  double holdout = 0.0;
};

struct ConfigArgs {
  std::string config_file;
  std::vector<std::string> sets;
};

void add_data_options(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--data", d.data, "Training data (JSONL or TSV)")->required();
  cmd->add_option("--test", d.test, "Evaluation data; defaults to the holdout or the training data");
  cmd->add_option("--format", d.format, "jsonl or tsv; guessed from the extension if omitted");
  cmd->add_flag("--header", d.header, "TSV files start with a header line");
  cmd->add_option("--holdout", d.holdout, "Fraction of --data held out for evaluation")
      ->check(CLI::Range(0.0, 0.9));
}

void add_config_options(CLI::App* cmd, ConfigArgs& c) {
  cmd->add_option("--config", c.config_file, "Flat key = value config file");
  cmd->add_option("--set", c.sets, "Override one config key (key=value); repeatable");
}

lg::DataFormat guess_format(const std::string& path, const std::string& explicit_format) {
  if (!explicit_format.empty()) return lg::parse_format(explicit_format);
  const auto ext = std::filesystem::path(path).extension().string();
  return ext == ".tsv" ? lg::DataFormat::kTsv : lg::DataFormat::kJsonl;
}

struct Data {
  std::vector<lg::Example> train;
  std::vector<lg::Example> test;
};

Data load(const DataArgs& d, std::uint64_t seed) {
  lg::LoadOptions opts{guess_format(d.data, d.format), d.header};
  Data out;
  out.train = lg::load_dataset(d.data, opts);
  if (!d.test.empty()) {
    lg::LoadOptions test_opts{guess_format(d.test, d.format), d.header};
    out.test = lg::load_dataset(d.test, test_opts);
  } else if (d.holdout > 0.0) {
    auto split = lg::holdout_split(std::move(out.train), d.holdout, seed);
    out.train = std::move(split.train);
    out.test = std::move(split.test);
  }
  return out;
}

lg::TrainerConfig build_config(const ConfigArgs& c) {
  lg::TrainerConfig config;
  if (!c.config_file.empty()) lg::apply_config(config, lg::read_config_file(c.config_file));
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw lg::UsageError("--set expects key=value, got '" + s + "'");
    lg::apply_config_value(config, s.substr(0, eq), s.substr(eq + 1));
  }
  return config;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw lg::Error("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-gated training harness"};
  app.require_subcommand(1);

  // run
  DataArgs run_data;
  ConfigArgs run_cfg;
  std::optional<std::string> run_mode;
  std::optional<std::size_t> run_epochs;
  std::optional<std::uint64_t> run_seed;
  std::optional<double> run_a_full, run_ratio;
  std::string run_out = "report.json", run_trace, run_model, run_predictor;
  bool run_eval_epochs = false;
  auto* run_cmd = app.add_subcommand("run", "Train once and write a report");
  add_data_options(run_cmd, run_data);
  add_config_options(run_cmd, run_cfg);
  run_cmd->add_option("--mode", run_mode,
                      "three-stage, train-all, fixed-threshold, auto-threshold or random-skip");
  run_cmd->add_option("--epochs", run_epochs);
  run_cmd->add_option("--seed", run_seed);
  run_cmd->add_option("--a-full", run_a_full, "TrainAll accuracy used for AGOT");
  run_cmd->add_option("--random-ratio", run_ratio, "Skip ratio for random-skip");
  run_cmd->add_option("--out", run_out, "Report JSON path");
  run_cmd->add_option("--trace", run_trace, "Per-batch trace CSV path");
  run_cmd->add_option("--save-model", run_model, "Write the trained model checkpoint");
  run_cmd->add_option("--save-predictor", run_predictor, "Write the predictor checkpoint");
  run_cmd->add_flag("--eval-every-epoch", run_eval_epochs);

  // sweep
  DataArgs sw_data;
  ConfigArgs sw_cfg;
  lg::SweepSpec spec;
  std::string sw_out = "-";
  std::optional<std::size_t> sw_threads;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a hyperparameter grid and write CSV");
  add_data_options(sweep_cmd, sw_data);
  add_config_options(sweep_cmd, sw_cfg);
  sweep_cmd->add_option("--n0", spec.n0)->delimiter(',');
  sweep_cmd->add_option("--W", spec.W)->delimiter(',');
  sweep_cmd->add_option("--alt", spec.alt)->delimiter(',');
  sweep_cmd->add_option("--thresholds", spec.fixed_thresholds)->delimiter(',');
  sweep_cmd->add_option("--epochs", spec.epochs)->delimiter(',');
  sweep_cmd->add_option("--seeds", spec.seeds)->delimiter(',');
  sweep_cmd->add_option("--max-runs", spec.max_runs);
  sweep_cmd->add_option("--threads", sw_threads, "Defaults to LOSSGATE_THREADS");
  sweep_cmd->add_option("--out", sw_out, "CSV path, '-' for stdout");

  // compare
  DataArgs cmp_data;
  ConfigArgs cmp_cfg;
  std::vector<std::uint64_t> cmp_seeds{1, 2, 3, 4, 5};
  std::vector<double> cmp_thresholds{0.1, 0.3, 0.5, 0.7};
  std::optional<std::size_t> cmp_epochs, cmp_threads;
  std::string cmp_out = "-";
  auto* cmp_cmd = app.add_subcommand("compare", "Compare every method against matched random skipping");
  add_data_options(cmp_cmd, cmp_data);
  add_config_options(cmp_cmd, cmp_cfg);
  cmp_cmd->add_option("--seeds", cmp_seeds)->delimiter(',');
  cmp_cmd->add_option("--thresholds", cmp_thresholds)->delimiter(',');
  cmp_cmd->add_option("--epochs", cmp_epochs);
  cmp_cmd->add_option("--threads", cmp_threads);
  cmp_cmd->add_option("--out", cmp_out, "CSV path, '-' for stdout");

  // gen-toy
  lg::ToyCorpusSpec toy;
  std::string toy_train = "toy_train.jsonl", toy_test = "toy_test.jsonl";
  auto* toy_cmd = app.add_subcommand("gen-toy", "Write the synthetic redundant corpus");
  toy_cmd->add_option("--train-out", toy_train);
  toy_cmd->add_option("--test-out", toy_test);
  toy_cmd->add_option("--examples", toy.train_examples);
  toy_cmd->add_option("--test-examples", toy.test_examples);
  toy_cmd->add_option("--duplication", toy.duplication);
  toy_cmd->add_option("--noise", toy.label_noise);
  toy_cmd->add_option("--hard-fraction", toy.hard_fraction);
  toy_cmd->add_option("--easy-signal", toy.easy_signal);
  toy_cmd->add_option("--hard-signal", toy.hard_signal);
  toy_cmd->add_option("--neutral-vocab", toy.neutral_vocab);
  toy_cmd->add_option("--class-vocab", toy.class_vocab);
  toy_cmd->add_option("--head-vocab", toy.head_vocab);
  toy_cmd->add_option("--seed", toy.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      lg::TrainerConfig config = build_config(run_cfg);
      if (run_mode) config.mode = lg::parse_mode(*run_mode);
      if (run_epochs) config.epochs = *run_epochs;
      if (run_seed) config.seed = *run_seed;
      if (run_ratio) config.random_ratio = *run_ratio;
      if (run_eval_epochs) config.eval_every_epoch = true;
      config.validate();
      const Data data = load(run_data, config.seed);

      std::ofstream trace;
      lg::RunOptions options;
      options.a_full = run_a_full;
      if (!run_trace.empty()) {
        trace.open(run_trace);
        if (!trace) throw lg::Error("cannot write " + run_trace);
        trace << lg::trace_header() << '\n';
        options.on_step = [&](const lg::StepTrace& t) {
          trace << lg::format_trace_line(t) << '\n';
        };
      }
      const lg::RunReport report = lg::run(config, data.train, data.test, options);
      lg::write_report(report, run_out);
      if (!run_model.empty()) lg::save_model(report.model, run_model);
      if (!run_predictor.empty()) lg::save_predictor(report.predictor, run_predictor);
      std::cout << lg::summary_line(report) << '\n';
    } else if (sweep_cmd->parsed()) {
      spec.base = build_config(sw_cfg);
      spec.base.validate();
      const Data data = load(sw_data, spec.base.seed);
      const auto result = lg::run_sweep(spec, data.train, data.test,
                                        sw_threads.value_or(lg::default_threads()));
      write_text(sw_out, lg::sweep_csv(result));
    } else if (cmp_cmd->parsed()) {
      lg::TrainerConfig config = build_config(cmp_cfg);
      if (cmp_epochs) config.epochs = *cmp_epochs;
      config.validate();
      const Data data = load(cmp_data, config.seed);
      const auto rows = lg::run_compare(config, cmp_seeds, cmp_thresholds, data.train, data.test,
                                        cmp_threads.value_or(lg::default_threads()));
      write_text(cmp_out, lg::compare_csv(rows));
    } else if (toy_cmd->parsed()) {
      const auto corpus = lg::generate_toy(toy);
      lg::write_jsonl(toy_train, corpus.train);
      lg::write_jsonl(toy_test, corpus.test);
      std::cout << "wrote " << corpus.train.size() << " training and " << corpus.test.size()
                << " test examples\n";
    }
  } catch (const lg::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
