#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "ncc/corpus.hpp"
#include "ncc/error.hpp"
#include "ncc/registry.hpp"
#include "ncc/service.hpp"
#include "ncc/synparse.hpp"
#include "ncc/task.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_model_load = 2;
constexpr int exit_bad_input = 3;

void print_registry(ncc::RegistryKind kind) {
  ncc::install_builtins();
  for (const auto* e : ncc::global_registry().list(kind)) {
    std::cout << ncc::to_string(kind) << ' ' << e->name << ' ' << e->description << '\n';
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ncc::Error(ncc::ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_preprocess(const fs::path& config) {
  const auto exp = ncc::Experiment::load(config);
  std::cout << ncc::make_task(exp.task_name())->preprocess(exp).dump() << '\n';
  return 0;
}

int cmd_train(const fs::path& config, bool resume) {
  const auto exp = ncc::Experiment::load(config);
  const auto report = ncc::make_task(exp.task_name())->train(exp, resume);
  for (std::size_t i = 0; i < report.epoch_losses.size(); ++i) {
    std::cerr << "epoch " << i + 1 << " train_loss " << report.epoch_losses[i];
    if (i < report.valid_losses.size()) std::cerr << " valid_loss " << report.valid_losses[i];
    std::cerr << '\n';
  }
  const json summary{{"num_updates", report.num_updates},
                     {"epochs", report.epoch_losses.size()},
                     {"final_train_loss", report.epoch_losses.empty() ? json() : json(report.epoch_losses.back())},
                     {"valid_losses", report.valid_losses},
                     {"stop_reason", report.stop_reason},
                     {"wall_seconds", report.wall_seconds},
                     {"checkpoint", report.checkpoint_path.string()}};
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_eval(const fs::path& config, const std::string& output) {
  const auto exp = ncc::Experiment::load(config);
  const json report = ncc::to_json(ncc::make_task(exp.task_name())->evaluate(exp));
  const fs::path out = output.empty() ? exp.save_dir() / "eval.json" : fs::path(output);
  std::ofstream(out) << report.dump(2) << '\n';
  std::cout << report.dump() << '\n';
  return 0;
}

bool is_input_error(ncc::ErrorCode code) {
  using ncc::ErrorCode;
  switch (code) {
    case ErrorCode::EmptyInput:
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnsupportedOperation:
    case ErrorCode::DedentMismatch:
    case ErrorCode::UnterminatedString:
    case ErrorCode::ColonWithoutBlock:
    case ErrorCode::UnexpectedIndent: return true;
    default: return false;
  }
}

int cmd_predict(const fs::path& model_dir, std::string task, const std::string& input, int k, bool as_json) {
  std::unique_ptr<ncc::Predictor> predictor;
  try {
    predictor = ncc::load_predictor(model_dir);
  } catch (const std::exception& e) {
    std::cerr << "ncc: cannot load model from " << model_dir << ": " << e.what() << '\n';
    return exit_model_load;
  }
  if (task == "completion") task = "complete";
  if (task == "summarization") task = "summarize";
  if (task == "retrieval") task = "search";
  try {
    if (k < 1) throw ncc::Error(ncc::ErrorCode::InvalidArgument, "k must be at least 1");
    const auto kk = static_cast<std::size_t>(k);
    json body;
    std::ostringstream text;
    if (task == "complete") {
      const auto tokens = ncc::space_tokenize(input);
      if (tokens.empty()) throw ncc::Error(ncc::ErrorCode::EmptyInput, "empty token list");
      const auto candidates = predictor->complete(tokens, kk);
      body = ncc::completion_json(candidates);
      for (const auto& c : candidates) text << c.token << '\t' << c.prob << '\n';
    } else if (task == "summarize") {
      if (ncc::space_tokenize(input).empty()) throw ncc::Error(ncc::ErrorCode::EmptyInput, "empty code");
      const auto summary = predictor->summarize(input);
      body = ncc::summary_json(summary);
      text << summary.summary << '\n';
    } else if (task == "search") {
      if (ncc::space_tokenize(input).empty()) throw ncc::Error(ncc::ErrorCode::EmptyInput, "empty query");
      const auto hits = predictor->search(input, kk);
      body = ncc::search_json(hits);
      for (const auto& h : hits) text << h.id << '\t' << h.score << '\t' << h.path << '\n';
    } else {
      throw ncc::Error(ncc::ErrorCode::InvalidArgument,
                       "unknown task '" + task + "' (use complete, summarize or search)");
    }
    std::cout << (as_json ? body.dump() + "\n" : text.str());
    return 0;
  } catch (const ncc::Error& e) {
    std::cerr << "ncc: " << e.what() << '\n';
    return is_input_error(e.code()) ? exit_bad_input : 1;
  }
}

int cmd_serve(const ncc::ServeOptions& options, const fs::path& models) {
  const ncc::ModelCatalog catalog = ncc::ModelCatalog::load(models);
  ncc::HttpServer server(catalog, options);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const int port = server.bind();
  std::cout << "serving " << catalog.entries().size() << " model(s) on http://" << options.host << ':' << port
            << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.run();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  return 0;
}

int cmd_linearize(const fs::path& file) {
  for (const auto& t : ncc::syn::linearize_source(read_file(file))) std::cout << t << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-modeling toolkit for source code"};
  app.require_subcommand(0, 1);

  bool list_models = false, list_tasks = false, list_tokenizers = false, list_metrics = false;
  app.add_flag("--list-models", list_models, "List registered models");
  app.add_flag("--list-tasks", list_tasks, "List registered tasks");
  app.add_flag("--list-tokenizers", list_tokenizers, "List registered tokenizers");
  app.add_flag("--list-metrics", list_metrics, "List registered metrics");

  std::string config;
  auto* pre = app.add_subcommand("preprocess", "Tokenize corpora and write vocabularies and shards");
  pre->add_option("-c,--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  bool resume = false;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("-c,--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_flag("--resume", resume, "Continue from the checkpoint in checkpoint.save_dir");

  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a trained model on a held-out split");
  eval->add_option("-c,--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("-o,--output", eval_out, "Report path (default <save_dir>/eval.json)");

  std::string model_dir, task, input, input_file;
  int k = 5;
  bool as_json = false;
  auto* predict = app.add_subcommand("predict", "Run a trained model on one input");
  predict->add_option("-m,--model", model_dir, "Model directory")->required();
  predict->add_option("-t,--task", task, "complete | summarize | search")->required();
  auto* in_opt = predict->add_option("-i,--input", input, "Input text");
  auto* file_opt = predict->add_option("-f,--input-file", input_file, "Read the input from a file");
  in_opt->excludes(file_opt);
  predict->add_option("-k", k, "Number of results")->default_val(5);
  predict->add_flag("--json", as_json, "Print the JSON body the HTTP API would return");

  ncc::ServeOptions serve_opts;
  std::string models_file, ui_dir;
  auto* serve = app.add_subcommand("serve", "Serve models over HTTP");
  serve->add_option("--port", serve_opts.port, "Port (0 picks a free one)")->default_val(8080);
  serve->add_option("--host", serve_opts.host, "Interface to bind")->default_val("127.0.0.1");
  serve->add_option("--models", models_file, "Model catalog (models.json)")->required()->check(CLI::ExistingFile);
  serve->add_option("--serve-ui", ui_dir, "Directory of static UI files served under /");

  std::string source_file;
  auto* lin = app.add_subcommand("linearize", "Print the linearized block tree of a source file");
  lin->add_option("file", source_file, "Source file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_tasks) print_registry(ncc::RegistryKind::task);
    if (list_models) print_registry(ncc::RegistryKind::model);
    if (list_tokenizers) print_registry(ncc::RegistryKind::tokenizer);
    if (list_metrics) print_registry(ncc::RegistryKind::metric);
    if (*pre) return cmd_preprocess(config);
    if (*train) return cmd_train(config, resume);
    if (*eval) return cmd_eval(config, eval_out);
    if (*predict) {
      if (!input_file.empty()) {
        try {
          input = read_file(input_file);
        } catch (const ncc::Error& e) {
          std::cerr << "ncc: " << e.what() << '\n';
          return exit_bad_input;
        }
      }
      return cmd_predict(model_dir, task, input, k, as_json);
    }
    if (*serve) {
      serve_opts.ui_dir = ui_dir;
      return cmd_serve(serve_opts, models_file);
    }
    if (*lin) return cmd_linearize(source_file);
    if (!(list_tasks || list_models || list_tokenizers || list_metrics)) std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "ncc: " << e.what() << '\n';
    return 1;
  }
}
