#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "vizrank/error.hpp"
#include "vizrank/pipeline.hpp"
#include "vizrank/service.hpp"
#include "vizrank/stats.hpp"

namespace fs = std::filesystem;
using namespace vizrank;

namespace {

// Flags shared by every command that reads a PipelineConfig. Only flags given
// on the command line override the config file and environment.
struct ConfigFlags {
  std::string config_file;
  std::optional<std::string> data_dir;
  std::vector<std::string> models;
  std::optional<std::string> scoring;
  std::optional<int> port;
  std::optional<std::string> host;
  std::optional<std::string> log;
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<int> batch_size;
  std::optional<std::uint64_t> seed;
};

PipelineConfig resolve(const ConfigFlags& flags) {
  PipelineConfig config;
  if (!flags.config_file.empty()) apply_config(config, parse_config_text(read_file(flags.config_file)));
  apply_environment(config);
  if (flags.data_dir) config.data_dir = *flags.data_dir;
  if (!flags.models.empty()) config.model_paths = flags.models;
  if (flags.scoring) config.scoring = Scoring::parse(*flags.scoring);
  if (flags.port) config.port = *flags.port;
  if (flags.host) config.host = *flags.host;
  if (flags.log) config.log_path = *flags.log;
  if (flags.epochs) config.train.epochs = *flags.epochs;
  if (flags.learning_rate) config.train.learning_rate = *flags.learning_rate;
  if (flags.batch_size) config.train.batch_size = *flags.batch_size;
  if (flags.seed) config.train.seed = *flags.seed;
  return config;
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text << '\n';
  } else {
    write_file(output, text + '\n');
  }
}

std::vector<DataTable> read_input(const std::string& path) {
  std::vector<std::string> dropped;
  const auto raw = load_table(path, &dropped);
  for (const auto& name : dropped) {
    std::cerr << "warning: " << path << ": dropped non-numeric column '" << name << "'\n";
  }
  return prepare_table(raw);
}

std::vector<ModelBundle> load_bundles(const std::vector<std::string>& paths) {
  if (paths.empty()) throw Error(Errc::InvalidConfig, "no model bundle given (--models)");
  std::vector<ModelBundle> bundles;
  for (const auto& path : paths) bundles.push_back(load_bundle(path));
  return bundles;
}

std::vector<DataTable> corpus(const std::string& dir) {
  std::vector<std::string> skipped;
  auto tables = load_corpus(dir, &skipped);
  for (const auto& s : skipped) std::cerr << "warning: skipped " << s << '\n';
  if (tables.empty()) throw Error(Errc::EmptyInput, "no admissible tables in '" + dir + "'");
  return tables;
}

int run_stats(const std::string& input, const std::string& output) {
  auto json = nlohmann::ordered_json::array();
  for (const auto& table : read_input(input)) {
    json.push_back({{"table_id", table.id}, {"features", to_json(true_features(table))}});
  }
  emit(json.dump(2), output);
  return 0;
}

int run_render(const std::string& input, const std::string& out_dir, const std::string& format,
               const PipelineConfig& config) {
  if (format != "pgm" && format != "png" && format != "both") {
    throw Error(Errc::InvalidConfig, "format must be pgm, png or both");
  }
  fs::create_directories(out_dir);
  for (const auto& table : read_input(input)) {
    for (const auto& [type, image] : render_candidates(table, config.render)) {
      const auto stem = (fs::path(out_dir) / image_id(table.id, type)).string();
      if (format != "png") write_file(stem + ".pgm", encode_pgm(image));
      if (format != "pgm") write_file(stem + ".png", encode_png(image));
    }
  }
  return 0;
}

int run_synth(const std::string& out_dir, SyntheticSpec spec, const std::vector<std::string>& names) {
  if (!names.empty()) {
    spec.archetypes.clear();
    for (const auto& name : names) {
      bool found = false;
      for (Archetype a : kArchetypes) {
        if (to_string(a) == name) {
          spec.archetypes.push_back(a);
          found = true;
        }
      }
      if (!found) throw Error(Errc::InvalidConfig, "unknown archetype '" + name + "'");
    }
  }
  const auto tables = generate_corpus(spec);
  write_corpus(out_dir, tables);
  std::cerr << "wrote " << tables.size() << " tables to " << out_dir << '\n';
  return 0;
}

int run_train(const PipelineConfig& config, const std::string& out, std::string split_path) {
  const auto tables = corpus(config.data_dir);
  std::vector<std::string> ids;
  for (const auto& t : tables) ids.push_back(t.id);
  const auto split = split_dataset(ids, config.train.seed);
  if (split_path.empty()) split_path = (fs::path(config.data_dir) / "split.json").string();
  write_file(split_path, to_json(split).dump(2) + '\n');

  const auto train_set = build_examples(subset(tables, split.train), config.render);
  const auto val_set = build_examples(subset(tables, split.validation), config.render);
  std::cerr << "training on " << split.train.size() << " tables, validating on "
            << split.validation.size() << '\n';
  const auto bundle = train(train_set, val_set, config.train);
  for (const auto& [type, history] : bundle.history) {
    std::cerr << to_string(type) << ": train " << history.train_loss.front() << " -> "
              << history.train_loss.back();
    if (!history.validation_loss.empty()) {
      std::cerr << ", validation " << history.validation_loss.front() << " -> "
                << history.validation_loss[history.best_epoch] << " (epoch " << history.best_epoch << ")";
    }
    std::cerr << '\n';
  }
  save_bundle(bundle, out);
  return 0;
}

int run_recommend(const PipelineConfig& config, const std::string& input, const std::string& output) {
  const auto bundles = load_bundles(config.model_paths);
  const bool batch = fs::is_directory(input);
  const auto tables = batch ? corpus(input) : read_input(input);
  auto json = nlohmann::ordered_json::array();
  for (const auto& table : tables) json.push_back(to_json(recommend(table, bundles, config.scoring, config.render)));
  emit((json.size() == 1 && !batch ? json.front() : json).dump(2), output);
  return 0;
}

int run_eval(const PipelineConfig& config, std::string gold_path, std::string split_path,
             const std::string& judgments, const std::vector<std::string>& scoring_names,
             const std::string& json_out) {
  auto tables = corpus(config.data_dir);
  if (split_path.empty() && judgments.empty()) {
    const auto candidate = fs::path(config.data_dir) / "split.json";
    if (fs::exists(candidate)) split_path = candidate.string();
  }
  if (!split_path.empty()) {
    const auto split = split_from_json(nlohmann::json::parse(read_file(split_path)));
    tables = subset(tables, split.test);
  }

  GoldLabels gold;
  if (!judgments.empty()) {
    const auto tasks = generate_tasks(tables);
    const auto log = read_judgment_log(judgments);
    for (const auto& t : aggregate_tally(log, tasks)) gold[t.table_id] = {t.preferred.begin(), t.preferred.end()};
    std::erase_if(tables, [&](const DataTable& t) { return !gold.contains(t.id); });
    if (tables.empty()) throw Error(Errc::EmptyInput, "no judged tables");
  } else {
    if (gold_path.empty()) gold_path = (fs::path(config.data_dir) / "gold.json").string();
    gold = read_gold(gold_path);
  }

  const auto bundles = load_bundles(config.model_paths);
  std::vector<NamedModel> models;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    auto name = fs::path(config.model_paths[i]).stem().string();
    for (const auto& m : models) {
      if (m.name == name) name += "#" + std::to_string(i + 1);
    }
    models.push_back({name, {&bundles[i]}});
  }
  if (bundles.size() > 1) {
    NamedModel ensemble{"ensemble", {}};
    for (const auto& b : bundles) ensemble.members.push_back(&b);
    models.push_back(ensemble);
  }
  std::vector<Scoring> scorings;
  for (const auto& name : scoring_names) scorings.push_back(Scoring::parse(name));

  const auto rows = evaluate(tables, gold, models, scorings, config.render);
  std::cout << format_report(rows);
  if (!json_out.empty()) write_file(json_out, report_json(rows).dump(2) + '\n');
  return 0;
}

HttpServer* g_server = nullptr;

int run_serve(const PipelineConfig& config) {
  config.validate(true);
  auto tables = corpus(config.data_dir);
  std::vector<ModelBundle> bundles;
  for (const auto& path : config.model_paths) bundles.push_back(load_bundle(path));
  JudgingService service(std::move(tables), std::move(bundles), config.scoring, config.render,
                         config.judgment_log());
  HttpServer server(service);
  const int port = server.bind(config.host, config.port);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cerr << "serving " << service.tasks().size() << " tasks on http://" << config.host << ':'
            << port << " (log " << config.judgment_log() << ", " << service.judgment_count()
            << " judgments replayed)\n";
  server.listen();
  g_server = nullptr;
  return 0;
}

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("--config", flags.config_file, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--data", flags.data_dir, "data directory");
  cmd->add_option("--models", flags.models, "model bundle file(s); several form an ensemble")->delimiter(',');
  cmd->add_option("--scoring", flags.scoring, "l1 or topK, e.g. top5");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vizrank: plot type recommendation by statistic extraction"};
  app.require_subcommand(1);
  ConfigFlags flags;
  std::string input;
  std::string output;

  auto* stats = app.add_subcommand("stats", "print the feature vector of a table");
  stats->add_option("--input", input, "CSV or JSON table")->required();
  stats->add_option("--output", output, "write JSON here instead of stdout");

  std::string out_dir;
  std::string format = "both";
  auto* render_cmd = app.add_subcommand("render", "render the candidate plots of a table");
  render_cmd->add_option("--input", input, "CSV or JSON table")->required();
  render_cmd->add_option("--out-dir", out_dir, "output directory")->required();
  render_cmd->add_option("--format", format, "pgm, png or both");
  add_config_flags(render_cmd, flags);

  SyntheticSpec spec;
  std::vector<std::string> archetypes;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with gold labels");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--count", spec.count_per_archetype, "tables per archetype");
  synth->add_option("--seed", spec.seed, "random seed");
  synth->add_option("--noise", spec.noise, "noise level");
  synth->add_option("--archetypes", archetypes, "subset of cloud,series,sparse")->delimiter(',');

  std::string split_path;
  auto* train_cmd = app.add_subcommand("train", "train a model bundle on a corpus directory");
  add_config_flags(train_cmd, flags);
  train_cmd->add_option("--out", output, "bundle file to write")->required();
  train_cmd->add_option("--split", split_path, "where to write the split (default <data>/split.json)");
  train_cmd->add_option("--epochs", flags.epochs, "training epochs");
  train_cmd->add_option("--lr", flags.learning_rate, "learning rate");
  train_cmd->add_option("--batch", flags.batch_size, "mini-batch size");
  train_cmd->add_option("--seed", flags.seed, "random seed for the split and initialization");

  auto* recommend_cmd = app.add_subcommand("recommend", "choose a plot type for a table or directory");
  add_config_flags(recommend_cmd, flags);
  recommend_cmd->add_option("--input", input, "table file or directory")->required();
  recommend_cmd->add_option("--output", output, "write JSON here instead of stdout");

  std::string gold_path;
  std::string judgments;
  std::string json_out;
  std::vector<std::string> scorings{"l1", "top5", "top10"};
  auto* eval_cmd = app.add_subcommand("eval", "score selections against gold labels");
  add_config_flags(eval_cmd, flags);
  eval_cmd->add_option("--gold", gold_path, "gold label file (default <data>/gold.json)");
  eval_cmd->add_option("--split", split_path, "split file; its test ids are evaluated");
  eval_cmd->add_option("--judgments", judgments, "judgment log; crowd tallies become the gold labels");
  eval_cmd->add_option("--scorings", scorings, "scoring kinds")->delimiter(',');
  eval_cmd->add_option("--json", json_out, "also write the report as JSON");

  auto* serve_cmd = app.add_subcommand("serve", "run the judging HTTP service");
  add_config_flags(serve_cmd, flags);
  serve_cmd->add_option("--port", flags.port, "listen port");
  serve_cmd->add_option("--host", flags.host, "listen address");
  serve_cmd->add_option("--log", flags.log, "judgment log (default <data>/judgments.jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const auto config = resolve(flags);
    config.validate(false);
    if (*stats) return run_stats(input, output);
    if (*render_cmd) return run_render(input, out_dir, format, config);
    if (*synth) return run_synth(out_dir, spec, archetypes);
    if (*train_cmd) return run_train(config, output, split_path);
    if (*recommend_cmd) return run_recommend(config, input, output);
    if (*eval_cmd) return run_eval(config, gold_path, split_path, judgments, scorings, json_out);
    if (*serve_cmd) return run_serve(config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
