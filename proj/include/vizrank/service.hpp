#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "vizrank/eval.hpp"
#include "vizrank/regressor.hpp"
#include "vizrank/render.hpp"
#include "vizrank/selector.hpp"
#include "vizrank/table.hpp"

namespace vizrank {

struct PipelineConfig {
  std::string data_dir = ".";
  std::vector<std::string> model_paths;
  RenderConfig render;
  TrainConfig train;
  Scoring scoring = Scoring::top_k(5);
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string log_path;  // empty: <data_dir>/judgments.jsonl

  std::string judgment_log() const;
  // Port range, render/train settings and, when `check_paths`, that the data
  // directory and model files exist. Throws InvalidConfig.
  void validate(bool check_paths) const;
};

// Parses "key = value" lines; '#' starts a comment. Throws MalformedInput.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Applies known keys; unknown keys throw InvalidConfig.
void apply_config(PipelineConfig& config, const std::map<std::string, std::string>& values);

// VIZRANK_PORT and VIZRANK_DATA_DIR.
void apply_environment(PipelineConfig& config);

struct HttpReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Task dispenser and judgment sink behind the HTTP API. Thread-safe: reads
// share a lock, judgment writes are serialized and flushed before returning.
class JudgingService {
 public:
  // Replays any existing log at `log_path` before accepting new judgments.
  // `bundles` may be empty, in which case the report endpoint is unavailable.
  JudgingService(std::vector<DataTable> tables, std::vector<ModelBundle> bundles,
                 const Scoring& scoring, const RenderConfig& render, std::string log_path,
                 const TaskPlan& plan = {});

  const std::vector<Task>& tasks() const { return tasks_; }

  // Task order a judge walks through: seeded by the judge id.
  std::vector<std::size_t> task_order(const std::string& judge_id) const;

  std::optional<Task> next_task(const std::string& judge_id) const;
  HttpReply submit(const std::string& body);
  std::vector<PointsTally> tally() const;
  HttpReply report() const;
  std::optional<std::string> image_png(const std::string& image_id) const;

  std::size_t judgment_count() const;

 private:
  void accept(const JudgmentRecord& record);

  std::vector<DataTable> tables_;
  std::vector<Task> tasks_;
  std::map<std::string, std::size_t> task_index_;
  std::map<std::string, std::string> images_;
  std::map<std::string, PlotType> predictions_;
  Scoring scoring_;
  bool has_model_ = false;

  mutable std::shared_mutex mutex_;
  std::vector<JudgmentRecord> judgments_;
  std::set<std::pair<std::string, std::string>> answered_;  // (judge, task)
  std::string log_path_;
  std::ofstream log_;
};

HttpReply handle_next(const JudgingService& service, const std::string& judge_id);
HttpReply handle_tally(const JudgingService& service);

class HttpServer {
 public:
  explicit HttpServer(JudgingService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws IoFailure.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called from another thread.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vizrank
