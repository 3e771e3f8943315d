#include "vizrank/service.hpp"

#include <chrono>
#include <numeric>

#include <httplib.h>

#include "vizrank/error.hpp"
#include "vizrank/pipeline.hpp"
#include "vizrank/rng.hpp"

namespace vizrank {
namespace {

HttpReply json_reply(int status, const nlohmann::ordered_json& json) {
  return {status, json.dump(), "application/json"};
}

HttpReply error_reply(int status, const std::string& message) {
  return json_reply(status, {{"error", message}});
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

JudgingService::JudgingService(std::vector<DataTable> tables, std::vector<ModelBundle> bundles,
                               const Scoring& scoring, const RenderConfig& render,
                               std::string log_path, const TaskPlan& plan)
    : tables_(std::move(tables)), scoring_(scoring), log_path_(std::move(log_path)) {
  tasks_ = generate_tasks(tables_, plan);
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (!task_index_.emplace(tasks_[i].id, i).second) {
      throw Error(Errc::InvalidConfig, "duplicate task id '" + tasks_[i].id + "'");
    }
  }
  for (const auto& table : tables_) {
    for (const auto& [type, image] : render_candidates(table, render)) {
      images_[image_id(table.id, type)] = encode_png(image);
    }
  }
  if (!bundles.empty()) {
    for (const auto& table : tables_) {
      predictions_[table.id] = recommend(table, bundles, scoring_, render).chosen;
    }
    has_model_ = true;
  }

  for (const auto& record : read_judgment_log(log_path_)) {
    const auto it = task_index_.find(record.task_id);
    if (it == task_index_.end()) {
      throw Error(Errc::UnknownTask, "log references unknown task '" + record.task_id + "'");
    }
    validate_judgment(record, tasks_[it->second]);
    accept(record);
  }
  log_.open(log_path_, std::ios::app);
  if (!log_) throw Error(Errc::IoFailure, "cannot open judgment log '" + log_path_ + "'");
}

void JudgingService::accept(const JudgmentRecord& record) {
  judgments_.push_back(record);
  answered_.emplace(record.judge_id, record.task_id);
}

std::vector<std::size_t> JudgingService::task_order(const std::string& judge_id) const {
  std::vector<std::size_t> order(tasks_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(fnv1a(judge_id));
  rng.shuffle(order.begin(), order.end());
  return order;
}

std::optional<Task> JudgingService::next_task(const std::string& judge_id) const {
  const auto order = task_order(judge_id);
  std::shared_lock lock(mutex_);
  for (std::size_t index : order) {
    if (!answered_.contains({judge_id, tasks_[index].id})) return tasks_[index];
  }
  return std::nullopt;
}

HttpReply JudgingService::submit(const std::string& body) {
  JudgmentRecord record;
  try {
    const auto json = nlohmann::json::parse(body);
    record = judgment_from_json(json);
    if (!json.contains("timestamp")) record.timestamp = now_ms();
    const auto it = task_index_.find(record.task_id);
    if (it == task_index_.end()) return error_reply(400, "unknown task '" + record.task_id + "'");
    validate_judgment(record, tasks_[it->second]);
  } catch (const nlohmann::json::exception& e) {
    return error_reply(400, std::string("malformed JSON: ") + e.what());
  } catch (const Error& e) {
    return error_reply(400, e.what());
  }

  std::unique_lock lock(mutex_);
  if (answered_.contains({record.judge_id, record.task_id})) {
    return error_reply(409, "judge '" + record.judge_id + "' already answered '" + record.task_id + "'");
  }
  const auto line = to_json(record);
  log_ << line.dump() << '\n';
  log_.flush();
  if (!log_) return error_reply(500, "failed to write the judgment log");
  accept(record);
  return json_reply(201, line);
}

std::vector<PointsTally> JudgingService::tally() const {
  std::shared_lock lock(mutex_);
  return aggregate_tally(judgments_, tasks_);
}

HttpReply JudgingService::report() const {
  if (!has_model_) return error_reply(503, "no model bundle loaded");
  const auto tallies = tally();
  nlohmann::ordered_json json;
  json["scoring"] = scoring_.name();
  json["tables"] = tallies.size();
  if (tallies.empty()) {
    json["metrics"] = nullptr;
    return json_reply(200, json);
  }
  std::map<std::string, PlotType> predicted;
  std::map<std::string, std::set<PlotType>> gold;
  for (const auto& t : tallies) {
    predicted[t.table_id] = predictions_.at(t.table_id);
    gold[t.table_id] = {t.preferred.begin(), t.preferred.end()};
  }
  json["metrics"] = to_json(metrics(predicted, gold));
  json["predictions"] = nlohmann::ordered_json::object();
  for (const auto& [id, type] : predicted) json["predictions"][id] = to_string(type);
  return json_reply(200, json);
}

std::optional<std::string> JudgingService::image_png(const std::string& image_id) const {
  const auto it = images_.find(image_id);
  if (it == images_.end()) return std::nullopt;
  return it->second;
}

std::size_t JudgingService::judgment_count() const {
  std::shared_lock lock(mutex_);
  return judgments_.size();
}

HttpReply handle_next(const JudgingService& service, const std::string& judge_id) {
  if (judge_id.empty()) return error_reply(400, "missing 'judge' parameter");
  const auto task = service.next_task(judge_id);
  if (!task) return {204, "", "application/json"};
  return json_reply(200, to_json(*task, false));
}

HttpReply handle_tally(const JudgingService& service) {
  auto json = nlohmann::ordered_json::array();
  for (const auto& t : service.tally()) json.push_back(to_json(t));
  return json_reply(200, json);
}

struct HttpServer::Impl {
  JudgingService& service;
  httplib::Server server;
};

namespace {

void send(httplib::Response& res, const HttpReply& reply) {
  res.status = reply.status;
  if (!reply.body.empty()) res.set_content(reply.body, reply.content_type);
}

}  // namespace

HttpServer::HttpServer(JudgingService& service) : impl_(new Impl{service, {}}) {
  auto& s = impl_->server;
  auto& svc = impl_->service;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  s.Get("/api/tasks/next", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_next(svc, req.get_param_value("judge")));
  });
  s.Post("/api/judgments", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.submit(req.body));
  });
  s.Options("/api/judgments", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "POST");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  s.Get("/api/tally", [&svc](const httplib::Request&, httplib::Response& res) {
    send(res, handle_tally(svc));
  });
  s.Get("/api/report", [&svc](const httplib::Request&, httplib::Response& res) {
    send(res, svc.report());
  });
  s.Get(R"(/plots/([^/]+)\.png)", [&svc](const httplib::Request& req, httplib::Response& res) {
    const auto png = svc.image_png(req.matches[1]);
    if (!png) {
      send(res, error_reply(404, "unknown image"));
      return;
    }
    res.set_content(*png, "image/png");
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send(res, error_reply(500, message));
  });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace vizrank
