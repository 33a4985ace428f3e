#include "vistep/service.hpp"

#include <random>

#include <httplib.h>
#include <sqlite3.h>

#include "vistep/codec.hpp"
#include "vistep/error.hpp"
#include "vistep/eval.hpp"
#include "vistep/rationale.hpp"
#include "vistep/validate.hpp"

namespace vistep::service {

namespace {

constexpr const char* kRuns = "runs";
constexpr const char* kSessions = "sessions";

// Thrown inside handlers to answer with a specific status.
struct HttpFailure {
  int status;
  nlohmann::json body;
};

[[noreturn]] void fail(int status, ErrorCode code, const std::string& message,
                       nlohmann::json detail = nlohmann::json::object()) {
  throw HttpFailure{status, {{"error", Error(code, message, std::move(detail)).to_json()}}};
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::InvalidImage: return 415;
    case ErrorCode::GenerationError:
    case ErrorCode::SyntaxError:
    case ErrorCode::EmptyProgram: return 422;
    case ErrorCode::ClientError:
    case ErrorCode::BackendError: return 502;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidDocument:
    case ErrorCode::PoolTooSmall: return 400;
    default: return 500;
  }
}

nlohmann::json parse_body(const httplib::Request& req) {
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (!j.is_object()) fail(400, ErrorCode::InvalidDocument, "request body must be a JSON object");
  return j;
}

std::string required_text(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_string() || j.at(field).get<std::string>().empty()) {
    fail(400, ErrorCode::InvalidArgument, std::string("field '") + field + "' is required", {{"field", field}});
  }
  return j.at(field).get<std::string>();
}

std::string random_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  static const char* hex = "0123456789abcdef";
  std::string out;
  std::uint64_t v = rng();
  for (int i = 0; i < 16; ++i) {
    out += hex[v & 0xf];
    v >>= 4;
  }
  return out;
}

/// Wraps a handler: JSON errors with consistent status codes.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const HttpFailure& h) {
      res.status = h.status;
      res.set_content(h.body.dump(), "application/json");
    } catch (const Error& e) {
      res.status = status_for(e.code());
      res.set_content(nlohmann::json{{"error", e.to_json()}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(
          nlohmann::json{{"error", {{"code", "InternalError"}, {"message", e.what()}, {"detail", nlohmann::json::object()}}}}
              .dump(),
          "application/json");
    }
  };
}

void send_json(httplib::Response& res, const nlohmann::json& j) { res.set_content(j.dump(), "application/json"); }

}  // namespace

// --- store ----------------------------------------------------------------------

KvStore::KvStore(const std::string& path) {
  if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(ErrorCode::IoError, "cannot open store " + path + ": " + msg, {{"path", path}});
  }
  char* err = nullptr;
  const char* ddl = "PRAGMA journal_mode=WAL;"
                    "CREATE TABLE IF NOT EXISTS kv (ns TEXT NOT NULL, key TEXT NOT NULL, value TEXT NOT NULL,"
                    " PRIMARY KEY (ns, key));";
  if (sqlite3_exec(db_, ddl, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(ErrorCode::IoError, "cannot initialise store: " + msg, {{"path", path}});
  }
}

KvStore::~KvStore() {
  if (db_) sqlite3_close(db_);
}

void KvStore::put(const std::string& ns, const std::string& key, const std::string& value) {
  std::lock_guard lock(mu_);
  sqlite3_stmt* st = nullptr;
  sqlite3_prepare_v2(db_, "INSERT OR REPLACE INTO kv (ns, key, value) VALUES (?, ?, ?)", -1, &st, nullptr);
  sqlite3_bind_text(st, 1, ns.c_str(), -1, SQLITE_TRANSIENT);
  sqlite3_bind_text(st, 2, key.c_str(), -1, SQLITE_TRANSIENT);
  sqlite3_bind_text(st, 3, value.data(), static_cast<int>(value.size()), SQLITE_TRANSIENT);
  const int rc = sqlite3_step(st);
  sqlite3_finalize(st);
  if (rc != SQLITE_DONE) throw Error(ErrorCode::IoError, std::string("store write failed: ") + sqlite3_errmsg(db_));
}

std::optional<std::string> KvStore::get(const std::string& ns, const std::string& key) const {
  std::lock_guard lock(mu_);
  sqlite3_stmt* st = nullptr;
  sqlite3_prepare_v2(db_, "SELECT value FROM kv WHERE ns = ? AND key = ?", -1, &st, nullptr);
  sqlite3_bind_text(st, 1, ns.c_str(), -1, SQLITE_TRANSIENT);
  sqlite3_bind_text(st, 2, key.c_str(), -1, SQLITE_TRANSIENT);
  std::optional<std::string> out;
  if (sqlite3_step(st) == SQLITE_ROW) {
    const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(st, 0));
    out = std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(st, 0)));
  }
  sqlite3_finalize(st);
  return out;
}

std::vector<std::string> KvStore::keys(const std::string& ns) const {
  std::lock_guard lock(mu_);
  sqlite3_stmt* st = nullptr;
  sqlite3_prepare_v2(db_, "SELECT key FROM kv WHERE ns = ? ORDER BY rowid", -1, &st, nullptr);
  sqlite3_bind_text(st, 1, ns.c_str(), -1, SQLITE_TRANSIENT);
  std::vector<std::string> out;
  while (sqlite3_step(st) == SQLITE_ROW) out.emplace_back(reinterpret_cast<const char*>(sqlite3_column_text(st, 0)));
  sqlite3_finalize(st);
  return out;
}

// --- service --------------------------------------------------------------------

Service::Service(ServiceConfig config)
    : config_(std::move(config)),
      registry_(standard_registry(config_.modules)),
      store_(config_.store_path),
      images_(config_.image_dir.empty() ? throw Error(ErrorCode::InvalidArgument, "service needs an image directory")
                                        : config_.image_dir),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Service::~Service() { stop(); }

std::shared_ptr<std::mutex> Service::session_lock(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  auto& m = session_locks_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

void Service::install_routes() {
  auto& s = *server_;

  s.Post("/api/images", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(req.body.data());
    const std::span<const std::uint8_t> bytes{p, req.body.size()};
    if (codec::sniff(bytes) == codec::ImageFormat::Unknown) {
      fail(415, ErrorCode::InvalidImage, "only PNG and JPEG uploads are accepted");
    }
    const Image img = codec::decode_image(bytes);
    send_json(res, {{"image_id", images_.put(img)}, {"width", img.width()}, {"height", img.height()}});
  }));

  s.Get(R"(/api/images/([0-9A-Za-z]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto img = images_.get(req.matches[1]);
    if (!img) fail(404, ErrorCode::NotFound, "unknown image", {{"image_id", req.matches[1].str()}});
    const auto png = codec::encode_png(*img);
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }));

  // Shared by /api/generate and session iterations.
  auto prompt_for = [this](const nlohmann::json& body, const std::string& task) {
    auto it = config_.tasks.find(task);
    if (it == config_.tasks.end()) fail(400, ErrorCode::InvalidArgument, "unknown task '" + task + "'", {{"task", task}});
    gen::PromptSpec spec = it->second;
    if (body.contains("strategy")) {
      auto st = gen::strategy_from_string(body.at("strategy").get<std::string>());
      if (!st) fail(400, ErrorCode::InvalidArgument, "unknown strategy");
      spec.strategy = *st;
    }
    if (body.contains("k")) spec.k = body.at("k").get<int>();
    return spec;
  };

  auto input_map = [this](const nlohmann::json& ids, const std::string& task) {
    std::map<std::string, Value> inputs;
    auto load = [&](const std::string& name, const std::string& id) {
      auto img = images_.get(id);
      if (!img) fail(404, ErrorCode::NotFound, "unknown image " + id, {{"image_id", id}});
      inputs.emplace(name, Value::image(*img));
    };
    if (ids.is_object()) {
      for (const auto& [name, id] : ids.items()) load(name, id.get<std::string>());
    } else if (ids.is_array()) {
      auto t = eval::task_from_string(task);
      const auto names = eval::input_names(t ? *t : eval::Task::Qa);
      if (ids.size() != names.size()) {
        fail(400, ErrorCode::InvalidArgument,
             "task '" + task + "' takes " + std::to_string(names.size()) + " input image(s)");
      }
      for (std::size_t i = 0; i < names.size(); ++i) load(names[i], ids[i].get<std::string>());
    } else {
      fail(400, ErrorCode::InvalidArgument, "input_image_ids must be a list or an object");
    }
    return inputs;
  };

  // Runs a parsed program, persists the record and returns it.
  auto run_program = [this](const dsl::Program& program, const std::map<std::string, Value>& inputs) {
    std::set<std::string> names;
    for (const auto& [n, v] : inputs) names.insert(n);
    auto report = dsl::validate(program, registry_, names);
    if (!report.ok()) {
      throw HttpFailure{422,
                        {{"error", Error(ErrorCode::InvalidDocument, "program fails validation: " + report.issues.front().message)
                                       .to_json()},
                         {"validation", report.to_json()}}};
    }
    ExecuteOptions eo = config_.execute;
    eo.run_id = random_id();
    RunRecord run = execute(program, inputs, registry_, config_.backend.get(), eo);
    store_.put(kRuns, run.run_id, run.to_json(&images_).dump());
    return run;
  };

  auto run_summary = [this](const RunRecord& run) {
    nlohmann::json j{{"run_id", run.run_id}, {"status", run.ok() ? "ok" : "failed"}};
    j["result"] = run.result ? value_to_json(*run.result, &images_) : nlohmann::json();
    j["result_summary"] = run.result ? nlohmann::json(run.result->summary()) : nlohmann::json();
    const auto* f = run.failed_step();
    j["error"] = f ? *f->error : nlohmann::json();
    if (f) j["failed_step"] = f->step;
    return j;
  };

  s.Post("/api/generate", guarded([this, prompt_for](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const auto task = required_text(body, "task");
    const auto instruction = required_text(body, "instruction");
    const auto spec = prompt_for(body, task);
    if (!config_.client) fail(503, ErrorCode::ClientError, "no completion client configured");
    auto t = eval::task_from_string(task);
    const auto names = eval::input_names(t ? *t : eval::Task::Qa);
    const auto g = gen::generate_program(spec, instruction, *config_.client, body.value("seed", 0ULL), &registry_,
                                         std::set<std::string>(names.begin(), names.end()));
    send_json(res, {{"program", g.program.source}, {"prompt", g.prompt}});
  }));

  s.Post("/api/execute", guarded([input_map, run_program, run_summary](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const auto source = required_text(body, "program");
    const auto task = body.value("task", std::string("qa"));
    const auto inputs = input_map(body.value("input_image_ids", nlohmann::json::array()), task);
    dsl::Program program;
    try {
      program = dsl::parse_program(source);
    } catch (const Error& e) {
      throw HttpFailure{422, {{"error", e.to_json()}}};
    }
    send_json(res, run_summary(run_program(program, inputs)));
  }));

  s.Get(R"(/api/runs/([0-9A-Za-z_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto stored = store_.get(kRuns, req.matches[1]);
    if (!stored) fail(404, ErrorCode::NotFound, "unknown run", {{"run_id", req.matches[1].str()}});
    res.set_content(*stored, "application/json");
  }));

  s.Get(R"(/api/runs/([0-9A-Za-z_-]+)/rationale)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto stored = store_.get(kRuns, req.matches[1]);
    if (!stored) fail(404, ErrorCode::NotFound, "unknown run", {{"run_id", req.matches[1].str()}});
    const auto run = RunRecord::from_json(nlohmann::json::parse(*stored), images_);
    rationale::Options opts;
    opts.registry = &registry_;
    if (req.get_param_value("format") == "json") {
      send_json(res, rationale::render_sidecar(run, opts));
    } else {
      res.set_content(rationale::render_html(run, opts), "text/html; charset=utf-8");
    }
  }));

  s.Post("/api/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const auto task = required_text(body, "task");
    if (!config_.tasks.contains(task)) fail(400, ErrorCode::InvalidArgument, "unknown task '" + task + "'");
    const auto ids = body.value("image_ids", nlohmann::json::array());
    for (const auto& id : ids) {
      if (!id.is_string() || !images_.get(id.get<std::string>())) {
        fail(404, ErrorCode::NotFound, "unknown image " + id.dump(), {{"image_id", id}});
      }
    }
    nlohmann::json session{{"session_id", random_id()}, {"task", task}, {"image_ids", ids},
                           {"history", nlohmann::json::array()}};
    store_.put(kSessions, session.at("session_id"), session.dump());
    send_json(res, session);
  }));

  s.Get("/api/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"sessions", store_.keys(kSessions)}});
  }));

  s.Get(R"(/api/sessions/([0-9A-Za-z_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto stored = store_.get(kSessions, req.matches[1]);
    if (!stored) fail(404, ErrorCode::NotFound, "unknown session", {{"session_id", req.matches[1].str()}});
    res.set_content(*stored, "application/json");
  }));

  s.Post(R"(/api/sessions/([0-9A-Za-z_-]+)/iterations)",
         guarded([this, prompt_for, input_map, run_program, run_summary](const httplib::Request& req,
                                                                          httplib::Response& res) {
           const std::string id = req.matches[1];
           const auto body = parse_body(req);
           const auto instruction = required_text(body, "instruction");
           auto lock = session_lock(id);
           std::lock_guard guard(*lock);
           auto stored = store_.get(kSessions, id);
           if (!stored) fail(404, ErrorCode::NotFound, "unknown session", {{"session_id", id}});
           auto session = nlohmann::json::parse(*stored);
           const auto task = session.at("task").get<std::string>();
           const auto spec = prompt_for(body, task);
           const auto inputs = input_map(session.at("image_ids"), task);
           std::set<std::string> names;
           for (const auto& [n, v] : inputs) names.insert(n);

           nlohmann::json entry{{"index", session.at("history").size()}, {"instruction", instruction}};
           try {
             if (!config_.client) fail(503, ErrorCode::ClientError, "no completion client configured");
             const auto g =
                 gen::generate_program(spec, instruction, *config_.client, body.value("seed", 0ULL), &registry_, names);
             entry["program"] = g.program.source;
             const auto run = run_program(g.program, inputs);
             entry.update(run_summary(run));
           } catch (const Error& e) {
             if (e.code() != ErrorCode::GenerationError && e.code() != ErrorCode::ClientError) throw;
             entry["program"] = nullptr;
             entry["run_id"] = nullptr;
             entry["status"] = "failed";
             entry["result"] = nullptr;
             entry["result_summary"] = nullptr;
             entry["error"] = e.to_json();
           }
           session["history"].push_back(entry);
           store_.put(kSessions, id, session.dump());
           send_json(res, entry);
         }));
}

int Service::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void Service::listen(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace vistep::service
