#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vistep/backend.hpp"
#include "vistep/generator.hpp"
#include "vistep/interpreter.hpp"
#include "vistep/modules.hpp"
#include "vistep/serialize.hpp"

struct sqlite3;

namespace httplib {
class Server;
}

namespace vistep::service {

/// Single-file key -> JSON text store. Table `kv(ns, key, value)`, primary key
/// (ns, key). Values are stored and returned verbatim.
class KvStore {
 public:
  explicit KvStore(const std::string& path);  // ":memory:" for a private store
  ~KvStore();
  KvStore(const KvStore&) = delete;
  KvStore& operator=(const KvStore&) = delete;

  void put(const std::string& ns, const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& ns, const std::string& key) const;
  std::vector<std::string> keys(const std::string& ns) const;

 private:
  sqlite3* db_ = nullptr;
  mutable std::mutex mu_;
};

struct ServiceConfig {
  std::string store_path = ":memory:";
  std::string image_dir;                      // required
  std::map<std::string, gen::PromptSpec> tasks;  // keyed by task name (qa, pairqa, tagging, editing)
  std::shared_ptr<gen::CompletionClient> client;
  std::shared_ptr<backend::Backend> backend;
  ModuleConfig modules;
  ExecuteOptions execute;
};

/// Routes:
///   POST /api/images                      raw PNG/JPEG -> {"image_id"}
///   GET  /api/images/{id}                 image/png
///   POST /api/generate                    {instruction, task, strategy?, k?, seed?} -> {program, prompt}
///   POST /api/execute                     {program, input_image_ids, task} -> {run_id, status, result, error}
///   GET  /api/runs/{id}                   stored run record
///   GET  /api/runs/{id}/rationale         HTML (?format=json for the sidecar)
///   POST /api/sessions                    {task, image_ids} -> session
///   GET  /api/sessions, /api/sessions/{id}
///   POST /api/sessions/{id}/iterations    {instruction, seed?} -> appended history entry
/// Errors: {"error": {"code", "message", "detail"}} with a matching status.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds (port 0 picks one), serves on a background thread, returns the port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void listen(const std::string& host, int port);
  void stop();

  const Registry& registry() const { return registry_; }
  ImageStore& images() { return images_; }

 private:
  void install_routes();
  std::shared_ptr<std::mutex> session_lock(const std::string& id);

  ServiceConfig config_;
  Registry registry_;
  KvStore store_;
  DirectoryImageStore images_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> session_locks_;
};

}  // namespace vistep::service
