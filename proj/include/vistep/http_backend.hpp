#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "vistep/backend.hpp"

namespace httplib {
class Server;
}

namespace vistep::backend {

// Wire routes:
//   POST /v1/images          body: PNG or JPEG bytes  -> {"image_ref": "<sha256>"}
//   GET  /v1/images/{ref}    -> image/png
//   POST /v1/ops/{op}        body: Request JSON       -> Response JSON
// Failures answer with {"error": {"code", "message", "detail"}}.

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(std::string base_url, std::chrono::milliseconds timeout = std::chrono::seconds(60));

  std::string put_image(const Image& image) override;
  Image get_image(const std::string& ref) override;
  Response call(const Request& request) override;

 private:
  std::string base_url_;
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  std::set<std::string> uploaded_;
};

/// Serves any Backend over the wire protocol above.
class BackendServer {
 public:
  explicit BackendServer(std::shared_ptr<Backend> backend);
  ~BackendServer();
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  /// Binds (port 0 picks a free port), serves on a background thread and
  /// returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  std::shared_ptr<Backend> backend_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace vistep::backend
