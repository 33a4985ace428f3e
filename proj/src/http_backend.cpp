#include "vistep/http_backend.hpp"

#include <httplib.h>

#include "vistep/codec.hpp"
#include "vistep/error.hpp"

namespace vistep::backend {

namespace {

std::unique_ptr<httplib::Client> make_client(const std::string& base_url, std::chrono::milliseconds timeout) {
  auto client = std::make_unique<httplib::Client>(base_url);
  client->set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(), 0);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  return client;
}

[[noreturn]] void transport_failure(const std::string& what, const httplib::Result& res) {
  throw Error(ErrorCode::BackendError, what + ": " + httplib::to_string(res.error()),
              {{"transport", httplib::to_string(res.error())}});
}

[[noreturn]] void remote_failure(const httplib::Response& res) {
  nlohmann::json body = nlohmann::json::parse(res.body, nullptr, false);
  ErrorCode code = ErrorCode::BackendError;
  std::string message = "backend answered HTTP " + std::to_string(res.status);
  nlohmann::json detail = {{"status", res.status}};
  if (body.is_object() && body.contains("error")) {
    const auto& e = body.at("error");
    const auto name = e.value("code", "");
    if (name == "FixtureMiss") code = ErrorCode::FixtureMiss;
    if (name == "NotFound") code = ErrorCode::NotFound;
    message = e.value("message", message);
    if (e.contains("detail") && e.at("detail").is_object()) detail.update(e.at("detail"));
  }
  throw Error(code, message, detail);
}

void send_error(httplib::Response& res, int status, const Error& e) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", e.to_json()}}.dump(), "application/json");
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::FixtureMiss: return 404;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidDocument: return 400;
    case ErrorCode::InvalidImage: return 415;
    default: return 500;
  }
}

}  // namespace

HttpBackend::HttpBackend(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::string HttpBackend::put_image(const Image& image) {
  {
    std::lock_guard lock(mu_);
    if (uploaded_.contains(image.id())) return image.id();
  }
  const auto png = codec::encode_png(image);
  auto client = make_client(base_url_, timeout_);
  auto res = client->Post("/v1/images", reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
  if (!res) transport_failure("image upload failed", res);
  if (res->status != 200) remote_failure(*res);
  auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (!body.is_object() || !body.contains("image_ref")) {
    throw Error(ErrorCode::BackendError, "image upload answered without image_ref");
  }
  auto ref = body.at("image_ref").get<std::string>();
  std::lock_guard lock(mu_);
  uploaded_.insert(ref);
  return ref;
}

Image HttpBackend::get_image(const std::string& ref) {
  auto client = make_client(base_url_, timeout_);
  auto res = client->Get("/v1/images/" + ref);
  if (!res) transport_failure("image download failed", res);
  if (res->status != 200) remote_failure(*res);
  const auto* p = reinterpret_cast<const std::uint8_t*>(res->body.data());
  return codec::decode_image({p, res->body.size()});
}

Response HttpBackend::call(const Request& request) {
  request.check();
  auto client = make_client(base_url_, timeout_);
  auto res = client->Post("/v1/ops/" + std::string(to_string(request.op)), request.to_json().dump(), "application/json");
  if (!res) transport_failure("backend call failed", res);
  if (res->status != 200) remote_failure(*res);
  auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw Error(ErrorCode::BackendError, "backend answered with malformed JSON");
  Response out;
  try {
    out = Response::from_json(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BackendError, std::string("backend response has the wrong shape: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::BackendError, std::string("backend response has the wrong shape: ") + e.what());
  }
  out.check_against(request);
  return out;
}

BackendServer::BackendServer(std::shared_ptr<Backend> backend)
    : backend_(std::move(backend)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

BackendServer::~BackendServer() { stop(); }

void BackendServer::install_routes() {
  server_->Post("/v1/images", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto* p = reinterpret_cast<const std::uint8_t*>(req.body.data());
      const Image img = codec::decode_image({p, req.body.size()});
      res.set_content(nlohmann::json{{"image_ref", backend_->put_image(img)}}.dump(), "application/json");
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), e);
    }
  });
  server_->Get(R"(/v1/images/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto png = codec::encode_png(backend_->get_image(req.matches[1]));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), e);
    }
  });
  server_->Post(R"(/v1/ops/([a-z_]+))", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      auto body = nlohmann::json::parse(req.body, nullptr, false);
      if (!body.is_object()) throw Error(ErrorCode::InvalidDocument, "request body must be a JSON object");
      body["op"] = req.matches[1].str();
      Request request;
      try {
        request = Request::from_json(body);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidDocument, std::string("malformed request: ") + e.what());
      }
      res.set_content(backend_->call(request).to_json().dump(), "application/json");
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), e);
    }
  });
}

int BackendServer::start(const std::string& host, int port) {
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

void BackendServer::listen(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
}

void BackendServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace vistep::backend
