#pragma once

#include <exception>
#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "biae/dialogue.hpp"

namespace biae {

struct HttpResponse {
  int status = 200;
  nlohmann::json body;
};

// 400 validation, 404 not found, 409 conflict, 503 service, 500 otherwise.
int http_status_for(const std::exception& e);

// Routes:
//   POST /sessions               {document, question, scenario?}
//   POST /sessions/{id}/answer   {answer: "YES"|"NO", question?}
//   GET  /sessions/{id}
//   GET  /healthz
HttpResponse handle_request(SessionStore& store, const std::string& method, const std::string& path,
                            const std::string& body);

// Blocking-free wrapper over an httplib server running on its own thread.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<SessionStore> store);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 binds any free port. Returns the bound port.
  int start(const std::string& host, int port);
  void stop();
  // Serves on the calling thread until stopped.
  void run(const std::string& host, int port);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace biae
