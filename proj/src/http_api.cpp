#include "biae/http_api.hpp"

#include <httplib.h>

#include "biae/errors.hpp"

namespace biae {

int http_status_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 400;
  if (dynamic_cast<const NotFoundError*>(&e)) return 404;
  if (dynamic_cast<const ConflictError*>(&e)) return 409;
  if (dynamic_cast<const ServiceError*>(&e)) return 503;
  return 500;
}

namespace {

const char* error_code(int status) {
  switch (status) {
    case 400: return "validation";
    case 404: return "not_found";
    case 405: return "method_not_allowed";
    case 409: return "conflict";
    case 503: return "service_unavailable";
    default: return "internal";
  }
}

HttpResponse error_response(int status, const std::string& message) {
  return {status, {{"error", {{"code", error_code(status)}, {"message", message}}}}};
}

nlohmann::json parse_body(const std::string& body) {
  try {
    auto j = nlohmann::json::parse(body.empty() ? "{}" : body);
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON body: ") + e.what());
  }
}

std::string required_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::string optional_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path.substr(0, path.find('?'))) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

}  // namespace

HttpResponse handle_request(SessionStore& store, const std::string& method, const std::string& path,
                            const std::string& body) {
  try {
    auto parts = split_path(path);
    if (parts.size() == 1 && parts[0] == "healthz") {
      if (method != "GET") return error_response(405, "use GET");
      return {200, {{"status", "ok"}}};
    }
    if (parts.empty() || parts[0] != "sessions" || parts.size() > 3 || (parts.size() == 3 && parts[2] != "answer"))
      return error_response(404, "no route for " + path);
    if (parts.size() == 1) {
      if (method != "POST") return error_response(405, "use POST");
      auto j = parse_body(body);
      auto state = store.create_session(required_string(j, "document"), required_string(j, "question"),
                                        optional_string(j, "scenario"));
      return {201, session_to_json(state)};
    }
    if (parts.size() == 2) {
      if (method != "GET") return error_response(405, "use GET");
      return {200, session_to_json(store.get(parts[1]))};
    }
    if (method != "POST") return error_response(405, "use POST");
    auto j = parse_body(body);
    const std::string raw = required_string(j, "answer");
    Answer answer;
    if (raw == "YES") answer = Answer::Yes;
    else if (raw == "NO") answer = Answer::No;
    else throw ValidationError("answer must be \"YES\" or \"NO\"");
    std::optional<std::string> expected;
    if (j.contains("question") && !j["question"].is_null()) expected = required_string(j, "question");
    return {200, session_to_json(store.answer_followup(parts[1], answer, expected))};
  } catch (const std::exception& e) {
    return error_response(http_status_for(e), e.what());
  }
}

struct HttpServer::Impl {
  std::shared_ptr<SessionStore> store;
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(std::shared_ptr<SessionStore> store) : impl_(std::make_unique<Impl>()) {
  impl_->store = std::move(store);
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    auto out = handle_request(*impl_->store, req.method, req.path, req.body);
    res.status = out.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(out.body.dump(), "application/json");
  };
  auto& s = impl_->server;
  s.Get(".*", route);
  s.Post(".*", route);
  s.Put(".*", route);
  s.Delete(".*", route);
  s.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ServiceError("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void HttpServer::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw ServiceError("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace biae
