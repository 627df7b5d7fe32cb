#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "biae/errors.hpp"
#include "biae/http_api.hpp"
#include "dialogue_fixtures.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include <httplib.h>

using namespace biae;
using namespace testing;
using nlohmann::json;

namespace {

std::shared_ptr<SessionStore> store_with(Checkpoint c, std::vector<std::string> qs = distinct_questions(10)) {
  return std::make_shared<SessionStore>(fixture_model(std::move(c), std::make_shared<ScriptedGenerator>(std::move(qs))));
}

std::string create_body(const std::string& scenario = "") {
  return json{{"document", kFixtureDocument}, {"question", kFixtureQuestion}, {"scenario", scenario}}.dump();
}

}  // namespace

TEST_CASE("status mapping") {
  CHECK(http_status_for(ValidationError("x")) == 400);
  CHECK(http_status_for(SchemaError("id", "field", "x")) == 400);
  CHECK(http_status_for(NotFoundError("x")) == 404);
  CHECK(http_status_for(ConflictError("x")) == 409);
  CHECK(http_status_for(ServiceError("x")) == 503);
  CHECK(http_status_for(GenerationError("x")) == 503);
  CHECK(http_status_for(InternalError("x")) == 500);
}

TEST_CASE("health check") {
  auto store = store_with(biased_checkpoint(0, 0, 0, 5));
  auto r = handle_request(*store, "GET", "/healthz", "");
  CHECK(r.status == 200);
  CHECK(r.body == json{{"status", "ok"}});
  CHECK(handle_request(*store, "POST", "/healthz", "").status == 405);
}

TEST_CASE("create, answer and read a session") {
  auto store = store_with(biased_checkpoint(0, 0, 0, 5));
  auto created = handle_request(*store, "POST", "/sessions", create_body());
  REQUIRE(created.status == 201);
  CHECK(created.body["status"] == "AWAITING_ANSWER");
  CHECK(created.body["decision"].is_null());
  CHECK(created.body["pending_question"] == "Is condition 0 met?");
  CHECK(created.body["attention"].size() == 3);
  CHECK(created.body["alignment"].is_array());
  const std::string id = created.body["session_id"];

  auto answered = handle_request(*store, "POST", "/sessions/" + id + "/answer", R"({"answer":"YES"})");
  CHECK(answered.status == 200);
  CHECK(answered.body["history"].size() == 1);
  CHECK(answered.body["history"][0]["follow_up_answer"] == "Yes");
  CHECK(answered.body["alignment"].size() == 3);
  CHECK(answered.body["alignment"][0].size() == 1);

  auto read = handle_request(*store, "GET", "/sessions/" + id, "");
  CHECK(read.status == 200);
  CHECK(read.body == answered.body);
}

TEST_CASE("terminal session and conflicts") {
  auto store = store_with(biased_checkpoint(0, 3, 0, 0));
  auto created = handle_request(*store, "POST", "/sessions", create_body());
  CHECK(created.body["status"] == "CLOSED");
  CHECK(created.body["decision"] == "YES");
  CHECK(created.body["pending_question"].is_null());
  const std::string id = created.body["session_id"];
  auto again = handle_request(*store, "POST", "/sessions/" + id + "/answer", R"({"answer":"NO"})");
  CHECK(again.status == 409);
  CHECK(again.body["error"]["code"] == "conflict");
}

TEST_CASE("validation and routing errors") {
  auto store = store_with(biased_checkpoint(0, 0, 0, 5));
  CHECK(handle_request(*store, "POST", "/sessions", "not json").status == 400);
  CHECK(handle_request(*store, "POST", "/sessions", R"({"question":"Q?"})").status == 400);
  CHECK(handle_request(*store, "POST", "/sessions", R"({"document":"","question":"Q?"})").status == 400);
  CHECK(handle_request(*store, "POST", "/sessions", R"([1,2])").status == 400);
  CHECK(handle_request(*store, "GET", "/sessions/unknown", "").status == 404);
  CHECK(handle_request(*store, "POST", "/sessions/unknown/answer", R"({"answer":"YES"})").status == 404);
  CHECK(handle_request(*store, "GET", "/nothing", "").status == 404);
  CHECK(handle_request(*store, "DELETE", "/sessions", "").status == 405);
  auto created = handle_request(*store, "POST", "/sessions", create_body());
  const std::string id = created.body["session_id"];
  CHECK(handle_request(*store, "POST", "/sessions/" + id + "/answer", R"({"answer":"maybe"})").status == 400);
  CHECK(handle_request(*store, "POST", "/sessions/" + id + "/answer", R"({"answer":"yes"})").status == 400);
  CHECK(handle_request(*store, "POST", "/sessions/" + id + "/answer", R"({"answer":"YES","question":"Stale?"})")
            .status == 409);
}

TEST_CASE("generator failure maps to 503") {
  class Broken final : public Generator {
   public:
    std::string name() const override { return "broken"; }
    std::string propose(std::string_view, const std::vector<std::string>&) const override {
      throw std::runtime_error("model offline");
    }
  };
  SessionStore store(fixture_model(biased_checkpoint(0, 0, 0, 5), std::make_shared<Broken>()));
  auto r = handle_request(store, "POST", "/sessions", create_body());
  CHECK(r.status == 503);
  CHECK(r.body["error"]["message"].get<std::string>().find("model offline") != std::string::npos);
}

TEST_CASE("served over a socket") {
  HttpServer server(store_with(flip_on_answer_checkpoint()));
  int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto created = client.Post("/sessions", create_body(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
  auto body = json::parse(created->body);
  CHECK(body["status"] == "AWAITING_ANSWER");
  const std::string id = body["session_id"];

  auto answered = client.Post("/sessions/" + id + "/answer", R"({"answer":"YES"})", "application/json");
  REQUIRE(answered);
  CHECK(json::parse(answered->body)["decision"] == "YES");
  auto closed = client.Post("/sessions/" + id + "/answer", R"({"answer":"YES"})", "application/json");
  REQUIRE(closed);
  CHECK(closed->status == 409);
  auto missing = client.Get("/sessions/nope");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  server.stop();
}
