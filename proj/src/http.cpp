#include "dgscreen/http.hpp"

#include <httplib.h>

#include "dgscreen/service.hpp"

namespace dgscreen {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, const std::string& message,
           const std::vector<std::string>& violations = {}) {
  json body = {{"error", message}};
  if (!violations.empty()) body["violations"] = violations;
  reply(res, status, body);
}

// Maps pipeline exceptions onto status codes.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const SchemaError& e) {
    error(res, 422, "schema violation", e.violations());
  } catch (const DeserializationError& e) {
    error(res, 422, e.what());
  } catch (const Conflict& e) {
    error(res, 409, e.what());
  } catch (const NotFound& e) {
    error(res, 404, e.what());
  } catch (const NotReady& e) {
    error(res, 503, e.what());
  } catch (const Error& e) {
    error(res, 422, e.what());
  } catch (const std::exception& e) {
    error(res, 500, e.what());
  }
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw SchemaError({std::string("malformed JSON: ") + e.what()});
  }
}

}  // namespace

void register_routes(httplib::Server& server, ScreeningService& service) {
  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const IngestResult r = service.ingest(parse_body(req));
      reply(res, r.created ? 201 : 200, {{"session_id", r.session_id}});
    });
  });

  server.Post(R"(/sessions/([^/]+)/screen)",
              [&service](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] { reply(res, 200, to_json(service.screen(req.matches[1]))); });
              });

  server.Get(R"(/sessions/([^/]+)/result)",
             [&service](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 auto r = service.result(req.matches[1]);
                 if (!r) throw NotFound("no result for session " + std::string(req.matches[1]));
                 reply(res, 200, to_json(*r));
               });
             });

  server.Put("/admin/model", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, {{"model_version", service.load_model(parse_body(req))}}); });
  });

  server.Put("/admin/calibration", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      service.load_calibration(parse_body(req));
      reply(res, 200, {{"status", "loaded"}});
    });
  });

  server.Get("/health", [&service](const httplib::Request&, httplib::Response& res) {
    const HealthStatus h = service.health();
    reply(res, h.ready ? 200 : 503, to_json(h));
  });
}

}  // namespace dgscreen
