#include "studio_http.hpp"

#include <httplib.h>
#include <json.hpp>

namespace hdsa_http {

using nlohmann::json;

struct StudioServer::SessionHandle {
  hdsa_session* session = nullptr;
  ~SessionHandle() { hdsa_session_destroy(session); }
};

int http_status_for(hdsa_status s) {
  switch (s) {
    case HDSA_OK: return 200;
    case HDSA_ERR_NOT_FOUND: return 404;
    case HDSA_ERR_NO_DATA: return 409;
    case HDSA_ERR_VALIDATION: return 422;
    case HDSA_ERR_INVALID_CONFIG:
    case HDSA_ERR_INVALID_INPUT:
    case HDSA_ERR_SHAPE:
    case HDSA_ERR_UNSUPPORTED_VIEW:
    case HDSA_ERR_NULL_ARGUMENT: return 400;
    default: return 500;
  }
}

namespace {

void send_error(httplib::Response& res, int http, const std::string& code, const std::string& message) {
  res.status = http;
  res.set_content(json{{"error", code}, {"message", message}}.dump(), "application/json");
}

// Forwards a C call that produces a JSON string into the response.
template <class F>
void reply(httplib::Response& res, F&& call) {
  char* out = nullptr;
  hdsa_status s = call(&out);
  if (s != HDSA_OK) {
    send_error(res, http_status_for(s), hdsa_status_name(s), hdsa_last_error());
    return;
  }
  res.status = 200;
  res.set_content(out ? out : "null", "application/json");
  hdsa_string_free(out);
}

long long parse_int(const std::string& text, const char* what) {
  size_t pos = 0;
  long long v = std::stoll(text, &pos);
  if (pos != text.size()) throw std::invalid_argument(what);
  return v;
}

}  // namespace

StudioServer::StudioServer() : server_(std::make_unique<httplib::Server>()) { register_routes(); }

StudioServer::~StudioServer() { stop(); }

int StudioServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool StudioServer::listen() { return server_->listen_after_bind(); }

void StudioServer::stop() {
  if (server_) server_->stop();
}

std::shared_ptr<StudioServer::SessionHandle> StudioServer::find(const std::string& id) {
  std::lock_guard<std::mutex> lock(registry_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void StudioServer::register_routes() {
  auto& srv = *server_;
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "unexpected failure";
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
    }
    send_error(res, 400, "invalid-input", msg);
  });

  srv.Post("/session", [this](const httplib::Request& req, httplib::Response& res) {
    std::string id = "s" + std::to_string(next_id_++);
    auto handle = std::make_shared<SessionHandle>();
    hdsa_status s = hdsa_session_create(id.c_str(), req.body.c_str(), nullptr, &handle->session);
    if (s != HDSA_OK) {
      send_error(res, http_status_for(s), hdsa_status_name(s), hdsa_last_error());
      return;
    }
    {
      std::lock_guard<std::mutex> lock(registry_mutex_);
      sessions_[id] = handle;
    }
    res.status = 201;
    res.set_content(json{{"id", id}}.dump(), "application/json");
  });

  // Resolves the session id of a /session/{id}/... route or answers 404.
  auto with_session = [this](const httplib::Request& req, httplib::Response& res) -> std::shared_ptr<SessionHandle> {
    auto h = find(req.matches[1]);
    if (!h) send_error(res, 404, "not-found", "no session '" + std::string(req.matches[1]) + "'");
    return h;
  };

  srv.Get(R"(/session/([^/]+)/hyperparams)", [with_session](const httplib::Request& req, httplib::Response& res) {
    if (auto h = with_session(req, res))
      reply(res, [&](char** out) { return hdsa_session_get_hyperparams(h->session, out); });
  });

  srv.Patch(R"(/session/([^/]+)/hyperparams)", [with_session](const httplib::Request& req, httplib::Response& res) {
    if (auto h = with_session(req, res))
      reply(res, [&](char** out) {
        return hdsa_session_patch_hyperparams(h->session, req.body.empty() ? "{}" : req.body.c_str(), out);
      });
  });

  srv.Post(R"(/session/([^/]+)/samples)", [with_session](const httplib::Request& req, httplib::Response& res) {
    auto h = with_session(req, res);
    if (!h) return;
    json body = req.body.empty() ? json::object() : json::parse(req.body);
    int q = body.value("q", 200);
    long long seed = body.contains("seed") && !body["seed"].is_null() ? body["seed"].get<long long>() : -1;
    reply(res, [&](char** out) { return hdsa_session_generate_samples(h->session, q, seed, out); });
  });

  srv.Get(R"(/session/([^/]+)/overview)", [with_session](const httplib::Request& req, httplib::Response& res) {
    auto h = with_session(req, res);
    if (!h) return;
    std::string view = req.has_param("view") ? req.get_param_value("view") : "control";
    reply(res, [&](char** out) { return hdsa_session_overview(h->session, view.c_str(), out); });
  });

  srv.Get(R"(/session/([^/]+)/sample/([^/]+)/([^/]+))", [with_session](const httplib::Request& req, httplib::Response& res) {
    auto h = with_session(req, res);
    if (!h) return;
    long long i, k;
    try {
      i = parse_int(req.matches[2], "i");
      k = parse_int(req.matches[3], "k");
    } catch (const std::exception&) {
      send_error(res, 404, "not-found", "record indices must be integers");
      return;
    }
    reply(res, [&](char** out) { return hdsa_session_inspect(h->session, i, k, out); });
  });

  srv.Get(R"(/session/([^/]+)/timeseries)", [with_session](const httplib::Request& req, httplib::Response& res) {
    if (auto h = with_session(req, res))
      reply(res, [&](char** out) { return hdsa_session_timeseries(h->session, out); });
  });

  srv.Get(R"(/session/([^/]+)/posterior)", [with_session](const httplib::Request& req, httplib::Response& res) {
    auto h = with_session(req, res);
    if (!h) return;
    int n = req.has_param("n") ? static_cast<int>(parse_int(req.get_param_value("n"), "n")) : 100;
    unsigned long long seed = req.has_param("seed") ? parse_int(req.get_param_value("seed"), "seed") : 0;
    reply(res, [&](char** out) { return hdsa_session_posterior(h->session, n, seed, out); });
  });

  srv.Get(R"(/session/([^/]+)/export)", [with_session](const httplib::Request& req, httplib::Response& res) {
    if (auto h = with_session(req, res)) reply(res, [&](char** out) { return hdsa_session_export(h->session, out); });
  });
}

}  // namespace hdsa_http
