#include "ncc/service.hpp"

#include <fstream>

#include <httplib.h>

#include "ncc/error.hpp"

namespace ncc {

namespace fs = std::filesystem;
using nlohmann::json;

ModelCatalog ModelCatalog::load(const fs::path& models_json) {
  std::ifstream in(models_json);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + models_json.string());
  const json doc = json::parse(in, nullptr, false);
  const json* list = &doc;
  if (doc.is_object() && doc.contains("models")) list = &doc["models"];
  if (!list->is_array()) throw Error(ErrorCode::BadConfig, models_json.string() + " must hold a list of models");
  const fs::path base = fs::absolute(models_json).parent_path();

  ModelCatalog catalog;
  for (const auto& item : *list) {
    if (!item.is_object() || !item.contains("id") || !item.contains("checkpoint")) {
      throw Error(ErrorCode::BadConfig, "catalog entries need 'id' and 'checkpoint'");
    }
    CatalogEntry e{item.at("id").get<std::string>(), item.value("task", std::string()),
                   item.value("description", std::string()), item.at("checkpoint").get<std::string>()};
    if (e.checkpoint.is_relative()) e.checkpoint = base / e.checkpoint;
    std::shared_ptr<const Predictor> p = load_predictor(e.checkpoint);
    if (e.task.empty()) e.task = std::string(p->task());
    catalog.add(std::move(e), std::move(p));
  }
  return catalog;
}

void ModelCatalog::add(CatalogEntry entry, std::shared_ptr<const Predictor> predictor) {
  if (find(entry.id)) throw Error(ErrorCode::DuplicateName, "model id '" + entry.id + "' listed twice");
  if (entry.task != predictor->task()) {
    throw Error(ErrorCode::BadConfig, "model '" + entry.id + "' is a " + std::string(predictor->task()) +
                                          " model, catalog says " + entry.task);
  }
  entries_.push_back(std::move(entry));
  predictors_.push_back(std::move(predictor));
}

const Predictor* ModelCatalog::find(std::string_view id) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id == id) return predictors_[i].get();
  }
  return nullptr;
}

std::vector<std::string> ModelCatalog::ids() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.id);
  return out;
}

// ---------------------------------------------------------------------------

json completion_json(const std::vector<Candidate>& candidates) {
  json list = json::array();
  for (const auto& c : candidates) list.push_back({{"token", c.token}, {"prob", c.prob}});
  return {{"candidates", std::move(list)}};
}

json summary_json(const Summary& s) { return {{"summary", s.summary}, {"tokens", s.tokens}}; }

json search_json(const std::vector<SearchHit>& hits) {
  json list = json::array();
  for (const auto& h : hits) list.push_back({{"id", h.id}, {"score", h.score}, {"path", h.path}, {"code", h.code}});
  return {{"results", std::move(list)}};
}

json catalog_json(const ModelCatalog& catalog) {
  json list = json::array();
  for (const auto& e : catalog.entries()) {
    list.push_back({{"id", e.id}, {"task", e.task}, {"description", e.description}});
  }
  return {{"models", std::move(list)}};
}

// ---------------------------------------------------------------------------

namespace {

struct HttpError {
  int status;
  std::string message;
};

ApiResponse error_response(int status, const std::string& message) { return {status, {{"error", message}}}; }

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return 422;
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnsupportedOperation:
    case ErrorCode::DedentMismatch:
    case ErrorCode::UnterminatedString:
    case ErrorCode::ColonWithoutBlock:
    case ErrorCode::UnexpectedIndent: return 400;
    default: return 500;
  }
}

std::string require_string(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    throw HttpError{400, std::string("field '") + key + "' must be a string"};
  }
  return it->get<std::string>();
}

std::size_t read_k(const json& body) {
  auto it = body.find("k");
  if (it == body.end() || it->is_null()) return 5;
  if (!it->is_number_integer()) throw HttpError{400, "field 'k' must be an integer"};
  const auto k = it->get<std::int64_t>();
  if (k < 1) throw HttpError{400, "field 'k' must be at least 1"};
  return static_cast<std::size_t>(k);
}

bool blank(std::string_view s) { return space_tokenize(s).empty(); }

json run(const Predictor& p, std::string_view route, const json& body) {
  if (route == "complete") {
    const std::size_t k = read_k(body);
    if (auto it = body.find("tokens"); it != body.end() && !it->is_null()) {
      if (!it->is_array()) throw HttpError{400, "field 'tokens' must be a list of strings"};
      std::vector<std::string> tokens;
      for (const auto& t : *it) {
        if (!t.is_string()) throw HttpError{400, "field 'tokens' must be a list of strings"};
        tokens.push_back(t.get<std::string>());
      }
      if (tokens.empty()) throw HttpError{422, "empty token list"};
      return completion_json(p.complete(tokens, k));
    }
    if (auto it = body.find("text"); it != body.end() && !it->is_null()) {
      const std::string text = require_string(body, "text");
      if (blank(text)) throw HttpError{422, "empty text"};
      return completion_json(p.complete_text(text, k));
    }
    throw HttpError{400, "request needs 'tokens' or 'text'"};
  }
  if (route == "summarize") {
    const std::string code = require_string(body, "code");
    if (blank(code)) throw HttpError{422, "empty code"};
    return summary_json(p.summarize(code));
  }
  const std::size_t k = read_k(body);
  const std::string query = require_string(body, "query");
  if (blank(query)) throw HttpError{422, "empty query"};
  return search_json(p.search(query, k));
}

}  // namespace

ApiResponse handle_api(const ModelCatalog& catalog, std::string_view method, std::string_view path,
                       std::string_view body_text) {
  if (path == "/api/models") {
    if (method != "GET") return error_response(405, "use GET");
    return {200, catalog_json(catalog)};
  }
  constexpr std::string_view prefix = "/api/";
  const std::string_view route = path.starts_with(prefix) ? path.substr(prefix.size()) : std::string_view();
  if (route != "complete" && route != "summarize" && route != "search") {
    return error_response(404, "no such endpoint: " + std::string(path));
  }
  if (method != "POST") return error_response(405, "use POST");

  const json body = json::parse(body_text, nullptr, false);
  if (body.is_discarded() || !body.is_object()) return error_response(400, "body must be a JSON object");
  try {
    const std::string id = require_string(body, "model_id");
    const Predictor* p = catalog.find(id);
    if (!p) return {404, {{"error", "unknown model '" + id + "'"}, {"known_models", catalog.ids()}}};
    return {200, run(*p, route, body)};
  } catch (const HttpError& e) {
    return error_response(e.status, e.message);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  Impl(const ModelCatalog& c, ServeOptions o) : catalog(c), options(std::move(o)) {}

  const ModelCatalog& catalog;
  ServeOptions options;
  httplib::Server server;
  int port = -1;
};

HttpServer::HttpServer(const ModelCatalog& catalog, ServeOptions options)
    : impl_(std::make_unique<Impl>(catalog, std::move(options))) {
  auto& srv = impl_->server;
  const std::string origin = impl_->options.cors_origin;
  srv.set_default_headers({{"Access-Control-Allow-Origin", origin},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = handle_api(impl_->catalog, req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json; charset=utf-8");
  };
  srv.Get(R"(/api/.*)", dispatch);
  srv.Post(R"(/api/.*)", dispatch);
  if (!impl_->options.ui_dir.empty() && !srv.set_mount_point("/", impl_->options.ui_dir.string())) {
    throw Error(ErrorCode::IoError, "cannot serve UI from " + impl_->options.ui_dir.string());
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& o = impl_->options;
  if (o.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(o.host);
  } else {
    impl_->port = impl_->server.bind_to_port(o.host, o.port) ? o.port : -1;
  }
  if (impl_->port < 0) throw Error(ErrorCode::IoError, "cannot bind " + o.host + ":" + std::to_string(o.port));
  return impl_->port;
}

void HttpServer::run() {
  if (impl_->port < 0) bind();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace ncc
