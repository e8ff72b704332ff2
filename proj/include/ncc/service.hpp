#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncc/task.hpp"

namespace ncc {

struct CatalogEntry {
  std::string id;
  std::string task;
  std::string description;
  /// Model directory (config.json, model.ckpt, vocabularies).
  std::filesystem::path checkpoint;
};

/// Models offered by the server, loaded once at start-up and immutable
/// afterwards.
class ModelCatalog {
 public:
  /// models.json: [{id, task, description, checkpoint}], checkpoint paths
  /// relative to the file. Every model is loaded here; failures throw.
  static ModelCatalog load(const std::filesystem::path& models_json);

  /// Throws DuplicateName for a repeated id and BadConfig when the
  /// predictor's task differs from entry.task.
  void add(CatalogEntry entry, std::shared_ptr<const Predictor> predictor);

  const Predictor* find(std::string_view id) const;
  const std::vector<CatalogEntry>& entries() const noexcept { return entries_; }
  std::vector<std::string> ids() const;

 private:
  std::vector<CatalogEntry> entries_;
  std::vector<std::shared_ptr<const Predictor>> predictors_;
};

// Response bodies. The CLI's --json output and the HTTP API both use these,
// so the two fronts print the same document for the same request.
nlohmann::json completion_json(const std::vector<Candidate>& candidates);
nlohmann::json summary_json(const Summary& summary);
nlohmann::json search_json(const std::vector<SearchHit>& hits);
nlohmann::json catalog_json(const ModelCatalog& catalog);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// Routes one API request without any socket involved:
///   GET  /api/models
///   POST /api/complete   {model_id, tokens | text, k}
///   POST /api/summarize  {model_id, code}
///   POST /api/search     {model_id, query, k}
/// 404 for an unknown route or model id (with known_models), 400 for a
/// malformed body, bad k or a model of the wrong task, 422 for an empty
/// payload.
ApiResponse handle_api(const ModelCatalog& catalog, std::string_view method, std::string_view path,
                       std::string_view body);

struct ServeOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  int port = 8080;
  /// Static files served under "/" when non-empty.
  std::filesystem::path ui_dir;
  std::string cors_origin = "*";
};

/// HTTP front of handle_api (JSON bodies, CORS headers and preflight).
class HttpServer {
 public:
  HttpServer(const ModelCatalog& catalog, ServeOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and returns the port actually bound. Throws IoError.
  int bind();
  /// Blocks serving requests until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ncc
