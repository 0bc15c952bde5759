#pragma once

// HTTP JSON API over the library, plus the design-session store.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "loomata/io.hpp"

namespace httplib {
class Server;
}

namespace loomata {

struct DesignSession {
  std::string id;
  PatternDocument document;
  std::int64_t revision = 1;
  std::int64_t created_ms = 0;  // metadata only
  std::int64_t updated_ms = 0;
};

Json to_json(const DesignSession& session);

/// In-memory session store with optional JSON snapshots (one file per
/// session). Mutations of one session serialize; distinct sessions never
/// share a lock beyond the map lookup.
class SessionStore {
 public:
  explicit SessionStore(std::optional<std::filesystem::path> state_dir = std::nullopt);

  DesignSession create(PatternDocument document);
  std::optional<DesignSession> get(const std::string& id) const;

  /// Replaces the document with edit(current). When `expected_revision` is
  /// set and stale, throws Error(Conflict). Throws Error(NotFound) for an
  /// unknown id. The revision increases by one on success.
  DesignSession update(const std::string& id, std::optional<std::int64_t> expected_revision,
                       const std::function<PatternDocument(const PatternDocument&)>& edit);

  std::size_t size() const;

 private:
  struct Entry {
    explicit Entry(DesignSession s) : session(std::move(s)) {}
    std::mutex mutex;
    DesignSession session;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  void snapshot(const DesignSession& session) const;
  void load_snapshots();

  std::optional<std::filesystem::path> state_dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> state_dir;
  std::string cors_origin = "*";
  std::size_t max_upload_bytes = 4u << 20;
  int max_image_dimension = 4096;
  int loom_capacity = kDefaultLoomCapacity;
  int sweep_threads = 1;
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
  std::map<std::string, std::string> parts;    // multipart fields and files
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;

  Json json() const { return Json::parse(body); }
};

class DesignService {
 public:
  explicit DesignService(ServiceOptions options = {});

  /// Routes one request. Never throws; errors become JSON error responses.
  HttpResponse handle(const HttpRequest& request);

  /// Registers every route on `server` (all delegate to handle()).
  void bind(httplib::Server& server);

  /// Blocks serving on options.host:options.port.
  bool listen();

  SessionStore& store() { return store_; }
  const ServiceOptions& options() const { return options_; }

 private:
  HttpResponse route(const HttpRequest& request);
  HttpResponse elementary_table(const HttpRequest& request);
  HttpResponse create_pattern(const HttpRequest& request);
  HttpResponse get_pattern(const std::string& id);
  HttpResponse put_pattern(const std::string& id, const HttpRequest& request);
  HttpResponse create_raster(const HttpRequest& request);
  HttpResponse render_png(const std::string& id, const HttpRequest& request);
  HttpResponse draft_wif(const std::string& id, const HttpRequest& request);
  HttpResponse pattern_metrics(const std::string& id, const HttpRequest& request);

  DesignSession require_session(const std::string& id) const;

  ServiceOptions options_;
  SessionStore store_;
};

/// Parameters shared by the CLI `sweep` subcommand and the rule-space endpoint.
struct SweepRequest {
  int width = 101;
  int steps = 50;
  std::uint64_t seed = 1;
  double h_max = 4.0;
  int max_float = 5;
  int block_length = 3;
};

std::vector<RuleMetrics> run_sweep(const SweepRequest& request, int threads = 1);

}  // namespace loomata
