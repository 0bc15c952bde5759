#include "loomata/service.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "loomata/error.hpp"

namespace loomata {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string new_session_id() {
  static std::mutex mutex;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mutex);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(gen()),
                static_cast<unsigned long long>(gen()));
  return buf;
}

HttpResponse json_response(int status, const Json& body) {
  HttpResponse r;
  r.status = status;
  r.body = body.dump();
  return r;
}

HttpResponse error_response(int status, const std::string& kind, const std::string& message,
                            Json extra = Json::object()) {
  Json err;
  err["kind"] = kind;
  err["message"] = message;
  for (auto& [k, v] : extra.items()) err[k] = v;
  Json body;
  body["error"] = std::move(err);
  return json_response(status, body);
}

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict:
    case ErrorKind::Capacity: return 409;
    case ErrorKind::Io: return 500;
    default: return 400;
  }
}

template <typename T>
T query_number(const HttpRequest& req, const std::string& key, T fallback, T lo, T hi) {
  auto it = req.query.find(key);
  if (it == req.query.end() || it->second.empty()) return fallback;
  T value{};
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ValidationError("?" + key, "expected a number, got '" + s + "'");
  if (value < lo || value > hi) throw ValidationError("?" + key, "out of range");
  return value;
}

Json parse_body(const std::string& body) {
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.byte, "malformed JSON body");
  }
}

RuleSpec rule_from_body(const Json& j) {
  if (j.is_number_integer()) {
    const auto n = j.get<long long>();
    if (n < 0 || n > 255) throw ValidationError("/rule", "Wolfram number must be in 0..255");
    return rule_from_wolfram_number(static_cast<int>(n));
  }
  return rule_from_json(j, "/rule");
}

PatternDocument evolve_document(const RuleSpec& rule, const EvolutionConfig& config,
                                std::optional<Colorway> colorway) {
  try {
    validate(config, rule);
  } catch (const ValidationError& e) {
    throw ValidationError("/config/" + e.path(), e.message());
  } catch (const DomainError& e) {
    throw ValidationError("/config", e.what());
  }
  PatternDocument doc = make_document(rule, config, evolve(rule, config));
  doc.colorway = std::move(colorway);
  if (doc.colorway) {
    try {
      document_drawdown(doc);
    } catch (const ValidationError& e) {
      throw ValidationError("/colorway/" + e.path(), e.message());
    }
  }
  return doc;
}

Json session_envelope(const DesignSession& s) {
  Json j;
  j["session"] = s.id;
  j["revision"] = s.revision;
  j["document"] = to_json(s.document);
  return j;
}

}  // namespace

Json to_json(const DesignSession& session) {
  Json j;
  j["id"] = session.id;
  j["revision"] = session.revision;
  j["created_ms"] = session.created_ms;
  j["updated_ms"] = session.updated_ms;
  j["document"] = to_json(session.document);
  return j;
}

std::vector<RuleMetrics> run_sweep(const SweepRequest& request, int threads) {
  EvolutionConfig config;
  config.width = request.width;
  config.steps = request.steps;
  config.boundary = Boundary::wrap();
  config.init = RandomInit{request.seed, 0.5};
  MetricsOptions options;
  options.block_length = request.block_length;
  options.weave = WeavabilityConfig::symmetric(request.h_max, request.max_float);
  if (request.block_length > request.width)
    throw ValidationError("block_length", "must not exceed width");
  return sweep_elementary(config, options, threads);
}

// ---------------------------------------------------------------------------
// SessionStore

SessionStore::SessionStore(std::optional<std::filesystem::path> state_dir)
    : state_dir_(std::move(state_dir)) {
  if (state_dir_) {
    std::error_code ec;
    std::filesystem::create_directories(*state_dir_, ec);
    if (ec) throw IoError("cannot create state dir " + state_dir_->string() + ": " + ec.message());
    load_snapshots();
  }
}

DesignSession SessionStore::create(PatternDocument document) {
  auto entry = std::make_shared<Entry>(DesignSession{new_session_id(), std::move(document), 1, 0, 0});
  entry->session.created_ms = entry->session.updated_ms = now_ms();
  {
    std::lock_guard lock(mutex_);
    entries_[entry->session.id] = entry;
  }
  std::lock_guard lock(entry->mutex);
  snapshot(entry->session);
  return entry->session;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : it->second;
}

std::optional<DesignSession> SessionStore::get(const std::string& id) const {
  auto entry = find(id);
  if (!entry) return std::nullopt;
  std::lock_guard lock(entry->mutex);
  return entry->session;
}

DesignSession SessionStore::update(
    const std::string& id, std::optional<std::int64_t> expected_revision,
    const std::function<PatternDocument(const PatternDocument&)>& edit) {
  auto entry = find(id);
  if (!entry) throw Error(ErrorKind::NotFound, "unknown session " + id);
  std::lock_guard lock(entry->mutex);
  if (expected_revision && *expected_revision != entry->session.revision)
    throw Error(ErrorKind::Conflict, "stale revision " + std::to_string(*expected_revision) +
                                         ", current is " +
                                         std::to_string(entry->session.revision));
  PatternDocument next = edit(entry->session.document);
  entry->session.document = std::move(next);
  ++entry->session.revision;
  entry->session.updated_ms = now_ms();
  snapshot(entry->session);
  return entry->session;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void SessionStore::snapshot(const DesignSession& session) const {
  if (!state_dir_) return;
  const auto target = *state_dir_ / (session.id + ".json");
  const auto tmp = *state_dir_ / (session.id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << to_json(session).dump(2) << '\n';
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot write " + target.string() + ": " + ec.message());
}

void SessionStore::load_snapshots() {
  for (const auto& file : std::filesystem::directory_iterator(*state_dir_)) {
    if (file.path().extension() != ".json") continue;
    std::ifstream in(file.path(), std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const Json j = Json::parse(buffer.str(), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("document")) continue;
    try {
      DesignSession s{j.at("id").get<std::string>(), document_from_json(j.at("document")),
                      j.at("revision").get<std::int64_t>(), j.value("created_ms", std::int64_t{0}),
                      j.value("updated_ms", std::int64_t{0})};
      auto entry = std::make_shared<Entry>(std::move(s));
      entries_[entry->session.id] = std::move(entry);
    } catch (const std::exception&) {
      // FIXME: unreadable snapshots are skipped silently; surface them in a startup log.
    }
  }
}

// ---------------------------------------------------------------------------
// DesignService

DesignService::DesignService(ServiceOptions options)
    : options_(std::move(options)), store_(options_.state_dir) {}

HttpResponse DesignService::handle(const HttpRequest& request) {
  HttpResponse response;
  try {
    response = route(request);
  } catch (const CapacityError& e) {
    Json extra;
    extra["required_shafts"] = e.required();
    extra["capacity"] = e.capacity();
    response = error_response(409, to_string(e.kind()), e.what(), extra);
  } catch (const ValidationError& e) {
    Json extra;
    extra["path"] = e.path();
    response = error_response(400, to_string(e.kind()), e.what(), extra);
  } catch (const Error& e) {
    response = error_response(status_for(e.kind()), to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    response = error_response(500, "internal", e.what());
  }
  response.headers["Access-Control-Allow-Origin"] = options_.cors_origin;
  response.headers["Access-Control-Expose-Headers"] = "ETag";
  return response;
}

HttpResponse DesignService::route(const HttpRequest& req) {
  if (req.method == "OPTIONS") {
    HttpResponse r;
    r.status = 204;
    r.content_type.clear();
    r.headers["Access-Control-Allow-Methods"] = "GET, POST, PUT, OPTIONS";
    r.headers["Access-Control-Allow-Headers"] = "Content-Type, If-Match";
    return r;
  }

  std::vector<std::string> parts;
  {
    std::string_view path = req.path;
    std::size_t at = 0;
    while (at < path.size()) {
      const auto next = path.find('/', at);
      const auto piece = path.substr(at, next == std::string_view::npos ? path.npos : next - at);
      if (!piece.empty()) parts.emplace_back(piece);
      if (next == std::string_view::npos) break;
      at = next + 1;
    }
  }
  const auto method_not_allowed = [] {
    return error_response(405, "method", "method not allowed");
  };
  if (parts.size() < 2 || parts[0] != "api") return error_response(404, "not-found", "no such route");

  if (parts.size() == 3 && parts[1] == "rules" && parts[2] == "elementary")
    return req.method == "GET" ? elementary_table(req) : method_not_allowed();
  if (parts.size() == 2 && parts[1] == "raster")
    return req.method == "POST" ? create_raster(req) : method_not_allowed();
  if (parts[1] == "patterns") {
    if (parts.size() == 2) return req.method == "POST" ? create_pattern(req) : method_not_allowed();
    const std::string& id = parts[2];
    if (parts.size() == 3) {
      if (req.method == "GET") return get_pattern(id);
      if (req.method == "PUT") return put_pattern(id, req);
      return method_not_allowed();
    }
    if (parts.size() == 4 && req.method == "GET") {
      if (parts[3] == "render.png") return render_png(id, req);
      if (parts[3] == "draft.wif") return draft_wif(id, req);
      if (parts[3] == "metrics") return pattern_metrics(id, req);
    }
  }
  return error_response(404, "not-found", "no such route");
}

DesignSession DesignService::require_session(const std::string& id) const {
  auto s = store_.get(id);
  if (!s) throw Error(ErrorKind::NotFound, "unknown session " + id);
  return *s;
}

HttpResponse DesignService::elementary_table(const HttpRequest& req) {
  SweepRequest sweep;
  sweep.width = query_number(req, "width", sweep.width, 1, 4096);
  sweep.steps = query_number(req, "steps", sweep.steps, 1, 4096);
  sweep.seed = query_number<std::uint64_t>(req, "seed", sweep.seed, 0, UINT64_MAX);
  sweep.h_max = query_number(req, "hmax", sweep.h_max, 1.0, 1e300);
  sweep.max_float = query_number(req, "maxfloat", sweep.max_float, 1, 1 << 20);
  sweep.block_length = query_number(req, "block", sweep.block_length, 1, 64);
  const auto results = run_sweep(sweep, options_.sweep_threads);

  Json body;
  body["width"] = sweep.width;
  body["steps"] = sweep.steps;
  body["seed"] = sweep.seed;
  body["h_min"] = 1.0 / sweep.h_max;
  body["h_max"] = sweep.h_max;
  body["max_float"] = sweep.max_float;
  body["rules"] = sweep_json(results);
  Json gutter = Json::array();
  for (const auto& row : entropy_ratio_table(results).gutter) gutter.push_back(row.rule);
  body["gutter"] = std::move(gutter);
  return json_response(200, body);
}

HttpResponse DesignService::create_pattern(const HttpRequest& req) {
  const Json body = parse_body(req.body);
  if (!body.is_object()) throw ValidationError("", "expected an object");
  for (const auto& [key, value] : body.items())
    if (key != "rule" && key != "config" && key != "colorway")
      throw ValidationError("/" + key, "unknown field");
  if (!body.contains("rule")) throw ValidationError("/rule", "missing required field");
  const RuleSpec rule = rule_from_body(body["rule"]);
  const EvolutionConfig config = body.contains("config")
                                     ? evolution_from_json(body["config"], "/config")
                                     : EvolutionConfig{};
  std::optional<Colorway> colorway;
  if (body.contains("colorway")) colorway = colorway_from_json(body["colorway"], "/colorway");
  const auto session = store_.create(evolve_document(rule, config, std::move(colorway)));
  auto r = json_response(201, session_envelope(session));
  r.headers["ETag"] = std::to_string(session.revision);
  return r;
}

HttpResponse DesignService::get_pattern(const std::string& id) {
  const auto session = require_session(id);
  auto r = json_response(200, session_envelope(session));
  r.headers["ETag"] = std::to_string(session.revision);
  return r;
}

HttpResponse DesignService::put_pattern(const std::string& id, const HttpRequest& req) {
  const Json body = parse_body(req.body);
  if (!body.is_object()) throw ValidationError("", "expected an object");
  for (const auto& [key, value] : body.items())
    if (key != "rule" && key != "config" && key != "colorway")
      throw ValidationError("/" + key, "unknown field");

  std::optional<std::int64_t> expected;
  if (auto it = req.headers.find("if-match"); it != req.headers.end()) {
    std::string tag = it->second;
    tag.erase(std::remove(tag.begin(), tag.end(), '"'), tag.end());
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(tag.data(), tag.data() + tag.size(), v);
    if (ec != std::errc{} || ptr != tag.data() + tag.size())
      throw ValidationError("If-Match", "expected a revision number");
    expected = v;
  }

  std::optional<RuleSpec> rule;
  if (body.contains("rule")) rule = rule_from_body(body["rule"]);
  std::optional<EvolutionConfig> config;
  if (body.contains("config")) config = evolution_from_json(body["config"], "/config");
  std::optional<Colorway> colorway;
  if (body.contains("colorway")) colorway = colorway_from_json(body["colorway"], "/colorway");

  const auto session = store_.update(id, expected, [&](const PatternDocument& current) {
    if ((rule || config) && !current.rule)
      throw ValidationError("/config", "raster sessions cannot be re-evolved");
    auto next_colorway = colorway ? colorway : current.colorway;
    if (rule || config) {
      return evolve_document(rule.value_or(*current.rule),
                             config.value_or(current.evolution.value_or(EvolutionConfig{})),
                             std::move(next_colorway));
    }
    PatternDocument next = current;
    next.colorway = std::move(next_colorway);
    if (next.colorway) {
      try {
        document_drawdown(next);
      } catch (const ValidationError& e) {
        throw ValidationError("/colorway/" + e.path(), e.message());
      }
    }
    return next;
  });
  auto r = json_response(200, session_envelope(session));
  r.headers["ETag"] = std::to_string(session.revision);
  return r;
}

HttpResponse DesignService::create_raster(const HttpRequest& req) {
  auto image = req.parts.find("image");
  if (image == req.parts.end()) throw ValidationError("image", "missing multipart field");
  if (image->second.size() > options_.max_upload_bytes)
    return error_response(413, "too-large", "image exceeds " +
                                                std::to_string(options_.max_upload_bytes) +
                                                " bytes");

  Json config_json = Json::object();
  if (auto it = req.parts.find("config"); it != req.parts.end()) config_json = parse_body(it->second);
  if (!config_json.is_object()) throw ValidationError("/config", "expected an object");
  bool repair = false;
  WeavabilityConfig weave;
  if (config_json.contains("repair")) {
    if (!config_json["repair"].is_boolean()) throw ValidationError("/config/repair", "expected a boolean");
    repair = config_json["repair"].get<bool>();
    config_json.erase("repair");
  }
  if (config_json.contains("max_float")) {
    if (!config_json["max_float"].is_number_integer())
      throw ValidationError("/config/max_float", "expected an integer");
    weave.max_float = config_json["max_float"].get<int>();
    config_json.erase("max_float");
  }
  if (config_json.contains("h_max")) {
    if (!config_json["h_max"].is_number()) throw ValidationError("/config/h_max", "expected a number");
    weave = WeavabilityConfig::symmetric(config_json["h_max"].get<double>(), weave.max_float);
    config_json.erase("h_max");
  }
  const RasterConfig config = raster_config_from_json(config_json, "/config");

  const auto& bytes = image->second;
  const LumaMatrix luma = load_image(
      std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  if (luma.rows() > options_.max_image_dimension || luma.cols() > options_.max_image_dimension)
    return error_response(413, "too-large",
                          "image dimensions exceed " + std::to_string(options_.max_image_dimension));

  const auto result = weavable_rasterize(luma, config, weave, repair);
  PatternDocument doc{kPatternFormatVersion, std::nullopt, std::nullopt, result.grid,
                      std::nullopt, std::nullopt};
  const auto session = store_.create(std::move(doc));

  Json body = session_envelope(session);
  body["float_report"] = to_json(result.floats);
  body["metrics"] = to_json(result.metrics);
  body["weaveable"] = result.weaveable;
  Json reasons = Json::array();
  for (auto v : result.reasons) reasons.push_back(to_string(v));
  body["reasons"] = std::move(reasons);
  Json flipped = Json::array();
  for (const auto& c : result.flipped) flipped.push_back(Json::array({c.row, c.col}));
  body["flipped"] = std::move(flipped);
  auto r = json_response(201, body);
  r.headers["ETag"] = std::to_string(session.revision);
  return r;
}

HttpResponse DesignService::render_png(const std::string& id, const HttpRequest& req) {
  const auto session = require_session(id);
  const int cell_px = query_number(req, "cellpx", 4, 1, 64);
  const Drawdown drawdown = document_drawdown(session.document);
  const auto max_side = static_cast<long>(std::max(drawdown.ends(), drawdown.picks())) * cell_px;
  if (max_side > 16384) throw ValidationError("?cellpx", "render would exceed 16384 pixels");
  const auto png = export_png(render(drawdown, cell_px));
  HttpResponse r;
  r.content_type = "image/png";
  r.body.assign(png.begin(), png.end());
  return r;
}

HttpResponse DesignService::draft_wif(const std::string& id, const HttpRequest& req) {
  const auto session = require_session(id);
  const int capacity = query_number(req, "capacity", options_.loom_capacity, 1, 1 << 16);
  const LoomDraft draft = factorize(document_drawdown(session.document), capacity);
  HttpResponse r;
  r.content_type = "text/plain; charset=utf-8";
  r.headers["Content-Disposition"] = "attachment; filename=\"" + id + ".wif\"";
  r.body = export_wif(draft, capacity);
  return r;
}

HttpResponse DesignService::pattern_metrics(const std::string& id, const HttpRequest& req) {
  const auto session = require_session(id);
  MetricsOptions options;
  const double h_max = query_number(req, "hmax", 4.0, 1.0, 1e300);
  const int max_float = query_number(req, "maxfloat", 5, 1, 1 << 20);
  options.weave = WeavabilityConfig::symmetric(h_max, max_float);
  options.block_length = std::min(query_number(req, "block", 3, 1, 64), session.document.grid.width());
  return json_response(200, to_json(compute_metrics(session.document.grid, options)));
}

void DesignService::bind(httplib::Server& server) {
  server.set_payload_max_length(options_.max_upload_bytes + (64u << 10));
  const auto adapter = [this](const httplib::Request& in, httplib::Response& out) {
    HttpRequest req;
    req.method = in.method;
    req.path = in.path;
    for (const auto& [k, v] : in.params) req.query.emplace(k, v);
    for (const auto& [k, v] : in.headers) {
      std::string key = k;
      std::transform(key.begin(), key.end(), key.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      req.headers.emplace(std::move(key), v);
    }
    req.body = in.body;
    for (const auto& [name, part] : in.files) req.parts.emplace(name, part.content);
    const HttpResponse res = handle(req);
    out.status = res.status;
    for (const auto& [k, v] : res.headers) out.set_header(k, v);
    if (!res.content_type.empty()) out.set_content(res.body, res.content_type);
  };
  server.Get(R"(/.*)", adapter);
  server.Post(R"(/.*)", adapter);
  server.Put(R"(/.*)", adapter);
  server.Options(R"(/.*)", adapter);
}

bool DesignService::listen() {
  httplib::Server server;
  bind(server);
  return server.listen(options_.host, options_.port);
}

}  // namespace loomata
