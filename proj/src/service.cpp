#include "retune/service.hpp"

#include <httplib.h>

#include <chrono>
#include <mutex>
#include <ostream>
#include <set>

#include "retune/batch.hpp"
#include "retune/errors.hpp"
#include "retune/jsonl.hpp"
#include "retune/seeding.hpp"

namespace retune {

namespace {

enum class ErrorCode { bad_request, validation_failed, overloaded, internal };

struct ServiceError {
  ErrorCode code;
  std::string message;
  std::optional<Json> id;
};

int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::bad_request: return 400;
    case ErrorCode::validation_failed: return 422;
    case ErrorCode::overloaded: return 413;
    case ErrorCode::internal: return 500;
  }
  return 500;
}

std::string_view code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::bad_request: return "bad_request";
    case ErrorCode::validation_failed: return "validation_failed";
    case ErrorCode::overloaded: return "overloaded";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

ServiceResponse error_response(const ServiceError& e) {
  OrderedJson err;
  err["code"] = code_name(e.code);
  err["message"] = e.message;
  if (e.id) err["id"] = *e.id;
  return {http_status(e.code), OrderedJson{{"error", std::move(err)}}.dump()};
}

[[noreturn]] void fail(ErrorCode code, std::string message, std::optional<Json> id = std::nullopt) {
  throw ServiceError{code, std::move(message), std::move(id)};
}

Json parse_body(std::string_view body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::bad_request, "request body is not valid JSON");
  if (!j.is_object()) fail(ErrorCode::bad_request, "request body must be a JSON object");
  return j;
}

const Json& batch_array(const Json& body, std::string_view key, std::size_t cap) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_array()) fail(ErrorCode::bad_request, "'" + std::string(key) + "' must be an array");
  if (it->size() > cap) {
    fail(ErrorCode::overloaded,
         std::to_string(it->size()) + " " + std::string(key) + " exceed the batch cap of " + std::to_string(cap));
  }
  return *it;
}

Json item_id(const Json& item, std::string_view key) {
  if (!item.is_object()) fail(ErrorCode::bad_request, "batch entries must be objects");
  auto it = item.find(key);
  if (it == item.end() || !(it->is_string() || it->is_number_integer())) {
    fail(ErrorCode::bad_request, "'" + std::string(key) + "' must be a string or integer");
  }
  return *it;
}

// Runs a decode/validation step; library errors become `code` tagged with `id`.
template <typename Fn>
auto guarded(ErrorCode code, const Json& id, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    fail(code, e.what(), id.is_null() ? std::nullopt : std::optional<Json>(id));
  }
}

OrderedJson results(OrderedJson arr) { return OrderedJson{{"results", std::move(arr)}}; }

}  // namespace

ScoringService::ScoringService(ServiceConfig config) : config_(std::move(config)) {
  validate(config_.weights);
  validate(config_.grpo);
}

std::string ScoringService::config_digest() const {
  const OrderedJson j{{"weights", to_json(config_.weights)},
                      {"grpo", to_json(config_.grpo)},
                      {"batch_cap", config_.batch_cap}};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

ServiceResponse ScoringService::handle(std::string_view method, std::string_view path, std::string_view body) const {
  if (path == "/health") {
    if (method != "GET") return error_response({ErrorCode::bad_request, "use GET /health", std::nullopt});
    return health();
  }
  using Handler = ServiceResponse (ScoringService::*)(std::string_view) const;
  static const std::array<std::pair<std::string_view, Handler>, 3> routes{{
      {"/v1/score", &ScoringService::score},
      {"/v1/advantage", &ScoringService::advantage},
      {"/v1/vote", &ScoringService::vote},
  }};
  for (const auto& [route, handler] : routes) {
    if (path != route) continue;
    if (method != "POST") {
      return error_response({ErrorCode::bad_request, "use POST " + std::string(route), std::nullopt});
    }
    return (this->*handler)(body);
  }
  return {404, OrderedJson{{"error", {{"code", "bad_request"}, {"message", "no such endpoint"}}}}.dump()};
}

ServiceResponse ScoringService::health() const {
  return {200, OrderedJson{{"status", "ok"}, {"version", kVersion}, {"config_digest", config_digest()}}.dump()};
}

ServiceResponse ScoringService::score(std::string_view body) const {
  try {
    const Json req = parse_body(body);
    RewardWeights weights = config_.weights;
    if (auto w = req.find("weights"); w != req.end()) {
      weights = guarded(ErrorCode::validation_failed, Json(), [&] { return weights_from_json(*w, config_.weights); });
    }
    const Json& items = batch_array(req, "items", config_.batch_cap);
    std::vector<Json> ids;
    std::vector<std::string> texts;
    std::vector<MovementLabel> truths;
    std::set<std::string> seen;
    for (const Json& item : items) {
      Json id = item_id(item, "id");
      if (!seen.insert(id.dump()).second) fail(ErrorCode::validation_failed, "duplicate id " + id.dump(), id);
      texts.push_back(guarded(ErrorCode::bad_request, id, [&] { return require_string(item, "text"); }));
      const std::string truth = guarded(ErrorCode::bad_request, id, [&] { return require_string(item, "truth_label"); });
      auto label = label_from_string(truth);
      if (!label) fail(ErrorCode::validation_failed, "truth_label must be up, down or hold", id);
      truths.push_back(*label);
      ids.push_back(std::move(id));
    }
    const auto breakdowns = batch::shape_all(texts, truths, weights);
    OrderedJson out = OrderedJson::array();
    for (std::size_t i = 0; i < ids.size(); ++i) out.push_back(breakdown_json(ids[i], breakdowns[i]));
    return {200, results(std::move(out)).dump()};
  } catch (const ServiceError& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    return error_response({ErrorCode::internal, e.what(), std::nullopt});
  }
}

ServiceResponse ScoringService::advantage(std::string_view body) const {
  try {
    const Json req = parse_body(body);
    GrpoConfig config = config_.grpo;
    if (auto c = req.find("config"); c != req.end()) {
      config = guarded(ErrorCode::validation_failed, Json(), [&] { return grpo_config_from_json(*c, config_.grpo); });
    }
    const Json& groups = batch_array(req, "groups", config_.batch_cap);
    std::vector<GroupRecord> records;
    records.reserve(groups.size());
    std::set<std::string> seen;
    // Validate everything before computing anything: a bad group rejects the whole request.
    for (const Json& g : groups) {
      Json id = item_id(g, "group_id");
      if (!seen.insert(id.dump()).second) fail(ErrorCode::validation_failed, "duplicate group_id " + id.dump(), id);
      GroupRecord rec = guarded(ErrorCode::bad_request, id, [&] { return group_from_json(g); });
      if (rec.group.rewards.size() < 2) {
        fail(ErrorCode::validation_failed, "group needs at least 2 rewards", id);
      }
      if (rec.has_logprobs) {
        guarded(ErrorCode::validation_failed, id, [&] { validate(rec.group); });
      }
      records.push_back(std::move(rec));
    }

    std::vector<std::vector<double>> rewards;
    std::vector<RolloutGroup> with_tokens;
    for (const auto& r : records) {
      if (r.has_logprobs) {
        with_tokens.push_back(r.group);
      } else {
        rewards.push_back(r.group.rewards);
      }
    }
    const auto advantages = batch::advantages_all(rewards, config.std_guard);
    const auto objectives = batch::objective_all(with_tokens, config);

    OrderedJson out = OrderedJson::array();
    std::size_t a = 0, o = 0;
    for (const auto& r : records) {
      if (r.has_logprobs) {
        out.push_back(to_json(r.group_id, objectives[o++], true));
      } else {
        ObjectiveResult plain;
        plain.advantages = advantages[a++];
        out.push_back(to_json(r.group_id, plain, false));
      }
    }
    return {200, results(std::move(out)).dump()};
  } catch (const ServiceError& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    return error_response({ErrorCode::internal, e.what(), std::nullopt});
  }
}

ServiceResponse ScoringService::vote(std::string_view body) const {
  try {
    const Json req = parse_body(body);
    const Json& items = batch_array(req, "ballots", config_.batch_cap);
    std::vector<Ballot> ballots;
    ballots.reserve(items.size());
    for (const Json& item : items) {
      const Json id = item_id(item, "sample_id");
      if (!id.is_string()) fail(ErrorCode::bad_request, "'sample_id' must be a string", id);
      Ballot b = guarded(ErrorCode::validation_failed, id, [&] { return ballot_from_json(item); });
      if (b.votes.empty()) fail(ErrorCode::validation_failed, "empty ballot", id);
      ballots.push_back(std::move(b));
    }
    const auto winners = batch::vote_all(ballots);
    OrderedJson out = OrderedJson::array();
    for (std::size_t i = 0; i < ballots.size(); ++i) {
      out.push_back({{"sample_id", ballots[i].sample_id}, {"winner", to_string(winners[i])}});
    }
    return {200, results(std::move(out)).dump()};
  } catch (const ServiceError& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    return error_response({ErrorCode::internal, e.what(), std::nullopt});
  }
}

// ---------------------------------------------------------------------------

struct ServiceHost::Impl {
  ScoringService service;
  std::ostream* log = nullptr;
  std::mutex log_mu;
  httplib::Server server;

  Impl(ScoringService s, std::ostream* l) : service(std::move(s)), log(l) {}
};

ServiceHost::ServiceHost(ScoringService service, std::ostream* log)
    : impl_(std::make_unique<Impl>(std::move(service), log)) {
  Impl& impl = *impl_;
  const int threads = std::max(1, impl.service.config().threads);
  impl.server.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };

  auto dispatch = [&impl](const httplib::Request& req, httplib::Response& res) {
    const auto start = std::chrono::steady_clock::now();
    const ServiceResponse r = impl.service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
    if (impl.log != nullptr) {
      const auto us =
          std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start).count();
      const OrderedJson line{{"method", req.method},     {"path", req.path},
                             {"status", r.status},       {"bytes_in", req.body.size()},
                             {"bytes_out", r.body.size()}, {"duration_us", us}};
      std::lock_guard lock(impl.log_mu);
      *impl.log << line.dump() << '\n' << std::flush;
    }
  };
  impl.server.Get(".*", dispatch);
  impl.server.Post(".*", dispatch);
  impl.server.Put(".*", dispatch);
  impl.server.Delete(".*", dispatch);
}

ServiceHost::~ServiceHost() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

int ServiceHost::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ServiceHost::run() {
  if (!impl_->server.listen_after_bind()) {
    if (impl_->server.is_valid()) return;
    throw IoError("server failed to listen");
  }
}

void ServiceHost::stop() { impl_->server.stop(); }

bool ServiceHost::running() const { return impl_->server.is_running(); }

}  // namespace retune
