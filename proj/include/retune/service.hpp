#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>

#include "retune/grpo.hpp"
#include "retune/reward.hpp"

namespace retune {

inline constexpr std::string_view kVersion = "0.1.0";

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t batch_cap = 4096;
  int threads = 8;
  RewardWeights weights;  // used when a request carries none
  GrpoConfig grpo;
  friend bool operator==(const ServiceConfig&, const ServiceConfig&) = default;
};

struct ServiceResponse {
  int status = 200;
  std::string body;  // JSON
};

/// Request handlers, independent of the transport. Every handler is const and
/// touches no shared mutable state.
///
/// Errors are `{"error": {"code", "message", "id"?}}` with
///   bad_request 400, validation_failed 422, overloaded 413, internal 500.
class ScoringService {
 public:
  explicit ScoringService(ServiceConfig config);

  const ServiceConfig& config() const { return config_; }

  ServiceResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

  ServiceResponse score(std::string_view body) const;
  ServiceResponse advantage(std::string_view body) const;
  ServiceResponse vote(std::string_view body) const;
  ServiceResponse health() const;

  /// Hex digest of the effective defaults (weights, GRPO config, batch cap).
  std::string config_digest() const;

 private:
  ServiceConfig config_;
};

/// HTTP/1.1 front end for ScoringService.
class ServiceHost {
 public:
  /// `log` receives one JSON line per request; may be null.
  ServiceHost(ScoringService service, std::ostream* log);
  ~ServiceHost();
  ServiceHost(const ServiceHost&) = delete;
  ServiceHost& operator=(const ServiceHost&) = delete;

  /// Binds the listening socket. Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop(); in-flight requests finish before it returns.
  void run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace retune
