#pragma once

#include <string>

#include "cotctl/error.hpp"
#include "cotctl/policy.hpp"

namespace cotctl::policy {

inline constexpr const char* kEndpointEnvVar = "COTCTL_MODEL_ENDPOINT";

struct ExternalModelConfig {
  std::string endpoint;  // http://host:port/path
  double timeout_s = 30.0;
  std::string system_prompt;  // defaults to default_system_prompt() when empty
  int retry_count = 2;
  int max_tokens = 1024;

  void validate() const;
};

/// Instructions that pin a remote model to the tagged output micro-syntax.
std::string default_system_prompt();

enum class HttpErrorKind { Timeout, Status, MalformedBody, Connection };

class HttpError : public RuntimeFailure {
 public:
  HttpError(HttpErrorKind kind, const std::string& what, int attempts)
      : RuntimeFailure(what), kind_(kind), attempts_(attempts) {}
  HttpErrorKind kind() const noexcept { return kind_; }
  int attempts() const noexcept { return attempts_; }

 private:
  HttpErrorKind kind_;
  int attempts_;
};

/// Adapter for an external completion endpoint.
///
/// Request:  POST {"prompt": text, "n": count, "max_tokens": int}
/// Response: {"completions": [text, ...]} with exactly `n` strings.
/// Samples carry no log-likelihoods, so they are evaluation-only. The
/// endpoint can be overridden through the COTCTL_MODEL_ENDPOINT variable.
class HttpPolicy final : public PolicyBackend {
 public:
  explicit HttpPolicy(ExternalModelConfig cfg);
  std::vector<Sample> generate(const encoder::Prompt& prompt, int count,
                               std::uint64_t seed) const override;
  std::string_view name() const override { return "http"; }
  const ExternalModelConfig& config() const { return cfg_; }

 private:
  ExternalModelConfig cfg_;
};

}  // namespace cotctl::policy
