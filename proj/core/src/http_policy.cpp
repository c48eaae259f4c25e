#include "cotctl/http_policy.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace cotctl::policy {

void ExternalModelConfig::validate() const {
  if (!(timeout_s > 0.0)) throw ConfigError("model endpoint timeout must be > 0");
  if (retry_count < 0) throw ConfigError("model endpoint retry count must be >= 0");
  if (max_tokens < 1) throw ConfigError("model max_tokens must be >= 1");
  if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0) {
    throw ConfigError("model endpoint must be an http:// URL, got '" + endpoint + "'");
  }
}

std::string default_system_prompt() {
  return "Reply with exactly four tagged segments in order: <think>...</think> "
         "<Fault>...</Fault> <Counterfactual>...</Counterfactual> <root>...</root>. "
         "Inside <Counterfactual> write one claim per line as "
         "IF ACTION #id [amount] THEN IMPROVED|NEUTRAL|DEGRADED where ACTION is one of "
         "SCALE_OUT SCALE_IN CPU_UP CPU_DOWN MEM_UP MEM_DOWN, or write NONE. "
         "Inside <root> list root causes as #id @P pairs with P one of C D M N, or write NONE.\n";
}

HttpPolicy::HttpPolicy(ExternalModelConfig cfg) : cfg_(std::move(cfg)) {
  if (const char* env = std::getenv(kEndpointEnvVar); env != nullptr && *env != '\0') {
    cfg_.endpoint = env;
  }
  if (cfg_.system_prompt.empty()) cfg_.system_prompt = default_system_prompt();
  cfg_.validate();
}

namespace {

struct Target {
  std::string origin;
  std::string path;
};

Target split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::vector<std::string> decode(const std::string& body, int count) {
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw HttpError(HttpErrorKind::MalformedBody, "model response is not a JSON object", 1);
  }
  auto it = doc.find("completions");
  if (it == doc.end() || !it->is_array()) {
    throw HttpError(HttpErrorKind::MalformedBody, "model response lacks a completions array", 1);
  }
  std::vector<std::string> out;
  for (const auto& c : *it) {
    if (!c.is_string()) {
      throw HttpError(HttpErrorKind::MalformedBody, "model completion is not a string", 1);
    }
    out.push_back(c.get<std::string>());
  }
  if (static_cast<int>(out.size()) != count) {
    throw HttpError(HttpErrorKind::MalformedBody,
                    "model returned " + std::to_string(out.size()) + " completions, expected " +
                        std::to_string(count),
                    1);
  }
  return out;
}

}  // namespace

std::vector<Sample> HttpPolicy::generate(const encoder::Prompt& prompt, int count,
                                         std::uint64_t /*seed*/) const {
  if (count < 1) throw std::invalid_argument("sample count must be >= 1");
  const auto target = split_url(cfg_.endpoint);
  const nlohmann::json request = {{"prompt", cfg_.system_prompt + prompt.text},
                                  {"n", count},
                                  {"max_tokens", cfg_.max_tokens}};
  const std::string payload = request.dump();

  const auto secs = static_cast<time_t>(cfg_.timeout_s);
  const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
  const int attempts = 1 + cfg_.retry_count;

  HttpErrorKind last_kind = HttpErrorKind::Connection;
  std::string last_message;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(target.origin);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(target.path, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      last_kind = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                      ? HttpErrorKind::Timeout
                      : HttpErrorKind::Connection;
      last_message = "model request failed: " + httplib::to_string(err);
    } else if (res->status < 200 || res->status >= 300) {
      last_kind = HttpErrorKind::Status;
      last_message = "model endpoint answered HTTP " + std::to_string(res->status);
    } else {
      try {
        std::vector<Sample> out;
        for (auto& text : decode(res->body, count)) out.push_back(text_sample(std::move(text)));
        return out;
      } catch (const HttpError& e) {
        last_kind = e.kind();
        last_message = e.what();
      }
    }
    spdlog::warn("model endpoint attempt {}/{}: {}", attempt, attempts, last_message);
  }
  throw HttpError(last_kind, last_message + " after " + std::to_string(attempts) + " attempt(s)",
                  attempts);
}

}  // namespace cotctl::policy
