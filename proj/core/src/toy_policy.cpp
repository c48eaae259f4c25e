#include "cotctl/toy_policy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cotctl/error.hpp"
#include "cotctl/rng.hpp"

namespace cotctl::policy {

namespace {

// Numerically stable log-softmax of one row.
std::vector<double> log_softmax(std::span<const double> row) {
  double top = row[0];
  for (double v : row) top = std::max(top, v);
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - top);
  const double log_z = top + std::log(sum);
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] - log_z;
  return out;
}

}  // namespace

TokenSequencePolicy::TokenSequencePolicy(std::size_t vocab_size, int max_len,
                                         std::optional<TokenId> stop, const Vocabulary* vocab)
    : size_(vocab_size), max_len_(max_len), stop_(stop), vocab_(vocab),
      theta_(vocab_size * vocab_size, 0.0) {
  if (vocab_size < 2) throw std::invalid_argument("toy policy needs at least two tokens");
  if (max_len < 1) throw std::invalid_argument("toy policy max_len must be >= 1");
  if (stop && (*stop < 0 || static_cast<std::size_t>(*stop) >= vocab_size)) {
    throw std::invalid_argument("stop token outside the alphabet");
  }
  if (vocab != nullptr && vocab->size() != vocab_size) {
    throw std::invalid_argument("vocabulary size does not match the policy alphabet");
  }
}

TokenSequencePolicy TokenSequencePolicy::over(const Vocabulary& vocab, int max_len) {
  return TokenSequencePolicy(vocab.size(), max_len, vocab.eos(), &vocab);
}

void TokenSequencePolicy::check_token(TokenId t) const {
  if (t < 0 || static_cast<std::size_t>(t) >= size_) {
    throw std::out_of_range("token " + std::to_string(t) + " outside the policy alphabet");
  }
}

double& TokenSequencePolicy::logit(TokenId prev, TokenId next) {
  check_token(prev);
  check_token(next);
  return theta_[static_cast<std::size_t>(prev) * size_ + static_cast<std::size_t>(next)];
}

double TokenSequencePolicy::logit(TokenId prev, TokenId next) const {
  check_token(prev);
  check_token(next);
  return theta_[static_cast<std::size_t>(prev) * size_ + static_cast<std::size_t>(next)];
}

std::vector<double> TokenSequencePolicy::probabilities(TokenId prev) const {
  check_token(prev);
  auto lp = log_softmax(std::span(theta_).subspan(static_cast<std::size_t>(prev) * size_, size_));
  for (double& v : lp) v = std::exp(v);
  return lp;
}

TokenId TokenSequencePolicy::start_token(const encoder::Prompt& prompt) const {
  if (prompt.tokens.empty()) throw std::invalid_argument("toy policy needs a non-empty prompt");
  TokenId start = prompt.tokens.back();
  const auto& standard = Vocabulary::standard();
  if (vocab_ != nullptr && vocab_ != &standard) {
    // Prompts are tokenized with the standard vocabulary; map the start
    // token into this policy's alphabet by spelling.
    auto mapped = vocab_->find(standard.token(start));
    if (!mapped) throw std::invalid_argument("prompt start token is not in the policy alphabet");
    start = *mapped;
  }
  return start;
}

std::vector<Sample> TokenSequencePolicy::generate(const encoder::Prompt& prompt, int count,
                                                  std::uint64_t seed) const {
  return generate_from(start_token(prompt), count, seed);
}

std::vector<Sample> TokenSequencePolicy::generate_from(TokenId start, int count,
                                                       std::uint64_t seed) const {
  if (count < 1) throw std::invalid_argument("sample count must be >= 1");
  check_token(start);
  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int g = 0; g < count; ++g) {
    Sample s;
    s.logprobs.emplace();
    TokenId prev = start;
    for (int t = 0; t < max_len_; ++t) {
      const auto row = std::span(theta_).subspan(static_cast<std::size_t>(prev) * size_, size_);
      const auto lp = log_softmax(row);
      std::vector<double> p(lp.size());
      for (std::size_t i = 0; i < lp.size(); ++i) p[i] = std::exp(lp[i]);
      const auto next = static_cast<TokenId>(rng.categorical(p));
      s.tokens.push_back(next);
      s.logprobs->push_back(lp[static_cast<std::size_t>(next)]);
      prev = next;
      if (stop_ && next == *stop_) break;
    }
    if (vocab_ != nullptr) {
      std::vector<TokenId> visible = s.tokens;
      if (stop_ && !visible.empty() && visible.back() == *stop_) visible.pop_back();
      s.text = vocab_->detokenize(visible);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> TokenSequencePolicy::log_likelihood(TokenId start,
                                                        std::span<const TokenId> seq) const {
  check_token(start);
  std::vector<double> out;
  out.reserve(seq.size());
  TokenId prev = start;
  for (TokenId t : seq) {
    check_token(t);
    const auto lp =
        log_softmax(std::span(theta_).subspan(static_cast<std::size_t>(prev) * size_, size_));
    out.push_back(lp[static_cast<std::size_t>(t)]);
    prev = t;
  }
  return out;
}

double TokenSequencePolicy::log_likelihood_sum(TokenId start, std::span<const TokenId> seq) const {
  double sum = 0.0;
  for (double v : log_likelihood(start, seq)) sum += v;
  return sum;
}

void TokenSequencePolicy::accumulate_gradient(TokenId start, std::span<const TokenId> seq,
                                              double weight, std::span<double> grad) const {
  if (grad.size() != theta_.size()) throw std::invalid_argument("gradient buffer size mismatch");
  check_token(start);
  TokenId prev = start;
  for (TokenId t : seq) {
    check_token(t);
    const std::size_t base = static_cast<std::size_t>(prev) * size_;
    const auto lp = log_softmax(std::span(theta_).subspan(base, size_));
    for (std::size_t j = 0; j < size_; ++j) grad[base + j] -= weight * std::exp(lp[j]);
    grad[base + static_cast<std::size_t>(t)] += weight;
    prev = t;
  }
}

double TokenSequencePolicy::exact_kl(const TokenSequencePolicy& reference, TokenId start,
                                     std::span<const TokenId> seq) const {
  if (reference.size_ != size_) throw std::invalid_argument("KL between different alphabets");
  if (seq.empty()) return 0.0;
  double total = 0.0;
  TokenId prev = start;
  for (TokenId t : seq) {
    check_token(prev);
    const std::size_t base = static_cast<std::size_t>(prev) * size_;
    const auto lp = log_softmax(std::span(theta_).subspan(base, size_));
    const auto lq = log_softmax(std::span(reference.theta_).subspan(base, size_));
    for (std::size_t j = 0; j < size_; ++j) total += std::exp(lp[j]) * (lp[j] - lq[j]);
    prev = t;
  }
  return total / static_cast<double>(seq.size());
}

std::string TokenSequencePolicy::to_json() const {
  nlohmann::json doc;
  doc["format"] = "cotctl-toy-policy";
  doc["version"] = 1;
  doc["vocab_size"] = size_;
  if (vocab_ != nullptr) doc["vocab_hash"] = vocab_->hash();
  doc["max_len"] = max_len_;
  if (stop_) doc["stop"] = *stop_;
  doc["theta"] = theta_;
  return doc.dump();
}

TokenSequencePolicy TokenSequencePolicy::from_json(std::string_view text, const Vocabulary* vocab) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.value("format", std::string()) != "cotctl-toy-policy" || doc.value("version", 0) != 1) {
      throw ConfigError("not a version-1 toy policy checkpoint");
    }
    const auto size = doc.at("vocab_size").get<std::size_t>();
    if (vocab != nullptr) {
      if (!doc.contains("vocab_hash") || doc["vocab_hash"].get<std::uint64_t>() != vocab->hash()) {
        throw ConfigError("checkpoint was trained on a different vocabulary");
      }
    }
    std::optional<TokenId> stop;
    if (doc.contains("stop")) stop = doc["stop"].get<TokenId>();
    TokenSequencePolicy policy(size, doc.at("max_len").get<int>(), stop, vocab);
    auto theta = doc.at("theta").get<std::vector<double>>();
    if (theta.size() != size * size) throw ConfigError("checkpoint theta has the wrong shape");
    for (double v : theta) {
      if (!std::isfinite(v)) throw ConfigError("checkpoint theta holds non-finite values");
    }
    policy.theta_ = std::move(theta);
    return policy;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed toy policy checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid toy policy checkpoint: ") + e.what());
  }
}

void TokenSequencePolicy::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << to_json() << '\n';
}

TokenSequencePolicy TokenSequencePolicy::load(const std::filesystem::path& path,
                                              const Vocabulary* vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str(), vocab);
}

}  // namespace cotctl::policy
