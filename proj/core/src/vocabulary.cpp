#include "cotctl/vocabulary.hpp"

#include <stdexcept>

namespace cotctl {

namespace {

std::vector<std::string> standard_tokens() {
  std::vector<std::string> t = {"<unk>", "<eos>"};
  for (const char* tag : {"think", "Fault", "Counterfactual", "root"}) {
    t.push_back(std::string("<") + tag + ">");
    t.push_back(std::string("</") + tag + ">");
  }
  for (const char* section : {"[GUIDANCE]", "[DEPLOYMENTS]", "[CALL_GRAPH]", "[EXPECTED_OUTPUT]",
                              "[CLUSTER_STATE]", "[CARRIER]", "[TASK_RCA]", "[TASK_ALLOCATE]"}) {
    t.emplace_back(section);
  }
  for (const char* p : {"@C", "@D", "@M", "@N", "@c", "@d", "@m", "@n"}) t.emplace_back(p);
  for (int i = 1; i <= 20; ++i) t.push_back("#" + std::to_string(i));
  for (const char* w : {"->", "<-", "LOW", "MEDIUM", "HIGH", "OK", "AT_RISK", "VIOLATED", "IF",
                        "THEN", "IMPROVED", "NEUTRAL", "DEGRADED", "IMPROVES", "DEGRADES",
                        "SCALE_OUT", "SCALE_IN", "CPU_UP", "CPU_DOWN", "MEM_UP", "MEM_DOWN", "NONE",
                        "cpu", "mem", "lat", "slo", "replicas", "ready", "tick", "arrival",
                        "forecast", "cluster", "support"}) {
    t.emplace_back(w);
  }
  t.emplace_back("\n");
  t.emplace_back("\t");
  for (char c = 0x20; c < 0x7F; ++c) t.emplace_back(1, c);
  return t;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw std::invalid_argument("vocabulary must not be empty");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw std::invalid_argument("vocabulary token must not be empty");
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary token '" + tokens_[i] + "'");
    }
    max_token_length_ = std::max(max_token_length_, tokens_[i].size());
  }
  unk_ = find("<unk>").value_or(0);
}

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary vocab(standard_tokens());
  return vocab;
}

std::optional<TokenId> Vocabulary::find(std::string_view text) const {
  auto it = index_.find(std::string(text));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view text) const {
  auto found = find(text);
  if (!found) throw std::out_of_range("token '" + std::string(text) + "' not in vocabulary");
  return *found;
}

std::vector<TokenId> Vocabulary::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  std::size_t pos = 0;
  std::string probe;
  while (pos < text.size()) {
    const std::size_t longest = std::min(max_token_length_, text.size() - pos);
    bool matched = false;
    for (std::size_t len = longest; len >= 1; --len) {
      probe.assign(text.substr(pos, len));
      auto it = index_.find(probe);
      if (it != index_.end()) {
        out.push_back(it->second);
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      out.push_back(unk_);
      ++pos;
    }
  }
  return out;
}

std::string Vocabulary::detokenize(std::span<const TokenId> ids) const {
  std::string text;
  for (TokenId id : ids) text += token(id);
  return text;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& tok : tokens_) {
    for (unsigned char c : tok) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xFF;  // separator
    h *= 1099511628211ULL;
  }
  return h;
}

bool Vocabulary::is_whitespace(TokenId id) const {
  const auto& t = token(id);
  return t == " " || t == "\n" || t == "\t";
}

}  // namespace cotctl
