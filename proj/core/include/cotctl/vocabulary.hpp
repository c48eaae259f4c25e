#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cotctl {

using TokenId = std::int32_t;

/// Finite token alphabet shared by prompts, generations and the toy policy.
///
/// Text is tokenized by greedy longest match. The standard vocabulary holds
/// every printable ASCII character plus newline and tab as single-character
/// tokens, so any ASCII text round-trips through tokenize/detokenize.
/// Bytes outside that range map to the `<unk>` token.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> tokens);

  /// The process-wide vocabulary used by the encoder and cot modules.
  static const Vocabulary& standard();

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<TokenId> find(std::string_view text) const;
  /// Like find(), but throws std::out_of_range for unknown spellings.
  TokenId id(std::string_view text) const;
  bool contains(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < size(); }

  std::vector<TokenId> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const TokenId> ids) const;

  /// FNV-1a over the ordered token spellings; pins checkpoints to a vocabulary.
  std::uint64_t hash() const;

  TokenId unk() const { return unk_; }
  std::optional<TokenId> eos() const { return find("<eos>"); }
  bool is_whitespace(TokenId id) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t max_token_length_ = 1;
  TokenId unk_ = 0;
};

}  // namespace cotctl
