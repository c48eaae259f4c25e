#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cotctl/policy.hpp"
#include "cotctl/vocabulary.hpp"

namespace cotctl::policy {

/// Bigram-autoregressive policy over a finite alphabet: the next token is
/// drawn from softmax(theta[previous token]). Generation starts from a
/// single conditioning token (the last prompt token).
class TokenSequencePolicy final : public PolicyBackend {
 public:
  /// `vocab` may be null; it is only used to render sample text.
  TokenSequencePolicy(std::size_t vocab_size, int max_len, std::optional<TokenId> stop = {},
                      const Vocabulary* vocab = nullptr);

  /// Policy over the full standard vocabulary, stopping at `<eos>`.
  static TokenSequencePolicy over(const Vocabulary& vocab, int max_len);

  std::size_t vocab_size() const { return size_; }
  int max_len() const { return max_len_; }
  std::optional<TokenId> stop() const { return stop_; }
  const Vocabulary* vocabulary() const { return vocab_; }

  std::span<const double> theta() const { return theta_; }
  std::span<double> theta() { return theta_; }
  double& logit(TokenId prev, TokenId next);
  double logit(TokenId prev, TokenId next) const;

  std::vector<double> probabilities(TokenId prev) const;

  std::vector<Sample> generate(const encoder::Prompt& prompt, int count,
                               std::uint64_t seed) const override;
  /// Conditioning token for `prompt`: its last token, mapped by spelling
  /// into this policy's vocabulary when that differs from the standard one.
  TokenId start_token(const encoder::Prompt& prompt) const;
  std::vector<Sample> generate_from(TokenId start, int count, std::uint64_t seed) const;
  bool trainable() const override { return true; }
  std::string_view name() const override { return "toy"; }

  /// Per-token log-likelihoods of `seq` following `start`. Throws
  /// std::out_of_range for tokens outside the alphabet.
  std::vector<double> log_likelihood(TokenId start, std::span<const TokenId> seq) const;
  double log_likelihood_sum(TokenId start, std::span<const TokenId> seq) const;

  /// grad += weight * d(sum log-likelihood)/d(theta).
  void accumulate_gradient(TokenId start, std::span<const TokenId> seq, double weight,
                           std::span<double> grad) const;

  /// Mean over positions of KL(this(.|prev) || reference(.|prev)) along `seq`.
  double exact_kl(const TokenSequencePolicy& reference, TokenId start,
                  std::span<const TokenId> seq) const;

  std::string to_json() const;
  /// Throws ConfigError on malformed documents or a vocabulary mismatch.
  static TokenSequencePolicy from_json(std::string_view text, const Vocabulary* vocab = nullptr);
  void save(const std::filesystem::path& path) const;
  static TokenSequencePolicy load(const std::filesystem::path& path,
                                  const Vocabulary* vocab = nullptr);

 private:
  void check_token(TokenId t) const;

  std::size_t size_;
  int max_len_;
  std::optional<TokenId> stop_;
  const Vocabulary* vocab_;
  std::vector<double> theta_;  // row-major [prev][next]
};

}  // namespace cotctl::policy
