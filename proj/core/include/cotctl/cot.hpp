#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotctl/types.hpp"
#include "cotctl/vocabulary.hpp"

namespace cotctl::cot {

enum class Tag { Think = 0, Fault = 1, Counterfactual = 2, Root = 3 };

inline constexpr std::array<Tag, 4> kTags = {Tag::Think, Tag::Fault, Tag::Counterfactual,
                                             Tag::Root};

std::string_view open_spelling(Tag t);   // "<think>", "<Fault>", ...
std::string_view close_spelling(Tag t);  // "</think>", ...
std::string_view to_string(Tag t);       // "think", "Fault", ...

enum class ViolationKind { EmptyContent, BadOrdering, NestedTags, MissingTag };

std::string_view to_string(ViolationKind k);

struct FormatViolation {
  ViolationKind kind = ViolationKind::MissingTag;
  Tag tag = Tag::Think;

  friend bool operator==(const FormatViolation&, const FormatViolation&) = default;
};

struct CounterfactualClaim {
  ScalingAction action;
  Outcome predicted = Outcome::Neutral;

  friend bool operator==(const CounterfactualClaim&, const CounterfactualClaim&) = default;
};

struct CotOutput {
  std::vector<TokenId> raw;
  std::string think;  // segment texts, surrounding whitespace trimmed
  std::string fault;
  std::string counterfactual_text;
  std::string root_text;
  std::vector<CounterfactualClaim> counterfactual;
  std::vector<RootLabel> root;  // ranked; first entry is the top-1 prediction
  std::vector<FormatViolation> violations;
  int reasoning_tokens = 0;

  LabelSet root_set() const { return LabelSet(root.begin(), root.end()); }
  std::optional<RootLabel> top1() const {
    if (root.empty()) return std::nullopt;
    return root.front();
  }
  const std::string& segment(Tag t) const;
  bool segments_equal(const CotOutput& other) const;
};

/// Total parser: any token sequence yields a CotOutput, with every deviation
/// from the four-tag layout recorded as a FormatViolation.
CotOutput parse(std::span<const TokenId> tokens, const Vocabulary& vocab = Vocabulary::standard());
CotOutput parse_text(std::string_view text);

struct FormatChecks {
  int total = 12;
  int invalid = 0;
};

/// 3 checks (non-empty, ordering, non-nesting) per tag; MissingTag fails all three.
FormatChecks count_format_checks(const CotOutput& out);

/// Claims predicted IMPROVED, in their original order.
std::vector<CounterfactualClaim> interpret(const CotOutput& out);

/// Non-tag tokens inside the four tag pairs.
int reasoning_length(const CotOutput& out);

/// `#id @P` pairs, or NONE for an empty list.
std::string render_root(std::span<const RootLabel> labels);
/// One `IF PHRASE #id amount THEN OUTCOME` line per claim, or NONE.
std::string render_claims(std::span<const CounterfactualClaim> claims);

/// Canonical four-tag text for the segments of `out`.
std::string serialize(const CotOutput& out);

/// Builds canonical output text from its parts.
std::string compose(std::string_view think, std::string_view fault,
                    std::span<const CounterfactualClaim> claims, std::span<const RootLabel> root);

/// Section header tokens ("[GUIDANCE]", ...) in order of appearance.
std::vector<std::string> scan_sections(std::span<const TokenId> tokens,
                                       const Vocabulary& vocab = Vocabulary::standard());

}  // namespace cotctl::cot
