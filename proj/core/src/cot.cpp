#include "cotctl/cot.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <iterator>
#include <sstream>

namespace cotctl::cot {

std::string_view open_spelling(Tag t) {
  switch (t) {
    case Tag::Think: return "<think>";
    case Tag::Fault: return "<Fault>";
    case Tag::Counterfactual: return "<Counterfactual>";
    case Tag::Root: return "<root>";
  }
  return "";
}

std::string_view close_spelling(Tag t) {
  switch (t) {
    case Tag::Think: return "</think>";
    case Tag::Fault: return "</Fault>";
    case Tag::Counterfactual: return "</Counterfactual>";
    case Tag::Root: return "</root>";
  }
  return "";
}

std::string_view to_string(Tag t) {
  switch (t) {
    case Tag::Think: return "think";
    case Tag::Fault: return "Fault";
    case Tag::Counterfactual: return "Counterfactual";
    case Tag::Root: return "root";
  }
  return "";
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::EmptyContent: return "EmptyContent";
    case ViolationKind::BadOrdering: return "BadOrdering";
    case ViolationKind::NestedTags: return "NestedTags";
    case ViolationKind::MissingTag: return "MissingTag";
  }
  return "";
}

const std::string& CotOutput::segment(Tag t) const {
  switch (t) {
    case Tag::Think: return think;
    case Tag::Fault: return fault;
    case Tag::Counterfactual: return counterfactual_text;
    case Tag::Root: return root_text;
  }
  return think;
}

bool CotOutput::segments_equal(const CotOutput& other) const {
  return think == other.think && fault == other.fault &&
         counterfactual_text == other.counterfactual_text && root_text == other.root_text &&
         counterfactual == other.counterfactual && root == other.root;
}

namespace {

std::vector<std::string_view> words(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  if (s.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<ServiceId> parse_service(std::string_view w) {
  if (w.size() < 2 || w[0] != '#') return std::nullopt;
  auto id = parse_int(w.substr(1));
  if (!id || *id < 1 || *id > kMaxServiceId) return std::nullopt;
  return *id;
}

std::vector<RootLabel> parse_root(std::string_view text) {
  std::vector<RootLabel> out;
  const auto ws = words(text);
  for (std::size_t i = 0; i + 1 < ws.size(); ++i) {
    auto id = parse_service(ws[i]);
    if (!id || ws[i + 1].size() != 2 || ws[i + 1][0] != '@') continue;
    auto res = resource_from_letter(ws[i + 1][1]);
    if (!res) continue;
    const RootLabel label{*id, *res};
    if (std::find(out.begin(), out.end(), label) == out.end()) out.push_back(label);
    ++i;
  }
  return out;
}

std::vector<CounterfactualClaim> parse_claims(std::string_view text) {
  std::vector<CounterfactualClaim> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto ws = words(text.substr(pos, nl - pos));
    pos = nl + 1;
    // IF PHRASE #id [amount] THEN OUTCOME
    if (ws.size() < 5 || ws[0] != "IF") continue;
    auto phrase = parse_action_phrase(ws[1]);
    auto id = parse_service(ws[2]);
    if (!phrase || !id) continue;
    std::size_t k = 3;
    int amount = 0;
    if (auto n = parse_int(ws[k])) {
      if (*n <= 0) continue;
      amount = *n;
      ++k;
    }
    if (ws.size() != k + 2 || ws[k] != "THEN") continue;
    auto outcome = parse_outcome(ws[k + 1]);
    if (!outcome) continue;
    out.push_back(CounterfactualClaim{make_action(*phrase, *id, amount), *outcome});
  }
  return out;
}

}  // namespace

CotOutput parse(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  CotOutput out;
  out.raw.assign(tokens.begin(), tokens.end());

  std::array<std::optional<TokenId>, 4> open_id, close_id;
  for (Tag t : kTags) {
    open_id[static_cast<std::size_t>(t)] = vocab.find(open_spelling(t));
    close_id[static_cast<std::size_t>(t)] = vocab.find(close_spelling(t));
  }
  auto is_tag = [&](TokenId id) {
    for (std::size_t i = 0; i < 4; ++i) {
      if (open_id[i] == id || close_id[i] == id) return true;
    }
    return false;
  };

  const std::size_t n = tokens.size();
  std::vector<bool> inside(n, false);
  std::vector<bool> tag_at(n, false);
  for (std::size_t i = 0; i < n; ++i) tag_at[i] = is_tag(tokens[i]);

  for (Tag t : kTags) {
    const auto ti = static_cast<std::size_t>(t);
    std::vector<std::size_t> opens, closes;
    for (std::size_t i = 0; i < n; ++i) {
      if (open_id[ti] && tokens[i] == *open_id[ti]) opens.push_back(i);
      if (close_id[ti] && tokens[i] == *close_id[ti]) closes.push_back(i);
    }
    if (opens.empty() && closes.empty()) {
      out.violations.push_back({ViolationKind::MissingTag, t});
      continue;
    }

    bool bad_order = opens.size() != 1 || closes.size() != 1;
    std::size_t begin = 0, end = 0;  // segment is [begin, end)
    if (!opens.empty()) {
      begin = opens.front() + 1;
      auto c = std::upper_bound(closes.begin(), closes.end(), opens.front());
      if (c != closes.end()) {
        end = *c;
      } else {
        end = begin;
        while (end < n && !tag_at[end]) ++end;
      }
      if (!closes.empty() && closes.front() < opens.front()) bad_order = true;
    } else {
      end = closes.front();
      begin = end;
      while (begin > 0 && !tag_at[begin - 1]) --begin;
    }
    if (bad_order) out.violations.push_back({ViolationKind::BadOrdering, t});

    bool has_content = false, nested = false;
    for (std::size_t i = begin; i < end; ++i) {
      if (tag_at[i]) {
        nested = true;
        continue;
      }
      inside[i] = true;
      if (!vocab.is_whitespace(tokens[i])) has_content = true;
    }
    if (!has_content) out.violations.push_back({ViolationKind::EmptyContent, t});
    if (nested) out.violations.push_back({ViolationKind::NestedTags, t});

    std::vector<TokenId> body;
    for (std::size_t i = begin; i < end; ++i) {
      if (!tag_at[i]) body.push_back(tokens[i]);
    }
    std::string text = trim(vocab.detokenize(body));
    switch (t) {
      case Tag::Think: out.think = std::move(text); break;
      case Tag::Fault: out.fault = std::move(text); break;
      case Tag::Counterfactual:
        out.counterfactual = parse_claims(text);
        out.counterfactual_text = std::move(text);
        break;
      case Tag::Root:
        out.root = parse_root(text);
        out.root_text = std::move(text);
        break;
    }
  }
  out.reasoning_tokens = static_cast<int>(std::count(inside.begin(), inside.end(), true));
  return out;
}

CotOutput parse_text(std::string_view text) {
  const auto& vocab = Vocabulary::standard();
  return parse(vocab.tokenize(text), vocab);
}

FormatChecks count_format_checks(const CotOutput& out) {
  FormatChecks checks;
  std::array<std::array<bool, 3>, 4> failed{};
  for (const auto& v : out.violations) {
    auto& row = failed[static_cast<std::size_t>(v.tag)];
    switch (v.kind) {
      case ViolationKind::EmptyContent: row[0] = true; break;
      case ViolationKind::BadOrdering: row[1] = true; break;
      case ViolationKind::NestedTags: row[2] = true; break;
      case ViolationKind::MissingTag: row = {true, true, true}; break;
    }
  }
  for (const auto& row : failed) {
    checks.invalid += static_cast<int>(std::count(row.begin(), row.end(), true));
  }
  return checks;
}

std::vector<CounterfactualClaim> interpret(const CotOutput& out) {
  std::vector<CounterfactualClaim> kept;
  std::copy_if(out.counterfactual.begin(), out.counterfactual.end(), std::back_inserter(kept),
               [](const CounterfactualClaim& c) { return c.predicted == Outcome::Improved; });
  return kept;
}

int reasoning_length(const CotOutput& out) { return out.reasoning_tokens; }

std::string render_root(std::span<const RootLabel> labels) {
  if (labels.empty()) return "NONE";
  std::string s;
  for (const auto& l : labels) {
    if (!s.empty()) s += ' ';
    s += '#' + std::to_string(l.service) + " @" + profile_letter(l.resource);
  }
  return s;
}

std::string render_claims(std::span<const CounterfactualClaim> claims) {
  if (claims.empty()) return "NONE";
  std::string s;
  for (const auto& c : claims) {
    if (!s.empty()) s += '\n';
    s += "IF " + describe(c.action) + " THEN " + std::string(to_string(c.predicted));
  }
  return s;
}

std::string compose(std::string_view think, std::string_view fault,
                    std::span<const CounterfactualClaim> claims, std::span<const RootLabel> root) {
  std::ostringstream os;
  os << open_spelling(Tag::Think) << ' ' << think << ' ' << close_spelling(Tag::Think) << '\n'
     << open_spelling(Tag::Fault) << ' ' << fault << ' ' << close_spelling(Tag::Fault) << '\n'
     << open_spelling(Tag::Counterfactual) << '\n'
     << render_claims(claims) << '\n'
     << close_spelling(Tag::Counterfactual) << '\n'
     << open_spelling(Tag::Root) << ' ' << render_root(root) << ' ' << close_spelling(Tag::Root);
  return os.str();
}

std::string serialize(const CotOutput& out) {
  std::ostringstream os;
  bool first = true;
  for (Tag t : kTags) {
    if (!first) os << '\n';
    first = false;
    os << open_spelling(t) << '\n' << out.segment(t) << '\n' << close_spelling(t);
  }
  return os.str();
}

std::vector<std::string> scan_sections(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  std::vector<std::string> found;
  for (TokenId id : tokens) {
    if (!vocab.contains(id)) continue;
    const auto& spelling = vocab.token(id);
    if (spelling.size() > 2 && spelling.front() == '[' && spelling.back() == ']') {
      found.push_back(spelling);
    }
  }
  return found;
}

}  // namespace cotctl::cot
