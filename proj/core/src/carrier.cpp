#include "cotctl/carrier.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cotctl/error.hpp"

namespace cotctl::encoder {

std::string_view to_string(Effect e) {
  switch (e) {
    case Effect::Improves: return "IMPROVES";
    case Effect::Neutral: return "NEUTRAL";
    case Effect::Degrades: return "DEGRADES";
  }
  return "?";
}

int hamming(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("feature vectors differ in length");
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

namespace {

struct Point {
  std::vector<int> features;
  long weight = 0;
};

long total_cost(const std::vector<Point>& pts, const std::vector<std::size_t>& medoids,
                const std::vector<std::vector<int>>& dist) {
  long cost = 0;
  for (std::size_t p = 0; p < pts.size(); ++p) {
    int best = std::numeric_limits<int>::max();
    for (std::size_t m : medoids) best = std::min(best, dist[p][m]);
    cost += pts[p].weight * best;
  }
  return cost;
}

std::vector<std::size_t> k_medoids(const std::vector<Point>& pts, std::size_t k,
                                   const std::vector<std::vector<int>>& dist) {
  std::vector<std::size_t> medoids;
  std::vector<bool> chosen(pts.size(), false);

  // Greedy build: each new medoid is the point that lowers the cost most.
  while (medoids.size() < k) {
    long best_cost = std::numeric_limits<long>::max();
    std::size_t best = 0;
    for (std::size_t c = 0; c < pts.size(); ++c) {
      if (chosen[c]) continue;
      medoids.push_back(c);
      const long cost = total_cost(pts, medoids, dist);
      medoids.pop_back();
      if (cost < best_cost) {
        best_cost = cost;
        best = c;
      }
    }
    medoids.push_back(best);
    chosen[best] = true;
  }

  // Swap phase: apply the single best strictly-improving swap until none remain.
  long current = total_cost(pts, medoids, dist);
  for (int iter = 0; iter < 200; ++iter) {
    long best_cost = current;
    std::size_t best_slot = 0, best_point = 0;
    bool improved = false;
    for (std::size_t slot = 0; slot < medoids.size(); ++slot) {
      for (std::size_t c = 0; c < pts.size(); ++c) {
        if (chosen[c]) continue;
        auto trial = medoids;
        trial[slot] = c;
        const long cost = total_cost(pts, trial, dist);
        if (cost < best_cost) {
          best_cost = cost;
          best_slot = slot;
          best_point = c;
          improved = true;
        }
      }
    }
    if (!improved) break;
    chosen[medoids[best_slot]] = false;
    chosen[best_point] = true;
    medoids[best_slot] = best_point;
    current = best_cost;
  }
  std::sort(medoids.begin(), medoids.end());
  return medoids;
}

constexpr std::array<ActionPhrase, 6> kPhrases = {ActionPhrase::ScaleOut, ActionPhrase::ScaleIn,
                                                  ActionPhrase::CpuUp,    ActionPhrase::CpuDown,
                                                  ActionPhrase::MemUp,    ActionPhrase::MemDown};

Effect majority(const std::array<int, 3>& counts) {
  const int top = std::max({counts[0], counts[1], counts[2]});
  const int winners = (counts[0] == top) + (counts[1] == top) + (counts[2] == top);
  if (winners > 1) return Effect::Neutral;
  if (counts[0] == top) return Effect::Improves;
  if (counts[2] == top) return Effect::Degrades;
  return Effect::Neutral;
}

}  // namespace

Carrier build_carrier(std::span<const HistoryEntry> history, int k) {
  if (history.empty()) throw std::invalid_argument("carrier history must not be empty");
  if (k < 1) throw std::invalid_argument("carrier cluster count must be >= 1");

  Carrier carrier;
  for (const auto& s : history.front().state.services) carrier.services.push_back(s.id);

  std::vector<Point> pts;
  std::map<std::vector<int>, std::size_t> index;
  std::vector<std::size_t> entry_point(history.size());
  for (std::size_t i = 0; i < history.size(); ++i) {
    auto f = history[i].state.features();
    auto [it, inserted] = index.emplace(f, pts.size());
    if (inserted) pts.push_back(Point{std::move(f), 0});
    pts[it->second].weight += 1;
    entry_point[i] = it->second;
  }

  std::vector<std::vector<int>> dist(pts.size(), std::vector<int>(pts.size(), 0));
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      dist[a][b] = dist[b][a] = hamming(pts[a].features, pts[b].features);
    }
  }

  const std::size_t clusters = std::min(static_cast<std::size_t>(k), pts.size());
  const auto medoids = k_medoids(pts, clusters, dist);

  std::vector<std::size_t> point_cluster(pts.size());
  for (std::size_t p = 0; p < pts.size(); ++p) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < medoids.size(); ++m) {
      if (dist[p][medoids[m]] < dist[p][medoids[best]]) best = m;
    }
    point_cluster[p] = best;
  }

  carrier.clusters.resize(medoids.size());
  std::vector<std::map<ActionPhrase, std::array<int, 3>>> tallies(medoids.size());
  carrier.assignment.resize(history.size());
  for (std::size_t i = 0; i < history.size(); ++i) {
    const std::size_t c = point_cluster[entry_point[i]];
    carrier.assignment[i] = static_cast<int>(c);
    carrier.clusters[c].members += 1;
    if (auto phrase = phrase_of(history[i].action)) {
      tallies[c][*phrase][static_cast<std::size_t>(history[i].outcome)] += 1;
    }
  }
  for (std::size_t c = 0; c < medoids.size(); ++c) {
    carrier.clusters[c].centroid = pts[medoids[c]].features;
    for (ActionPhrase phrase : kPhrases) {
      auto it = tallies[c].find(phrase);
      if (it == tallies[c].end()) continue;
      const auto& counts = it->second;
      carrier.clusters[c].effects.push_back(
          EffectStat{phrase, majority(counts), counts[0] + counts[1] + counts[2]});
    }
  }
  return carrier;
}

std::size_t Carrier::nearest(std::span<const int> features) const {
  if (clusters.empty()) throw std::logic_error("empty carrier has no clusters");
  std::size_t best = 0;
  for (std::size_t c = 1; c < clusters.size(); ++c) {
    if (hamming(features, clusters[c].centroid) < hamming(features, clusters[best].centroid)) {
      best = c;
    }
  }
  return best;
}

std::string Carrier::to_text() const {
  if (clusters.empty()) return "NONE";
  std::ostringstream os;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& cl = clusters[c];
    if (c > 0) os << '\n';
    os << "cluster " << (c + 1) << " support " << cl.members << " arrival "
       << to_string(static_cast<Level>(cl.centroid.at(0)));
    for (std::size_t s = 0; s < services.size(); ++s) {
      os << " #" << services[s] << ' ' << to_string(static_cast<Level>(cl.centroid.at(1 + 3 * s)))
         << ' ' << to_string(static_cast<Level>(cl.centroid.at(2 + 3 * s))) << ' '
         << to_string(static_cast<Level>(cl.centroid.at(3 + 3 * s)));
    }
    for (const auto& e : cl.effects) {
      os << "\n  " << cotctl::to_string(e.phrase) << ' ' << to_string(e.effect) << " support "
         << e.support;
    }
  }
  return os.str();
}

using nlohmann::json;

std::string carrier_to_json(const Carrier& carrier) {
  json doc;
  doc["format"] = "cotctl-carrier";
  doc["version"] = 1;
  doc["services"] = carrier.services;
  doc["assignment"] = carrier.assignment;
  doc["clusters"] = json::array();
  for (const auto& cl : carrier.clusters) {
    json jc = {{"centroid", cl.centroid}, {"members", cl.members}, {"effects", json::array()}};
    for (const auto& e : cl.effects) {
      jc["effects"].push_back({{"action", std::string(cotctl::to_string(e.phrase))},
                               {"effect", std::string(to_string(e.effect))},
                               {"support", e.support}});
    }
    doc["clusters"].push_back(std::move(jc));
  }
  return doc.dump(2);
}

Carrier carrier_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.value("format", std::string()) != "cotctl-carrier" || doc.value("version", 0) != 1) {
      throw ConfigError("not a version-1 carrier document");
    }
    Carrier carrier;
    carrier.services = doc.at("services").get<std::vector<ServiceId>>();
    carrier.assignment = doc.value("assignment", std::vector<int>{});
    for (const auto& jc : doc.at("clusters")) {
      CarrierCluster cl;
      cl.centroid = jc.at("centroid").get<std::vector<int>>();
      cl.members = jc.at("members").get<int>();
      if (cl.centroid.size() != 1 + 3 * carrier.services.size()) {
        throw ConfigError("carrier centroid length does not match its service layout");
      }
      for (const auto& je : jc.at("effects")) {
        const auto phrase = parse_action_phrase(je.at("action").get<std::string>());
        const std::string effect = je.at("effect").get<std::string>();
        if (!phrase) throw ConfigError("carrier names an unknown action");
        Effect e = Effect::Neutral;
        if (effect == "IMPROVES") {
          e = Effect::Improves;
        } else if (effect == "DEGRADES") {
          e = Effect::Degrades;
        } else if (effect != "NEUTRAL") {
          throw ConfigError("carrier names an unknown effect " + effect);
        }
        const int support = je.at("support").get<int>();
        if (support < 1) throw ConfigError("carrier effect support must be >= 1");
        cl.effects.push_back(EffectStat{*phrase, e, support});
      }
      carrier.clusters.push_back(std::move(cl));
    }
    return carrier;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed carrier: ") + e.what());
  }
}

void save_carrier(const Carrier& carrier, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write carrier " + path.string());
  out << carrier_to_json(carrier) << '\n';
}

Carrier load_carrier(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read carrier " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return carrier_from_json(buf.str());
}

}  // namespace cotctl::encoder
