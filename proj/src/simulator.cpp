#include "divrec/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "divrec/error.hpp"
#include "divrec/simd/vec_ops.hpp"

namespace divrec::sim {
namespace {

using nlohmann::ordered_json;

constexpr std::string_view kLatentKey = "latent";

Vector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  double n = 0.0;
  while (n == 0.0) {
    for (double& x : v) x = normal(rng);
    n = simd::norm(v);
  }
  simd::scale(1.0 / n, v);
  return v;
}

std::string padded_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%05zu", prefix, i);
  return buf;
}

struct User {
  UserSession session;
  double ideal_distance;
};

struct World {
  Catalog catalog;
  std::vector<Vector> tastes;
  std::vector<double> ideals;
};

World make_world(const PopulationSpec& pop) {
  std::mt19937_64 rng(pop.seed);
  std::vector<Item> items;
  items.reserve(pop.n_items);
  for (std::size_t i = 0; i < pop.n_items; ++i) {
    Item item;
    item.id = padded_id('i', i);
    item.title = item.id;
    item.genre_id = "synthetic";
    item.features.emplace(std::string(kLatentKey), random_unit(rng, pop.latent_dim));
    items.push_back(std::move(item));
  }
  DistanceConfig config;
  config.criteria.push_back(
      {"latent", CriterionKind::kVectorCosine, 1.0, std::string(kLatentKey)});
  auto load = Catalog::build(std::move(items), std::move(config));
  if (!load.ok()) throw Error(ErrorCode::kValidation, load.report.to_string());

  World world{std::move(*load.catalog), {}, {}};
  std::uniform_real_distribution<double> novelty(pop.novelty_lo, pop.novelty_hi);
  for (std::size_t u = 0; u < pop.n_users; ++u) {
    world.tastes.push_back(random_unit(rng, pop.latent_dim));
    world.ideals.push_back(novelty(rng));
  }
  return world;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

}  // namespace

std::string_view policy_name(Policy policy) {
  switch (policy) {
    case Policy::kSimilar: return "similar";
    case Policy::kDiverse: return "diverse";
    case Policy::kDiverseEquity: return "diverse+equity";
  }
  return "unknown";
}

Policy parse_policy(std::string_view name) {
  for (Policy p : kAllPolicies) {
    if (policy_name(p) == name) return p;
  }
  throw Error(ErrorCode::kDomain, "unknown policy '" + std::string(name) + "'");
}

void PopulationSpec::validate() const {
  auto bad = [](const std::string& why) { return Error(ErrorCode::kPrecondition, why); };
  if (n_users == 0 || n_items == 0 || latent_dim == 0 || k == 0) {
    throw bad("users, items, latent dimension and k must be positive");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) throw bad("tau must be > 0");
  if (!(novelty_lo >= 0.0 && novelty_lo <= novelty_hi && novelty_hi <= 1.0)) {
    throw bad("novelty range must satisfy 0 <= lo <= hi <= 1");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw bad("lambda must be >= 0");
}

MetricsSeries run_simulation(const PopulationSpec& pop, Policy policy, std::size_t rounds) {
  if (rounds == 0) throw Error(ErrorCode::kPrecondition, "rounds must be >= 1");
  pop.validate();

  const World world = make_world(pop);
  std::vector<User> users;
  users.reserve(pop.n_users);
  for (std::size_t u = 0; u < pop.n_users; ++u) {
    auto created = create_session(SeedProfile::from_target(world.tastes[u]), pop.session,
                                  world.catalog, std::nullopt, padded_id('u', u), 0);
    users.push_back({std::move(created.session), world.ideals[u]});
  }

  RecommendOptions options;
  options.k = pop.k;
  options.mode = policy == Policy::kSimilar ? kernel::RankingMode::kSimilar
                                            : kernel::RankingMode::kDiverse;
  options.lambda = policy == Policy::kDiverseEquity ? pop.lambda : 0.0;

  // Separate stream from world generation, identical for every policy.
  std::mt19937_64 rng(pop.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  ExposureLedger ledger = ExposureLedger::for_catalog(world.catalog);
  const double two_tau2 = 2.0 * pop.tau * pop.tau;

  MetricsSeries series;
  series.reserve(rounds);
  for (std::size_t round = 1; round <= rounds; ++round) {
    RoundMetrics m;
    m.round = round;
    double accepted_distance = 0.0;
    std::size_t correct_labels = 0;
    for (auto& user : users) {
      UserSession& session = user.session;
      options.params = session.params();
      const auto recs = recommend(world.catalog, session.profile(), options, ledger);
      const auto stamp = static_cast<std::int64_t>(round);
      session.note_recommendations(recs, stamp);
      const double own_sigma = user.ideal_distance / std::numbers::sqrt3;
      for (const auto& r : recs) {
        ++m.offered;
        correct_labels += r.bold == (r.distance >= own_sigma) ? 1 : 0;
        const double gap = r.distance - user.ideal_distance;
        const bool accept = coin(rng) < std::exp(-gap * gap / two_tau2);
        if (accept) {
          ++m.accepted;
          accepted_distance += r.distance;
        }
        session.apply_feedback(r.item_id, accept ? Verdict::kAccept : Verdict::kReject, stamp);
      }
    }
    m.gini = gini(ledger);
    m.coverage = coverage(ledger, world.catalog);
    if (m.offered > 0) {
      m.acceptance_rate = static_cast<double>(m.accepted) / static_cast<double>(m.offered);
      m.trust = static_cast<double>(correct_labels) / static_cast<double>(m.offered);
    }
    if (m.accepted > 0) m.mean_distance = accepted_distance / static_cast<double>(m.accepted);
    series.push_back(m);
  }
  return series;
}

void write_metrics(std::ostream& out, const MetricsSeries& series) {
  for (const auto& m : series) {
    ordered_json rec{{"round", m.round},
                     {"gini", m.gini},
                     {"coverage", m.coverage},
                     {"acceptance_rate", m.acceptance_rate},
                     {"mean_distance", nullptr}};
    if (m.mean_distance) rec["mean_distance"] = *m.mean_distance;
    out << rec.dump() << '\n';
  }
}

ComparisonReport evaluate_policies(const PopulationSpec& pop, std::size_t rounds) {
  ComparisonReport report{pop, rounds, {}};
  for (Policy p : kAllPolicies) {
    PolicySummary s{p, 0.0, 0.0, 0.0, 0.0, run_simulation(pop, p, rounds)};
    std::size_t offered = 0;
    std::size_t accepted = 0;
    double trusted = 0.0;
    for (const auto& m : s.series) {
      offered += m.offered;
      accepted += m.accepted;
      trusted += m.trust * static_cast<double>(m.offered);
    }
    s.diversity = s.series.back().coverage;
    s.equity = s.series.back().gini;
    if (offered > 0) {
      s.usefulness = static_cast<double>(accepted) / static_cast<double>(offered);
      s.trust = trusted / static_cast<double>(offered);
    }
    report.policies.push_back(std::move(s));
  }
  return report;
}

std::string report_json(const ComparisonReport& report) {
  ordered_json doc;
  doc["seed"] = report.population.seed;
  doc["users"] = report.population.n_users;
  doc["items"] = report.population.n_items;
  doc["rounds"] = report.rounds;
  doc["columns"] = ordered_json::array();
  for (auto c : kReportColumns) doc["columns"].push_back(c);
  doc["policies"] = ordered_json::array();
  for (const auto& p : report.policies) {
    doc["policies"].push_back(ordered_json{{"policy", policy_name(p.policy)},
                                           {"Diversity", p.diversity},
                                           {"Equity", p.equity},
                                           {"Trust", p.trust},
                                           {"Usefulness", p.usefulness}});
  }
  return doc.dump(2) + "\n";
}

std::string report_table(const ComparisonReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %10s %10s %10s %10s\n", "policy", "Diversity",
                "Equity", "Trust", "Usefulness");
  out << line;
  for (const auto& p : report.policies) {
    std::snprintf(line, sizeof line, "%-16s %10s %10s %10s %10s\n",
                  std::string(policy_name(p.policy)).c_str(), format_double(p.diversity).c_str(),
                  format_double(p.equity).c_str(), format_double(p.trust).c_str(),
                  format_double(p.usefulness).c_str());
    out << line;
  }
  out << "Diversity = catalog coverage, Equity = exposure gini (lower is fairer),\n"
         "Trust = bold labels matching the user's novelty, Usefulness = acceptance rate\n";
  return out.str();
}

}  // namespace divrec::sim
