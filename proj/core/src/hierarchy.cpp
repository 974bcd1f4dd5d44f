#include "hierfolio/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "hierfolio/errors.hpp"
#include "hierfolio/hashing.hpp"

namespace hierfolio {

AggregatorLevel parse_level(std::string_view name) {
  if (name == "meta_metrics") return AggregatorLevel::meta_metrics;
  if (name == "meta_nlp") return AggregatorLevel::meta_nlp;
  if (name == "super") return AggregatorLevel::super;
  throw DomainError(fmt::format("unknown aggregator level '{}'", name));
}

std::string_view to_string(AggregatorLevel level) {
  switch (level) {
    case AggregatorLevel::meta_metrics: return "meta_metrics";
    case AggregatorLevel::meta_nlp: return "meta_nlp";
    case AggregatorLevel::super: return "super";
  }
  return "super";
}

AggregatorLevel meta_level_for(ObservationMode mode) {
  return mode == ObservationMode::metrics ? AggregatorLevel::meta_metrics : AggregatorLevel::meta_nlp;
}

Contributor policy_contributor(const Policy& policy, const MarketData& market) {
  const Policy* p = &policy;
  const MarketData* m = &market;
  return {{policy.spec.id(), policy.checksum()}, [p, m](std::size_t k) {
            if (k == 0) throw DomainError("month 0 has no preceding observation");
            return p->act(m->observation(p->spec.mode, k - 1));
          }};
}

Vec DecisionPanel::concatenated() const {
  const std::size_t n = n_assets();
  Vec x(static_cast<Eigen::Index>(weights.size() * n));
  for (std::size_t c = 0; c < weights.size(); ++c) {
    for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(c * n + i)) = weights[c][i];
  }
  return x;
}

DecisionPanel build_panel(std::span<const Contributor> contributors, const MarketData& market,
                          std::size_t month_index) {
  if (contributors.empty()) throw DomainError("decision panel needs at least one contributor");
  if (month_index >= market.n_months()) throw DomainError("panel month outside the market data");
  DecisionPanel panel;
  panel.month_index = month_index;
  panel.month = market.month(month_index);
  for (const auto& c : contributors) {
    PortfolioWeights w;
    try {
      w = c.act(month_index);
    } catch (const std::exception& e) {
      throw DomainError(fmt::format("contributor {} failed at {}: {}", c.ref.id, panel.month.str(), e.what()));
    }
    if (w.size() != market.n_assets()) {
      throw DomainError(fmt::format("contributor {} proposed {} weights for {} assets", c.ref.id, w.size(),
                                    market.n_assets()));
    }
    panel.contributors.push_back(c.ref.id);
    panel.weights.push_back(std::move(w));
  }
  return panel;
}

std::vector<DecisionPanel> build_panels(std::span<const Contributor> contributors,
                                        const MarketData& market, const DecisionRange& range) {
  std::vector<DecisionPanel> out;
  out.reserve(range.size());
  for (std::size_t k = range.first; k <= range.last; ++k) out.push_back(build_panel(contributors, market, k));
  return out;
}

std::vector<LookaheadSample> collect_imitation_dataset(std::span<const DecisionPanel> panels,
                                                       const MarketData& market,
                                                       const RewardParams& params,
                                                       std::size_t horizon,
                                                       std::size_t last_month_index) {
  if (horizon < 1) throw DomainError("lookahead horizon must be at least 1");
  params.validate();
  std::vector<LookaheadSample> out;
  for (const auto& panel : panels) {
    if (panel.weights.empty()) throw DomainError(fmt::format("empty decision panel at {}", panel.month.str()));
    const std::size_t t = panel.month_index;
    if (t + horizon - 1 > last_month_index || t + horizon - 1 >= market.n_months()) continue;
    std::size_t best = 0;
    double best_reward = 0.0;
    for (std::size_t c = 0; c < panel.weights.size(); ++c) {
      double total = 0.0;
      for (std::size_t j = t; j < t + horizon; ++j) {
        total += reward_of(params, month_outcome(market.slices[j], panel.weights[c].values()));
      }
      if (c == 0 || total > best_reward) {
        best = c;
        best_reward = total;
      }
    }
    LookaheadSample s;
    s.month_index = t;
    s.x = panel.concatenated();
    s.w_star = panel.weights[best].vector();
    s.chosen = panel.contributors[best];
    s.chosen_index = best;
    s.lookahead_reward = best_reward;
    out.push_back(std::move(s));
  }
  return out;
}

void AggregatorConfig::validate() const {
  if (epochs < 0) throw DomainError("aggregator epochs must be nonnegative");
  if (batch_size == 0) throw DomainError("aggregator batch size must be positive");
  if (horizon == 0) throw DomainError("lookahead horizon must be at least 1");
  if (!(learning_rate > 0.0)) throw DomainError("aggregator learning rate must be positive");
  if (hidden == 0) throw DomainError("aggregator hidden size must be positive");
}

nlohmann::json to_json(const AggregatorConfig& cfg) {
  return {{"epochs", cfg.epochs},         {"batch_size", cfg.batch_size}, {"horizon", cfg.horizon},
          {"learning_rate", cfg.learning_rate}, {"hidden", cfg.hidden}, {"seed", cfg.seed}};
}

AggregatorConfig aggregator_config_from_json(const nlohmann::json& j) {
  AggregatorConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.horizon = j.at("horizon").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

PortfolioWeights AggregatorModel::act(const Vec& x) const {
  if (static_cast<std::size_t>(x.size()) != net.input_dim()) {
    throw DomainError(fmt::format("{} expects input length {}, got {}", id(), net.input_dim(), x.size()));
  }
  const Vec p = forward(net, x);
  return project_to_simplex({p.data(), static_cast<std::size_t>(p.size())});
}

PortfolioWeights AggregatorModel::act(const DecisionPanel& panel) const {
  if (panel.contributors.size() != manifest.size()) {
    throw DomainError(fmt::format("{} level: panel has {} contributors, manifest lists {}", id(),
                                  panel.contributors.size(), manifest.size()));
  }
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (panel.contributors[i] != manifest[i].id) {
      throw DomainError(fmt::format("{} level: panel slot {} is {}, manifest expects {}", id(), i,
                                    panel.contributors[i], manifest[i].id));
    }
  }
  if (panel.n_assets() != n_assets) {
    throw DomainError(fmt::format("{} level: panel has {} assets, model has {}", id(), panel.n_assets(), n_assets));
  }
  return act(panel.concatenated());
}

void AggregatorModel::check_manifest(std::span<const ContributorRef> refs) const {
  if (refs.size() != manifest.size()) {
    throw DomainError(fmt::format("{} level: {} contributors supplied, manifest lists {}", id(), refs.size(),
                                  manifest.size()));
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].id != manifest[i].id) {
      throw DomainError(fmt::format("{} level: contributor slot {} is {}, manifest expects {}", id(), i,
                                    refs[i].id, manifest[i].id));
    }
    if (refs[i].checksum != manifest[i].checksum) {
      throw DomainError(fmt::format("{} level: contributor {} checksum differs from manifest", id(), refs[i].id));
    }
  }
}

namespace {

nlohmann::json model_body(const AggregatorModel& m) {
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& r : m.manifest) manifest.push_back({{"id", r.id}, {"checksum", r.checksum}});
  return {
      {"format", "hierfolio.aggregator"},
      {"version", 1},
      {"level", to_string(m.level)},
      {"n_assets", m.n_assets},
      {"manifest", std::move(manifest)},
      {"config", to_json(m.config)},
      {"training_window", m.training_window},
      {"final_loss", m.final_loss},
      {"net", to_json(m.net)},
  };
}

void fill_uniform(std::span<double> block, double bound, Rng& rng) {
  for (double& v : block) v = rng.uniform(-bound, bound);
}

}  // namespace

std::string AggregatorModel::checksum() const { return sha256_hex(model_body(*this).dump()); }

AggregatorModel init_aggregator(AggregatorLevel level, std::vector<ContributorRef> manifest,
                                std::size_t n_assets, const AggregatorConfig& config) {
  config.validate();
  if (manifest.empty()) throw DomainError(fmt::format("{} level needs at least one contributor", to_string(level)));
  if (n_assets == 0) throw DomainError("aggregator needs at least one asset");
  const std::size_t in = manifest.size() * n_assets;
  const std::size_t h = config.hidden;
  AggregatorModel m;
  m.level = level;
  m.n_assets = n_assets;
  m.config = config;
  m.net = Mlp3::zeros(in, h, h, n_assets, OutputHead::softmax);

  const double b1 = 1.0 / std::sqrt(static_cast<double>(in));
  for (std::size_t c = 0; c < manifest.size(); ++c) {
    Rng rng(derive_seed(config.seed, "w1/" + manifest[c].id));
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t i = 0; i < n_assets; ++i) {
        m.net.w1(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c * n_assets + i)) = rng.uniform(-b1, b1);
      }
    }
  }
  Rng body(derive_seed(config.seed, "body"));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(h));
  fill_uniform(detail::flat(m.net.b1), b1, body);
  fill_uniform(detail::flat(m.net.w2), b2, body);
  fill_uniform(detail::flat(m.net.b2), b2, body);
  fill_uniform(detail::flat(m.net.w3), b2, body);
  fill_uniform(detail::flat(m.net.b3), b2, body);
  m.manifest = std::move(manifest);
  return m;
}

AggregatorModel train_aggregator(std::span<const LookaheadSample> samples, AggregatorLevel level,
                                 std::vector<ContributorRef> manifest, std::size_t n_assets,
                                 const AggregatorConfig& config, AggregatorTrainLog* log) {
  if (samples.empty()) throw DomainError(fmt::format("{} level: no imitation samples", to_string(level)));
  AggregatorModel m = init_aggregator(level, std::move(manifest), n_assets, config);
  const auto d = static_cast<Eigen::Index>(m.net.input_dim());
  const auto k = static_cast<Eigen::Index>(n_assets);
  Mat inputs(static_cast<Eigen::Index>(samples.size()), d);
  Mat targets(static_cast<Eigen::Index>(samples.size()), k);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& smp = samples[s];
    if (smp.x.size() != d || static_cast<Eigen::Index>(smp.w_star.size()) != k) {
      throw DomainError(fmt::format("{} level: sample for month index {} has inconsistent dimensions",
                                    to_string(level), smp.month_index));
    }
    inputs.row(static_cast<Eigen::Index>(s)) = smp.x.transpose();
    for (Eigen::Index i = 0; i < k; ++i) targets(static_cast<Eigen::Index>(s), i) = smp.w_star[static_cast<std::size_t>(i)];
  }

  OptimState opt = OptimState::for_net(m.net, AdamConfig{config.learning_rate});
  Rng rng(derive_seed(config.seed, "shuffle"));
  std::vector<Eigen::Index> order(samples.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto bs = static_cast<Eigen::Index>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += bs) {
      const Eigen::Index len = std::min(bs, n - start);
      TrainBatch batch{Mat(len, d), Mat(len, k)};
      for (Eigen::Index r = 0; r < len; ++r) {
        batch.inputs.row(r) = inputs.row(order[static_cast<std::size_t>(start + r)]);
        batch.targets.row(r) = targets.row(order[static_cast<std::size_t>(start + r)]);
      }
      const double loss = mse_loss(forward_batch(m.net, batch.inputs), batch.targets);
      if (!std::isfinite(loss)) {
        throw DivergenceError(fmt::format("{} level: non-finite loss at epoch {}", to_string(level), epoch));
      }
      optim_step(m.net, backward(m.net, batch), opt);
      loss_sum += loss;
      ++batches;
    }
    if (log != nullptr) log->epoch_loss.push_back(loss_sum / batches);
  }
  m.final_loss = mse_loss(forward_batch(m.net, inputs), targets);
  if (!std::isfinite(m.final_loss)) throw DivergenceError(fmt::format("{} level: non-finite final loss", to_string(level)));
  return m;
}

Contributor aggregator_contributor(const AggregatorModel& model, std::vector<Contributor> inputs,
                                   const MarketData& market) {
  std::vector<ContributorRef> refs;
  for (const auto& c : inputs) refs.push_back(c.ref);
  model.check_manifest(refs);
  const AggregatorModel* m = &model;
  const MarketData* mk = &market;
  return {{model.id(), model.checksum()}, [m, mk, inputs = std::move(inputs)](std::size_t k) {
            return m->act(build_panel(inputs, *mk, k));
          }};
}

nlohmann::json to_json(const AggregatorModel& model) {
  auto j = model_body(model);
  j["checksum"] = model.checksum();
  return j;
}

AggregatorModel aggregator_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "hierfolio.aggregator" || j.value("version", 0) != 1) {
    throw DomainError("not a version-1 hierfolio.aggregator checkpoint");
  }
  AggregatorModel m;
  m.level = parse_level(j.at("level").get<std::string>());
  m.n_assets = j.at("n_assets").get<std::size_t>();
  for (const auto& r : j.at("manifest")) {
    m.manifest.push_back({r.at("id").get<std::string>(), r.at("checksum").get<std::string>()});
  }
  m.config = aggregator_config_from_json(j.at("config"));
  m.training_window = j.at("training_window").get<std::string>();
  m.final_loss = j.at("final_loss").get<double>();
  m.net = mlp3_from_json(j.at("net"));
  if (m.net.input_dim() != m.manifest.size() * m.n_assets || m.net.output_dim() != m.n_assets) {
    throw DomainError(fmt::format("{} checkpoint: network shape disagrees with its manifest", m.id()));
  }
  if (m.checksum() != j.at("checksum").get<std::string>()) {
    throw DomainError(fmt::format("{} checkpoint failed its checksum", m.id()));
  }
  return m;
}

void save_aggregator(const std::filesystem::path& path, const AggregatorModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << to_json(model).dump() << '\n';
}

AggregatorModel load_aggregator(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  return aggregator_from_json(nlohmann::json::parse(in));
}

PortfolioWeights hierarchy_act(const Hierarchy& h, const MarketData& market, std::size_t month_index) {
  if (h.super.level != AggregatorLevel::super) {
    throw DomainError(fmt::format("super level: top model is {}", to_string(h.super.level)));
  }
  std::vector<Contributor> meta_contributors;
  for (const auto& meta : h.metas) {
    if (meta.level == AggregatorLevel::super) throw DomainError("meta level: a super model was supplied as a meta");
    if (meta.n_assets != market.n_assets()) {
      throw DomainError(fmt::format("{} level: model has {} assets, market has {}", meta.id(), meta.n_assets,
                                    market.n_assets()));
    }
    std::vector<Contributor> base;
    for (const auto& ref : meta.manifest) {
      const auto it = std::find_if(h.bases.begin(), h.bases.end(),
                                   [&](const Policy& p) { return p.spec.id() == ref.id; });
      if (it == h.bases.end()) {
        throw DomainError(fmt::format("{} level: base policy {} is missing", meta.id(), ref.id));
      }
      base.push_back(policy_contributor(*it, market));
    }
    meta_contributors.push_back(aggregator_contributor(meta, std::move(base), market));
  }
  if (h.super.n_assets != market.n_assets()) {
    throw DomainError(fmt::format("super level: model has {} assets, market has {}", h.super.n_assets,
                                  market.n_assets()));
  }
  const Contributor top = aggregator_contributor(h.super, std::move(meta_contributors), market);
  return top.act(month_index);
}

}  // namespace hierfolio
