#include "hierfolio/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

#include <fmt/format.h>

#include "hierfolio/synthetic.hpp"

extern char** environ;

namespace hierfolio {
namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
  std::string out = "invalid configuration:";
  for (const auto& i : issues) out += fmt::format("\n  {}: {}", i.path.empty() ? "<root>" : i.path, i.message);
  return out;
}

std::string child(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

// Overlays `user` on `base`, recording keys that the defaults do not know.
void merge(nlohmann::json& base, const nlohmann::json& user, const std::string& path,
           std::vector<ConfigIssue>& issues) {
  if (!user.is_object()) {
    issues.push_back({path, "expected an object"});
    return;
  }
  for (const auto& [key, value] : user.items()) {
    const std::string p = child(path, key);
    if (!base.contains(key)) {
      issues.push_back({p, "unknown key"});
      continue;
    }
    auto& slot = base[key];
    if (slot.is_object()) {
      merge(slot, value, p, issues);
    } else {
      slot = value;
    }
  }
}

void set_path(nlohmann::json& doc, const std::vector<std::string>& keys, nlohmann::json value) {
  nlohmann::json* node = &doc;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->is_object()) *node = nlohmann::json::object();
    node = &(*node)[keys[i]];
  }
  (*node)[keys.back()] = std::move(value);
}

class Reader {
 public:
  Reader(const nlohmann::json& doc, std::vector<ConfigIssue>& issues) : doc_(doc), issues_(issues) {}

  const nlohmann::json& node(const std::string& path) const {
    const nlohmann::json* n = &doc_;
    std::size_t start = 0;
    while (start <= path.size()) {
      const auto dot = path.find('.', start);
      const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      n = &n->at(key);
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    return *n;
  }

  double number(const std::string& path, double fallback) {
    const auto& n = node(path);
    if (!n.is_number()) return fail(path, "expected a number", fallback);
    return n.get<double>();
  }

  double nonneg(const std::string& path, double fallback) {
    const double v = number(path, fallback);
    if (!(v >= 0.0)) return fail(path, "must be nonnegative", fallback);
    return v;
  }

  double positive(const std::string& path, double fallback) {
    const double v = number(path, fallback);
    if (!(v > 0.0)) return fail(path, "must be positive", fallback);
    return v;
  }

  template <class Int>
  Int integer(const std::string& path, Int fallback, Int min_value) {
    const auto& n = node(path);
    if (!n.is_number_integer()) return fail(path, "expected an integer", fallback);
    if (n.is_number_unsigned()) {
      const auto v = n.get<std::uint64_t>();
      if (static_cast<long double>(v) < static_cast<long double>(min_value)) {
        return fail(path, fmt::format("must be at least {}", min_value), fallback);
      }
      return static_cast<Int>(v);
    }
    const auto v = n.get<std::int64_t>();
    if (v < static_cast<std::int64_t>(min_value)) {
      return fail(path, fmt::format("must be at least {}", min_value), fallback);
    }
    return static_cast<Int>(v);
  }

  bool boolean(const std::string& path, bool fallback) {
    const auto& n = node(path);
    if (!n.is_boolean()) return fail(path, "expected true or false", fallback);
    return n.get<bool>();
  }

  std::string string(const std::string& path, std::string fallback = {}) {
    const auto& n = node(path);
    if (!n.is_string()) return fail(path, "expected a string", std::move(fallback));
    return n.get<std::string>();
  }

  std::vector<std::string> strings(const std::string& path) {
    const auto& n = node(path);
    std::vector<std::string> out;
    if (!n.is_array()) {
      fail(path, "expected a list of strings", 0);
      return out;
    }
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (!n[i].is_string()) {
        fail(fmt::format("{}[{}]", path, i), "expected a string", 0);
        continue;
      }
      out.push_back(n[i].get<std::string>());
    }
    return out;
  }

  template <class T>
  T fail(const std::string& path, std::string message, T fallback) {
    issues_.push_back({path, std::move(message)});
    return fallback;
  }

  template <class F>
  auto guarded(const std::string& path, F&& f, decltype(f()) fallback) -> decltype(f()) {
    try {
      return f();
    } catch (const std::exception& e) {
      return fail(path, e.what(), std::move(fallback));
    }
  }

 private:
  const nlohmann::json& doc_;
  std::vector<ConfigIssue>& issues_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <class T>
bool has_duplicates(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<std::uint64_t> parse_seed_range(std::string_view text) {
  auto parse_one = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
      throw DomainError(fmt::format("'{}' is not a nonnegative integer seed", s));
    }
    return v;
  };
  std::vector<std::uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const auto a = parse_one(text.substr(0, dots));
    const auto b = parse_one(text.substr(dots + 2));
    if (a > b) throw DomainError(fmt::format("seed range {}..{} runs backwards", a, b));
    for (auto s = a; s <= b; ++s) out.push_back(s);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    out.push_back(parse_one(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (has_duplicates(out)) throw DomainError("seed list repeats a seed");
  return out;
}

nlohmann::json default_config_document() {
  nlohmann::json hyper = to_json(AgentSpec{}).at("hyperparameters");
  const AggregatorConfig agg;
  return {
      {"data",
       {{"prices", "data/prices.csv"},
        {"fill", "forward"},
        {"sentiment", {{"source", "simulate"}, {"path", ""}, {"seed", 0}, {"lambda", 0.0}}}}},
      {"universe", default_universe()},
      {"windows", {{"train", "2003-01:2017-12"}, {"test", "2018-01:2024-12"}}},
      {"reward", {{"alpha1", 1.0}, {"alpha2", 2.0}, {"alpha3", 0.5}}},
      {"agents",
       {{"algorithms", {"ppo", "sac", "ddpg", "td3"}},
        {"modes", {"metrics", "nlp"}},
        {"episodes", 300},
        {"hyperparameters", std::move(hyper)}}},
      {"seeds", "0..4"},
      {"hierarchy",
       {{"horizon", agg.horizon},
        {"epochs", agg.epochs},
        {"batch_size", agg.batch_size},
        {"learning_rate", agg.learning_rate},
        {"hidden", agg.hidden}}},
      {"features", {{"risk_free", 0.0}}},
      {"backtest", {{"risk_free", 0.0}, {"equal_weight", "rebalanced"}, {"index", "GSPC"}, {"log_scale", true}}},
      {"output_dir", "runs/default"},
      {"global_seed", 42},
      {"threads", 1},
  };
}

EnvMap collect_env_overrides() {
  EnvMap out;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view entry(*e);
    if (!entry.starts_with(kEnvPrefix)) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
  }
  return out;
}

RunConfig parse_config(const nlohmann::json& user_doc, const std::filesystem::path& base_dir,
                       const EnvMap& env) {
  std::vector<ConfigIssue> issues;
  nlohmann::json overlay = user_doc;
  if (!overlay.is_object()) throw ConfigError(std::vector<ConfigIssue>{{"", "config root must be an object"}});

  for (const auto& [name, raw] : env) {
    if (!std::string_view(name).starts_with(kEnvPrefix)) continue;
    std::string rest = name.substr(kEnvPrefix.size());
    std::transform(rest.begin(), rest.end(), rest.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::vector<std::string> keys;
    std::size_t start = 0;
    for (;;) {
      const auto sep = rest.find("__", start);
      keys.push_back(rest.substr(start, sep == std::string::npos ? std::string::npos : sep - start));
      if (sep == std::string::npos) break;
      start = sep + 2;
    }
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    set_path(overlay, keys, std::move(value));
  }

  nlohmann::json doc = default_config_document();
  merge(doc, overlay, "", issues);
  Reader r(doc, issues);
  RunConfig c;

  c.prices = resolve(base_dir, r.string("data.prices"));
  c.fill = r.guarded("data.fill", [&] { return parse_fill_kind(r.string("data.fill", "forward")); }, FillKind::forward);

  const auto source = r.string("data.sentiment.source", "simulate");
  if (source == "simulate") {
    c.sentiment.source = SentimentSource::simulate;
  } else if (source == "file") {
    c.sentiment.source = SentimentSource::file;
    const auto p = r.string("data.sentiment.path");
    if (p.empty()) issues.push_back({"data.sentiment.path", "required when source is file"});
    c.sentiment.path = resolve(base_dir, p);
  } else {
    issues.push_back({"data.sentiment.source", "expected simulate or file"});
  }
  c.sentiment.seed = r.integer<std::uint64_t>("data.sentiment.seed", 0, 0);
  c.sentiment.lambda = r.number("data.sentiment.lambda", 0.0);
  if (!(c.sentiment.lambda >= 0.0 && c.sentiment.lambda <= 1.0)) {
    issues.push_back({"data.sentiment.lambda", "must lie in [0, 1]"});
  }

  c.universe = r.strings("universe");
  if (c.universe.empty()) issues.push_back({"universe", "needs at least one ticker"});
  if (has_duplicates(c.universe)) issues.push_back({"universe", "repeats a ticker"});

  bool windows_ok = true;
  auto window = [&](const std::string& path) {
    try {
      return Window::parse(r.string(path, "2000-01:2000-01"));
    } catch (const std::exception& e) {
      windows_ok = false;
      issues.push_back({path, e.what()});
      return Window{};
    }
  };
  c.train = window("windows.train");
  c.test = window("windows.test");
  if (windows_ok) {
    if (c.train.overlaps(c.test)) {
      issues.push_back({"windows", fmt::format("train {} overlaps test {}", c.train.str(), c.test.str())});
    } else if (!(c.train.end < c.test.start)) {
      issues.push_back({"windows", "train window must precede the test window"});
    }
  }

  c.reward.alpha1 = r.nonneg("reward.alpha1", 1.0);
  c.reward.alpha2 = r.nonneg("reward.alpha2", 2.0);
  c.reward.alpha3 = r.nonneg("reward.alpha3", 0.5);
  if (c.reward.alpha1 == 0.0 && c.reward.alpha2 == 0.0 && c.reward.alpha3 == 0.0) {
    issues.push_back({"reward", "at least one alpha must be positive"});
  }

  for (const auto& name : r.strings("agents.algorithms")) {
    c.algorithms.push_back(r.guarded("agents.algorithms", [&] { return parse_algorithm(name); }, Algorithm::ppo));
  }
  if (c.algorithms.empty()) issues.push_back({"agents.algorithms", "needs at least one algorithm"});
  if (has_duplicates(c.algorithms)) issues.push_back({"agents.algorithms", "repeats an algorithm"});
  for (const auto& name : r.strings("agents.modes")) {
    c.modes.push_back(r.guarded("agents.modes", [&] { return parse_mode(name); }, ObservationMode::metrics));
  }
  if (c.modes.empty()) issues.push_back({"agents.modes", "needs at least one mode"});
  if (has_duplicates(c.modes)) issues.push_back({"agents.modes", "repeats a mode"});
  c.episodes = r.integer<int>("agents.episodes", 300, 0);

  const std::string hp = "agents.hyperparameters";
  auto& h = c.hyper;
  h.hidden = r.integer<std::size_t>(hp + ".hidden", h.hidden, 1);
  h.actor_lr = r.positive(hp + ".actor_lr", h.actor_lr);
  h.critic_lr = r.positive(hp + ".critic_lr", h.critic_lr);
  h.gamma = r.positive(hp + ".gamma", h.gamma);
  h.batch_size = r.integer<std::size_t>(hp + ".batch_size", h.batch_size, 1);
  h.clip_epsilon = r.positive(hp + ".clip_epsilon", h.clip_epsilon);
  h.gae_lambda = r.nonneg(hp + ".gae_lambda", h.gae_lambda);
  h.ppo_epochs = r.integer<int>(hp + ".ppo_epochs", h.ppo_epochs, 1);
  h.init_log_std = r.number(hp + ".init_log_std", h.init_log_std);
  h.entropy_weight = r.nonneg(hp + ".entropy_weight", h.entropy_weight);
  h.exploration_std = r.nonneg(hp + ".exploration_std", h.exploration_std);
  h.tau = r.positive(hp + ".tau", h.tau);
  h.policy_delay = r.integer<int>(hp + ".policy_delay", h.policy_delay, 1);
  h.target_noise = r.nonneg(hp + ".target_noise", h.target_noise);
  h.target_noise_clip = r.nonneg(hp + ".target_noise_clip", h.target_noise_clip);
  h.replay_capacity = r.integer<std::size_t>(hp + ".replay_capacity", h.replay_capacity, 1);
  h.warmup_steps = r.integer<std::size_t>(hp + ".warmup_steps", h.warmup_steps, 0);
  h.update_every = r.integer<std::size_t>(hp + ".update_every", h.update_every, 1);
  for (auto algo : c.algorithms) {
    try {
      AgentSpec{algo, ObservationMode::metrics, 0, 0, h}.validate();
    } catch (const std::exception& e) {
      issues.push_back({hp, fmt::format("{}: {}", to_string(algo), e.what())});
    }
  }

  {
    const auto& seeds = doc.at("seeds");
    if (seeds.is_string()) {
      c.seeds = r.guarded("seeds", [&] { return parse_seed_range(seeds.get<std::string>()); }, {});
    } else if (seeds.is_array()) {
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (!seeds[i].is_number_unsigned()) {
          issues.push_back({fmt::format("seeds[{}]", i), "expected a nonnegative integer"});
        } else {
          c.seeds.push_back(seeds[i].get<std::uint64_t>());
        }
      }
      if (has_duplicates(c.seeds)) issues.push_back({"seeds", "repeats a seed"});
    } else {
      issues.push_back({"seeds", "expected \"a..b\" or a list of integers"});
    }
    if (seeds.is_array() && seeds.empty()) issues.push_back({"seeds", "needs at least one seed"});
  }

  c.hierarchy.horizon = r.integer<std::size_t>("hierarchy.horizon", 3, 1);
  c.hierarchy.epochs = r.integer<int>("hierarchy.epochs", 200, 0);
  c.hierarchy.batch_size = r.integer<std::size_t>("hierarchy.batch_size", 32, 1);
  c.hierarchy.learning_rate = r.positive("hierarchy.learning_rate", 1e-3);
  c.hierarchy.hidden = r.integer<std::size_t>("hierarchy.hidden", 64, 1);

  c.feature_risk_free = r.number("features.risk_free", 0.0);
  c.backtest.risk_free = r.number("backtest.risk_free", 0.0);
  const auto ew = r.string("backtest.equal_weight", "rebalanced");
  if (ew == "buy_and_hold") {
    c.backtest.equal_weight_buy_and_hold = true;
  } else if (ew != "rebalanced") {
    issues.push_back({"backtest.equal_weight", "expected rebalanced or buy_and_hold"});
  }
  c.backtest.index = r.string("backtest.index", "GSPC");
  if (!c.universe.empty() &&
      std::find(c.universe.begin(), c.universe.end(), c.backtest.index) == c.universe.end()) {
    issues.push_back({"backtest.index", fmt::format("{} is not in the universe", c.backtest.index)});
  }
  c.backtest.log_scale = r.boolean("backtest.log_scale", true);

  c.output_dir = resolve(base_dir, r.string("output_dir", "runs/default"));
  c.global_seed = r.integer<std::uint64_t>("global_seed", 42, 0);
  c.threads = r.integer<std::size_t>("threads", 1, 1);

  if (!issues.empty()) throw ConfigError(std::move(issues));
  c.normalized = std::move(doc);
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const EnvMap& env) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot read config {}", path.string()));
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(std::vector<ConfigIssue>{{"", fmt::format("{} is not valid JSON", path.string())}});
  return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path(), env);
}

}  // namespace hierfolio
