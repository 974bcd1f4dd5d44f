#include "hierfolio/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "hierfolio/agents.hpp"
#include "hierfolio/errors.hpp"
#include "hierfolio/hashing.hpp"
#include "hierfolio/hierarchy.hpp"
#include "hierfolio/sentiment.hpp"

namespace hierfolio {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPricesClean = "prices_clean.csv";
constexpr const char* kSentiment = "sentiment.csv";
constexpr const char* kBattery = "policies/battery.json";
constexpr const char* kBacktestIndex = "backtests/index.json";

std::string meta_stage(ObservationMode mode) { return fmt::format("train-meta:{}", to_string(mode)); }

std::string aggregator_path(AggregatorLevel level) { return fmt::format("aggregators/{}.json", to_string(level)); }

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("failed writing {}", path.string()));
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  return nlohmann::json::parse(in);
}

struct BatteryEntry {
  std::string id;
  Algorithm algorithm;
  ObservationMode mode;
  std::string path;
  std::string checksum;
  double train_roi = 0.0;
  std::string error;
  bool ok() const { return error.empty(); }
};

std::vector<BatteryEntry> load_battery(const fs::path& dir) {
  const auto j = read_json(dir / kBattery);
  if (j.value("format", "") != "hierfolio.battery") throw DomainError("policies/battery.json has an unknown format");
  std::vector<BatteryEntry> out;
  for (const auto& c : j.at("cells")) {
    BatteryEntry e;
    e.id = c.at("id").get<std::string>();
    e.algorithm = parse_algorithm(c.at("algorithm").get<std::string>());
    e.mode = parse_mode(c.at("mode").get<std::string>());
    e.error = c.value("error", "");
    if (e.ok()) {
      e.path = c.at("path").get<std::string>();
      e.checksum = c.at("checksum").get<std::string>();
      e.train_roi = c.at("train_roi").get<double>();
    }
    out.push_back(std::move(e));
  }
  return out;
}

// Every successfully trained base policy, in battery order.
std::vector<Policy> load_bases(const fs::path& dir, const std::vector<BatteryEntry>& battery) {
  std::vector<Policy> out;
  for (const auto& e : battery) {
    if (!e.ok()) continue;
    Policy p = load_policy(dir / e.path);
    if (p.checksum() != e.checksum) throw DomainError(fmt::format("policy {} differs from the battery record", e.id));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Contributor> base_contributors(const std::vector<Policy>& bases, ObservationMode mode,
                                           const MarketData& market) {
  std::vector<Contributor> out;
  for (const auto& p : bases) {
    if (p.spec.mode == mode) out.push_back(policy_contributor(p, market));
  }
  return out;
}

std::vector<Contributor> manifest_contributors(const AggregatorModel& meta, const std::vector<Policy>& bases,
                                               const MarketData& market) {
  std::vector<Contributor> out;
  for (const auto& ref : meta.manifest) {
    const auto it = std::find_if(bases.begin(), bases.end(), [&](const Policy& p) { return p.spec.id() == ref.id; });
    if (it == bases.end()) throw DomainError(fmt::format("{} level: base policy {} is missing", meta.id(), ref.id));
    out.push_back(policy_contributor(*it, market));
  }
  return out;
}

std::vector<ContributorRef> refs_of(const std::vector<Contributor>& cs) {
  std::vector<ContributorRef> out;
  for (const auto& c : cs) out.push_back(c.ref);
  return out;
}

AggregatorModel train_level(AggregatorLevel level, const std::vector<Contributor>& contributors,
                            const MarketData& market, const RunConfig& cfg) {
  if (contributors.empty()) throw DomainError(fmt::format("{} level has no contributors", to_string(level)));
  const auto range = decision_range(market, cfg.train);
  const auto panels = build_panels(contributors, market, range);
  const auto samples = collect_imitation_dataset(panels, market, cfg.reward, cfg.hierarchy.horizon, range.last);
  AggregatorConfig agg = cfg.hierarchy;
  agg.seed = derive_seed(cfg.global_seed, fmt::format("aggregator/{}", to_string(level)));
  auto model = train_aggregator(samples, level, refs_of(contributors), market.n_assets(), agg);
  model.training_window = cfg.train.str();
  return model;
}

nlohmann::json report_fingerprint(const RunConfig& cfg) {
  return {{"alpha", {cfg.reward.alpha1, cfg.reward.alpha2, cfg.reward.alpha3}},
          {"seeds", cfg.seeds},
          {"horizon", cfg.hierarchy.horizon},
          {"global_seed", cfg.global_seed}};
}

}  // namespace

const StageRecord* Manifest::find(const std::string& stage) const {
  for (const auto& s : stages) {
    if (s.name == stage) return &s;
  }
  return nullptr;
}

void Manifest::put(StageRecord record, const std::vector<std::string>& order) {
  std::erase_if(stages, [&](const StageRecord& s) { return s.name == record.name; });
  stages.push_back(std::move(record));
  auto rank = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(order.begin(), order.end(), name) - order.begin());
  };
  std::stable_sort(stages.begin(), stages.end(),
                   [&](const StageRecord& a, const StageRecord& b) { return rank(a.name) < rank(b.name); });
}

std::vector<ArtifactEntry> Manifest::artifacts() const {
  std::vector<ArtifactEntry> out;
  for (const auto& s : stages) out.insert(out.end(), s.outputs.begin(), s.outputs.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

nlohmann::json to_json(const Manifest& m) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : m.stages) {
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& o : s.outputs) outputs.push_back({{"path", o.path}, {"sha256", o.sha256}});
    stages.push_back({{"name", s.name}, {"fingerprint", s.fingerprint}, {"outputs", std::move(outputs)}});
  }
  nlohmann::json artifacts = nlohmann::json::array();
  for (const auto& a : m.artifacts()) artifacts.push_back({{"path", a.path}, {"sha256", a.sha256}});
  return {{"format", "hierfolio.manifest"}, {"version", 1}, {"stages", std::move(stages)}, {"artifacts", std::move(artifacts)}};
}

Manifest manifest_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "hierfolio.manifest") throw DomainError("not a hierfolio manifest");
  Manifest m;
  for (const auto& s : j.at("stages")) {
    StageRecord r;
    r.name = s.at("name").get<std::string>();
    r.fingerprint = s.at("fingerprint").get<std::string>();
    for (const auto& o : s.at("outputs")) r.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>()});
    m.stages.push_back(std::move(r));
  }
  return m;
}

Manifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) return {};
  return manifest_from_json(read_json(path));
}

void save_manifest(const fs::path& path, const Manifest& m) { write_text(path, to_json(m).dump(2) + "\n"); }

std::vector<std::string> verify_manifest(const fs::path& output_dir) {
  const auto m = load_manifest(output_dir / "manifest.json");
  std::vector<std::string> bad;
  for (const auto& a : m.artifacts()) {
    const auto p = output_dir / a.path;
    if (!fs::exists(p) || sha256_file(p) != a.sha256) bad.push_back(a.path);
  }
  return bad;
}

Pipeline::Pipeline(RunConfig config, std::ostream* log) : config_(std::move(config)), log_(log) {}

std::vector<std::string> Pipeline::stage_names() const {
  std::vector<std::string> out{"ingest", "sentiment", "features", "train-base"};
  for (auto mode : config_.modes) out.push_back(meta_stage(mode));
  out.insert(out.end(), {"train-super", "backtest", "report"});
  return out;
}

std::vector<std::string> Pipeline::dependencies(const std::string& stage) const {
  if (stage == "ingest") return {};
  if (stage == "sentiment") return {"ingest"};
  if (stage == "features" || stage == "train-base") return {"ingest", "sentiment"};
  if (stage.starts_with("train-meta:")) return {"ingest", "sentiment", "train-base"};
  std::vector<std::string> deps{"ingest", "sentiment", "train-base"};
  for (auto mode : config_.modes) deps.push_back(meta_stage(mode));
  if (stage == "train-super") return deps;
  deps.push_back("train-super");
  if (stage == "backtest") return deps;
  if (stage == "report") return {"backtest"};
  throw DomainError(fmt::format("unknown stage '{}'", stage));
}

std::string Pipeline::fingerprint(const std::string& stage, const Manifest& manifest) const {
  const auto& doc = config_.normalized;
  nlohmann::json settings;
  nlohmann::json inputs = nlohmann::json::object();
  if (stage == "ingest") {
    settings = {{"fill", doc["data"]["fill"]}, {"universe", doc["universe"]}};
    inputs["data.prices"] = sha256_file(config_.prices);
  } else if (stage == "sentiment") {
    auto s = doc["data"]["sentiment"];
    s.erase("path");
    settings = s;
    if (config_.sentiment.source == SentimentSource::file) inputs["data.sentiment.path"] = sha256_file(config_.sentiment.path);
  } else if (stage == "features") {
    settings = doc["features"];
  } else if (stage == "train-base") {
    settings = {{"agents", doc["agents"]}, {"seeds", config_.seeds}, {"reward", doc["reward"]},
                {"train", doc["windows"]["train"]}, {"features", doc["features"]}, {"global_seed", config_.global_seed}};
  } else if (stage.starts_with("train-meta:") || stage == "train-super") {
    settings = {{"hierarchy", doc["hierarchy"]}, {"reward", doc["reward"]}, {"train", doc["windows"]["train"]},
                {"features", doc["features"]}, {"global_seed", config_.global_seed}};
  } else if (stage == "backtest") {
    settings = {{"backtest", doc["backtest"]}, {"windows", doc["windows"]}, {"reward", doc["reward"]},
                {"features", doc["features"]}, {"seeds", config_.seeds}, {"hierarchy", doc["hierarchy"]},
                {"global_seed", config_.global_seed}};
  } else if (stage == "report") {
    settings = {{"log_scale", doc["backtest"]["log_scale"]}};
  }
  for (const auto& dep : dependencies(stage)) {
    const auto* rec = manifest.find(dep);
    if (rec == nullptr) throw DomainError(fmt::format("stage {} needs {} to run first", stage, dep));
    for (const auto& o : rec->outputs) {
      const auto p = out(o.path);
      if (!fs::exists(p)) throw DomainError(fmt::format("stage {} input {} is missing", stage, o.path));
      inputs[o.path] = sha256_file(p);
    }
  }
  const nlohmann::json fp{{"stage", stage}, {"settings", settings}, {"inputs", inputs}};
  return sha256_hex(fp.dump());
}

StageOutcome Pipeline::run_stage(const std::string& name) {
  const auto order = stage_names();
  if (std::find(order.begin(), order.end(), name) == order.end()) {
    throw DomainError(fmt::format("unknown stage '{}'", name));
  }
  fs::create_directories(config_.output_dir);
  Manifest manifest = load_manifest(manifest_path());
  const std::string fp = fingerprint(name, manifest);

  if (const auto* rec = manifest.find(name); rec != nullptr && rec->fingerprint == fp) {
    const bool intact = std::all_of(rec->outputs.begin(), rec->outputs.end(), [&](const ArtifactEntry& a) {
      return fs::exists(out(a.path)) && sha256_file(out(a.path)) == a.sha256;
    });
    if (intact) {
      if (log_ != nullptr) *log_ << fmt::format("[{}] up to date\n", name);
      return {name, true};
    }
  }

  if (log_ != nullptr) *log_ << fmt::format("[{}] running\n", name) << std::flush;
  const auto outputs = execute(name);
  StageRecord rec{name, fp, {}};
  for (const auto& o : outputs) rec.outputs.push_back({o, sha256_file(out(o))});
  manifest.put(std::move(rec), order);
  save_manifest(manifest_path(), manifest);
  if (log_ != nullptr) *log_ << fmt::format("[{}] done, {} artifacts\n", name, outputs.size());
  return {name, false};
}

std::vector<StageOutcome> Pipeline::run_all() {
  std::vector<StageOutcome> out;
  for (const auto& s : stage_names()) out.push_back(run_stage(s));
  return out;
}

std::vector<std::string> Pipeline::execute(const std::string& stage) {
  if (stage == "ingest") return run_ingest();
  if (stage == "sentiment") return run_sentiment();
  if (stage == "features") return run_features();
  if (stage == "train-base") return run_train_base();
  if (stage.starts_with("train-meta:")) return run_train_meta(parse_mode(stage.substr(11)));
  if (stage == "train-super") return run_train_super();
  if (stage == "backtest") return run_backtest();
  return run_report();
}

std::shared_ptr<const MarketData> Pipeline::load_market() const {
  const auto dense = load_price_table(out(kPricesClean), config_.universe);
  const auto sentiment = load_sentiment_table(out(kSentiment));
  return std::make_shared<const MarketData>(build_market(dense, &sentiment, config_.feature_risk_free));
}

std::vector<std::string> Pipeline::run_ingest() {
  const auto raw = load_price_table(config_.prices, config_.universe);
  const auto dense = fill_missing(raw, FillPolicy{config_.fill});
  std::ostringstream csv;
  write_price_csv(csv, dense);
  write_text(out(kPricesClean), csv.str());
  return {kPricesClean};
}

std::vector<std::string> Pipeline::run_sentiment() {
  const auto dense = load_price_table(out(kPricesClean), config_.universe);
  SentimentTable table;
  if (config_.sentiment.source == SentimentSource::file) {
    table = load_sentiment_table(config_.sentiment.path);
  } else {
    std::vector<MonthId> months;
    for (const auto& d : dense.calendar) {
      const auto m = MonthId::of(d);
      if (months.empty() || months.back() != m) months.push_back(m);
    }
    table = simulate_sentiment(dense, months, config_.sentiment.seed, config_.sentiment.lambda);
  }
  std::ostringstream csv;
  write_sentiment_csv(csv, table);
  write_text(out(kSentiment), csv.str());
  return {kSentiment};
}

std::vector<std::string> Pipeline::run_features() {
  const auto market = load_market();
  std::vector<std::string> outputs;
  for (auto mode : {ObservationMode::metrics, ObservationMode::nlp}) {
    const auto name = std::string(to_string(mode));
    const auto dim = observation_length(mode, market->n_assets());
    std::string csv = "month";
    for (std::size_t i = 0; i < dim; ++i) csv += fmt::format(",f{}", i);
    csv += '\n';
    for (std::size_t k = 0; k < market->n_months(); ++k) {
      const auto& obs = market->observation(mode, k);
      csv += obs.month.str();
      for (double v : obs.values) csv += fmt::format(",{}", v);
      csv += '\n';
    }
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : observation_layout(mode, market->n_assets())) {
      segments.push_back({{"name", s.name}, {"offset", s.offset}, {"length", s.length}});
    }
    const nlohmann::json layout{{"mode", name}, {"tickers", market->tickers}, {"length", dim}, {"segments", segments}};
    const auto csv_path = fmt::format("features/{}.csv", name);
    const auto layout_path = fmt::format("features/{}.layout.json", name);
    write_text(out(csv_path), csv);
    write_text(out(layout_path), layout.dump(2) + "\n");
    outputs.push_back(csv_path);
    outputs.push_back(layout_path);
  }
  return outputs;
}

std::vector<std::string> Pipeline::run_train_base() {
  const auto market = load_market();
  BatteryPlan plan;
  plan.algorithms = config_.algorithms;
  plan.modes = config_.modes;
  plan.seeds = config_.seeds;
  plan.hyper = config_.hyper;
  plan.episodes = config_.episodes;
  plan.global_seed = config_.global_seed;
  plan.threads = config_.threads;
  const auto set = run_seed_battery(plan, [&](ObservationMode mode) -> EnvFactory {
    return [&, mode] { return PortfolioEnv(market, config_.train, mode, config_.reward); };
  });

  std::vector<std::string> outputs;
  nlohmann::json cells = nlohmann::json::array();
  std::size_t ok = 0;
  for (const auto& cell : set.cells) {
    const auto id = cell.spec.id();
    nlohmann::json row{{"id", id},
                       {"algorithm", to_string(cell.spec.algorithm)},
                       {"mode", to_string(cell.spec.mode)},
                       {"seed", cell.spec.seed}};
    if (cell.policy && cell.report) {
      const auto rel = fmt::format("policies/{}.json", id);
      fs::create_directories(out("policies"));
      save_policy(out(rel), *cell.policy);
      row["path"] = rel;
      row["checksum"] = cell.policy->checksum();
      row["train_roi"] = cell.report->metrics.roi;
      row["train_sharpe"] = cell.report->metrics.sharpe;
      outputs.push_back(rel);
      ++ok;
    } else {
      row["error"] = cell.error;
      if (log_ != nullptr) *log_ << fmt::format("[train-base] {} failed: {}\n", id, cell.error);
    }
    cells.push_back(std::move(row));
  }
  if (ok == 0) throw Error("every base agent failed to train");
  const nlohmann::json battery{{"format", "hierfolio.battery"}, {"version", 1}, {"cells", std::move(cells)}};
  write_text(out(kBattery), battery.dump(2) + "\n");
  outputs.push_back(kBattery);
  return outputs;
}

std::vector<std::string> Pipeline::run_train_meta(ObservationMode mode) {
  const auto market = load_market();
  const auto bases = load_bases(config_.output_dir, load_battery(config_.output_dir));
  const auto contributors = base_contributors(bases, mode, *market);
  const auto level = meta_level_for(mode);
  const auto model = train_level(level, contributors, *market, config_);
  const auto rel = aggregator_path(level);
  fs::create_directories(out("aggregators"));
  save_aggregator(out(rel), model);
  return {rel};
}

std::vector<std::string> Pipeline::run_train_super() {
  const auto market = load_market();
  const auto bases = load_bases(config_.output_dir, load_battery(config_.output_dir));
  std::vector<AggregatorModel> metas;
  for (auto mode : config_.modes) metas.push_back(load_aggregator(out(aggregator_path(meta_level_for(mode)))));
  std::vector<Contributor> contributors;
  for (const auto& meta : metas) {
    contributors.push_back(aggregator_contributor(meta, manifest_contributors(meta, bases, *market), *market));
  }
  const auto model = train_level(AggregatorLevel::super, contributors, *market, config_);
  const auto rel = aggregator_path(AggregatorLevel::super);
  save_aggregator(out(rel), model);
  return {rel};
}

BacktestReport Pipeline::backtest_policy(const std::string& policy, const Window& window) const {
  const auto market = load_market();
  const auto fp = report_fingerprint(config_);
  const double rf = config_.backtest.risk_free;
  if (policy == "equal" || policy.starts_with("equal:") || policy.starts_with("asset:")) {
    const auto spec = parse_benchmark(policy);
    const std::string id = spec.kind == BenchmarkKind::equal_weight ? "equal_weight" : "index_" + spec.asset;
    return hierfolio::run_backtest(id, benchmark_actor(spec, *market, window), *market, window, rf, fp);
  }
  const auto j = read_json(policy);
  const auto format = j.value("format", "");
  if (format == "hierfolio.policy") {
    const Policy p = policy_from_json(j);
    const auto c = policy_contributor(p, *market);
    return hierfolio::run_backtest(p.spec.id(), c.act, *market, window, rf, fp);
  }
  if (format != "hierfolio.aggregator") throw DomainError(fmt::format("{} is not a checkpoint", policy));
  const auto model = aggregator_from_json(j);
  const auto bases = load_bases(config_.output_dir, load_battery(config_.output_dir));
  if (model.level != AggregatorLevel::super) {
    const auto c = aggregator_contributor(model, manifest_contributors(model, bases, *market), *market);
    return hierfolio::run_backtest(model.id(), c.act, *market, window, rf, fp);
  }
  Hierarchy h{model, {}, bases};
  for (const auto& ref : model.manifest) h.metas.push_back(load_aggregator(out(aggregator_path(parse_level(ref.id)))));
  return hierfolio::run_backtest(model.id(), [&](std::size_t k) { return hierarchy_act(h, *market, k); }, *market, window, rf, fp);
}

std::vector<std::string> Pipeline::run_backtest() {
  const auto market = load_market();
  const auto battery = load_battery(config_.output_dir);
  const auto bases = load_bases(config_.output_dir, battery);
  Hierarchy h{load_aggregator(out(aggregator_path(AggregatorLevel::super))), {}, bases};
  for (auto mode : config_.modes) h.metas.push_back(load_aggregator(out(aggregator_path(meta_level_for(mode)))));

  struct Entry {
    std::string id;
    Actor actor;
  };
  std::vector<Entry> headline;
  std::vector<Entry> agents;

  const BenchmarkSpec equal{BenchmarkKind::equal_weight, "", config_.backtest.equal_weight_buy_and_hold};
  const BenchmarkSpec index{BenchmarkKind::single_asset, config_.backtest.index, false};
  for (const auto& meta : h.metas) {
    const auto c = aggregator_contributor(meta, manifest_contributors(meta, bases, *market), *market);
    headline.push_back({meta.id(), c.act});
  }
  headline.push_back({"super", [&](std::size_t k) { return hierarchy_act(h, *market, k); }});

  for (auto mode : config_.modes) {
    for (auto algo : config_.algorithms) {
      const BatteryEntry* best = nullptr;
      std::vector<const BatteryEntry*> ok;
      std::vector<double> rois;
      for (const auto& e : battery) {
        if (e.ok() && e.algorithm == algo && e.mode == mode) {
          ok.push_back(&e);
          rois.push_back(e.train_roi);
        }
      }
      if (ok.empty()) continue;
      best = ok[median_index(rois)];
      const auto it = std::find_if(bases.begin(), bases.end(), [&](const Policy& p) { return p.spec.id() == best->id; });
      const auto c = policy_contributor(*it, *market);
      agents.push_back({fmt::format("median_{}_{}", to_string(algo), to_string(mode)), c.act});
    }
  }

  const auto fp = report_fingerprint(config_);
  const double rf = config_.backtest.risk_free;
  std::vector<std::string> outputs;
  nlohmann::json index_doc = nlohmann::json::object();
  for (const auto& [label, window] : {std::pair{"train", config_.train}, std::pair{"test", config_.test}}) {
    nlohmann::json head = nlohmann::json::array();
    nlohmann::json ag = nlohmann::json::array();
    auto emit = [&](const std::string& id, const Actor& actor, nlohmann::json& list) {
      const auto report = hierfolio::run_backtest(id, actor, *market, window, rf, fp);
      const auto rel = fmt::format("backtests/{}/{}.json", label, id);
      write_text(out(rel), to_json(report).dump() + "\n");
      outputs.push_back(rel);
      list.push_back(rel);
    };
    emit("equal_weight", benchmark_actor(equal, *market, window), head);
    emit("index_" + index.asset, benchmark_actor(index, *market, window), head);
    for (const auto& e : headline) emit(e.id, e.actor, head);
    for (const auto& e : agents) emit(e.id, e.actor, ag);
    index_doc[label] = {{"window", window.str()}, {"summary", head}, {"agents", ag}};
  }
  write_text(out(kBacktestIndex), index_doc.dump(2) + "\n");
  outputs.push_back(kBacktestIndex);
  return outputs;
}

std::vector<std::string> Pipeline::run_report() {
  const auto index = read_json(out(kBacktestIndex));
  ChartOptions opts;
  opts.log_scale = config_.backtest.log_scale;
  std::vector<std::string> outputs;
  std::vector<BacktestReport> table;
  for (const char* label : {"test", "train"}) {
    for (const char* group : {"summary", "agents"}) {
      std::vector<BacktestReport> reports;
      for (const auto& rel : index.at(label).at(group)) reports.push_back(report_from_json(read_json(out(rel.get<std::string>()))));
      if (reports.empty()) continue;
      if (std::string_view(group) == "summary") table.insert(table.end(), reports.begin(), reports.end());
      opts.title = fmt::format("{} window {}", label, index.at(label).at("window").get<std::string>());
      const auto files = emit_report(reports, out("report"), fmt::format("{}_{}", label, group), opts);
      for (const auto& f : {files.json, files.csv, files.svg}) {
        outputs.push_back(fs::relative(f, config_.output_dir).generic_string());
      }
    }
  }
  std::ostringstream csv;
  write_summary_csv(csv, table);
  write_text(out("report/table.csv"), csv.str());
  outputs.push_back("report/table.csv");
  return outputs;
}

}  // namespace hierfolio
