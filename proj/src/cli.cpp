#include "angsync/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <CLI11.hpp>

#include "angsync/evaluation.hpp"
#include "angsync/gnnsync.hpp"
#include "angsync/graph.hpp"
#include "angsync/losses.hpp"
#include "angsync/snl.hpp"
#include "angsync/spectral.hpp"
#include "angsync/synth.hpp"

namespace angsync::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(std::istream& is) {
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  return parse(in);
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

namespace {

template <class T, class F>
T convert(const std::string& key, const std::string& text, F f) {
  try {
    std::size_t used = 0;
    T v = f(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': cannot parse '" + text + "'");
  }
}

}  // namespace

double Config::real(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  return convert<double>(key, str(key, ""), [](const std::string& s, std::size_t* u) { return std::stod(s, u); });
}

int Config::integer(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  return convert<int>(key, str(key, ""), [](const std::string& s, std::size_t* u) { return std::stoi(s, u); });
}

std::uint64_t Config::seed(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  return convert<std::uint64_t>(key, str(key, ""),
                                [](const std::string& s, std::size_t* u) { return std::stoull(s, u); });
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = str(key, "");
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> Config::list(const std::string& key, const std::string& fallback) const {
  std::vector<std::string> out;
  std::stringstream ss(str(key, fallback));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string csv_header(int max_k) {
  std::string h = "model,n,p,k,eta,option,seed,method,loss,mse";
  for (int l = 1; l <= max_k; ++l) h += ",mse_l" + std::to_string(l);
  return h + ",ane,upset,cycle,runtime_s";
}

namespace {

std::string field(const std::optional<double>& v) { return v ? format_real(*v) : ""; }
std::string field(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }
std::string field(const std::optional<std::uint64_t>& v) { return v ? std::to_string(*v) : ""; }

}  // namespace

std::string csv_row(const RunRecord& r, int max_k) {
  std::ostringstream os;
  os << r.model << ',' << field(r.n) << ',' << field(r.p) << ',' << field(r.k) << ',' << field(r.eta) << ','
     << field(r.option) << ',' << field(r.seed) << ',' << r.method << ',' << r.loss << ',' << field(r.mse);
  for (int l = 0; l < max_k; ++l)
    os << ',' << (l < static_cast<int>(r.mse_layers.size()) ? format_real(r.mse_layers[l]) : "");
  os << ',' << field(r.ane) << ',' << field(r.upset) << ',' << field(r.cycle) << ',' << format_real(r.runtime_s);
  return os.str();
}

void write_angles(std::ostream& os, const AngleMatrix& r) {
  os << "# n=" << r.rows() << " k=" << r.cols() << '\n';
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    for (Eigen::Index l = 0; l < r.cols(); ++l) os << (l ? " " : "") << format_real(r(i, l));
    os << '\n';
  }
}

AngleMatrix read_angles(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ss(t);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!ss.eof()) throw UsageError("angle file: bad value in line: " + t);
    if (!rows.empty() && row.size() != rows.front().size()) throw UsageError("angle file: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw UsageError("angle file: no rows");
  AngleMatrix out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t l = 0; l < rows[i].size(); ++l) out(i, l) = rows[i][l];
  return out;
}

int worker_count() {
  if (const char* env = std::getenv("ANGSYNC_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw UsageError("ANGSYNC_WORKERS must be a positive integer");
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UsageError("cannot write " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open " + path);
  return is;
}

EdgeListFile load_graph(const Config& cfg) {
  if (!cfg.has("graph")) throw UsageError("missing required key 'graph'");
  auto is = open_in(cfg.str("graph", ""));
  try {
    return read_edge_list(is);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::optional<GroundTruth> load_truth(const Config& cfg) {
  if (!cfg.has("truth")) return std::nullopt;
  auto is = open_in(cfg.str("truth", ""));
  try {
    return read_ground_truth(is);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

AngleMatrix solve_with(const std::string& method, const OffsetGraph& g, int k, const Config& cfg) {
  if (method == "spectral") return spectral_sync(g, k);
  if (method == "spectral_rn") return spectral_rn_sync(g, k);
  if (method == "gpm") return gpm_sync(g, k, cfg.integer("gpm_iters", 100), cfg.real("gpm_alpha", 1.0));
  if (method == "trivial") return trivial_solution(g.n(), k);
  throw UsageError("unknown method: " + method);
}

void fill_metrics(RunRecord& rec, const OffsetGraph& g, const AngleMatrix& r, const AngleMatrix* truth) {
  if (truth) {
    if (truth->rows() != r.rows() || truth->cols() != r.cols())
      throw UsageError("ground truth shape does not match the estimate");
    const PermutationMse m = mse_k(r, *truth);
    rec.mse = m.value;
    rec.mse_layers = m.per_layer;
  }
  if (g.nonzero_count() > 0) {
    rec.upset = upset_loss(g, r);
    rec.cycle = cycle_loss(g, r);
  }
}

TrainConfig train_config(const Config& cfg, const std::string& loss) {
  TrainConfig t;
  t.lr = cfg.real("lr", t.lr);
  t.weight_decay = cfg.real("weight_decay", t.weight_decay);
  t.max_epochs = cfg.integer("epochs", t.max_epochs);
  t.patience = cfg.integer("patience", std::min(t.patience, t.max_epochs));
  t.d = cfg.integer("d", t.d);
  t.hidden = cfg.integer("hidden", t.hidden);
  const std::string mode = cfg.str("mode", "end_to_end");
  if (mode == "end_to_end") {
    t.mode = PgdMode::EndToEnd;
  } else if (mode == "post_process") {
    t.mode = PgdMode::PostProcess;
  } else {
    throw UsageError("unknown mode: " + mode);
  }
  try {
    t.loss = LossSpec::parse(loss);
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return t;
}

PGDConfig pgd_config(const Config& cfg) {
  PGDConfig p;
  p.steps = cfg.integer("pgd_steps", p.steps);
  if (cfg.has("alpha")) p.alphas.assign(std::max(p.steps, 0), cfg.real("alpha", 1.0));
  p.trainable = cfg.flag("trainable_alpha", false);
  p.per_layer_h = cfg.flag("per_layer_h", false);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string with_seed_suffix(const std::string& path, std::uint64_t seed, bool many) {
  return many ? path + ".seed" + std::to_string(seed) : path;
}

}  // namespace

void cmd_gen(const Config& cfg) {
  SyntheticConfig s;
  s.model = parse_model(cfg.str("model", "ERO"));
  s.n = cfg.integer("n", s.n);
  s.p = cfg.real("p", s.p);
  s.k = cfg.integer("k", s.k);
  s.eta = cfg.real("eta", s.eta);
  s.option = cfg.integer("option", s.option);
  s.seed = cfg.seed("seed", s.seed);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const SyntheticInstance inst = gen_offset_graph(s);
  {
    auto os = open_out(cfg.str("graph", "graph.txt"));
    write_edge_list(os, inst.graph.without_layers(), s.k);
  }
  auto os = open_out(cfg.str("truth", "truth.txt"));
  write_ground_truth(os, inst.graph, inst.truth);
}

RunRecord cmd_solve(const Config& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const EdgeListFile file = load_graph(cfg);
  const int k = cfg.integer("k", file.k);
  const std::string method = cfg.str("method", "spectral");
  const auto truth = load_truth(cfg);
  const AngleMatrix r = solve_with(method, file.graph, k, cfg);
  if (cfg.has("out")) {
    auto os = open_out(cfg.str("out", ""));
    write_angles(os, r);
  }
  RunRecord rec;
  rec.n = file.graph.n();
  rec.k = k;
  if (cfg.has("seed")) rec.seed = cfg.seed("seed", 0);
  rec.method = method;
  fill_metrics(rec, file.graph, r, truth ? &truth->theta : nullptr);
  if (cfg.flag("record_runtime", false)) rec.runtime_s = seconds_since(t0);
  return rec;
}

std::vector<RunRecord> cmd_train(const Config& cfg) {
  const EdgeListFile file = load_graph(cfg);
  const int k = cfg.integer("k", file.k);
  const std::string loss = cfg.str("loss", "upset");
  const auto truth = load_truth(cfg);
  const PGDConfig pcfg = pgd_config(cfg);
  TrainConfig tcfg = train_config(cfg, loss);
  std::vector<std::uint64_t> seeds;
  for (const auto& s : cfg.list("seeds", cfg.str("seed", "0"))) {
    Config one;
    one.set("seed", s);
    seeds.push_back(one.seed("seed", 0));
  }
  const bool many = seeds.size() > 1;
  std::vector<RunRecord> out;
  for (std::uint64_t seed : seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    tcfg.seed = seed;
    const TrainResult res = train(file.graph, k, tcfg, pcfg);
    if (cfg.has("out")) {
      auto os = open_out(with_seed_suffix(cfg.str("out", ""), seed, many));
      write_angles(os, res.r);
    }
    if (cfg.has("checkpoint")) {
      auto os = open_out(with_seed_suffix(cfg.str("checkpoint", ""), seed, many));
      save_checkpoint(os, res.model);
    }
    RunRecord rec;
    rec.n = file.graph.n();
    rec.k = k;
    rec.seed = seed;
    rec.method = "gnnsync";
    rec.loss = tcfg.loss.name();
    fill_metrics(rec, file.graph, res.r, truth ? &truth->theta : nullptr);
    if (cfg.flag("record_runtime", false)) rec.runtime_s = seconds_since(t0);
    out.push_back(rec);
  }
  return out;
}

namespace {

struct Instance {
  std::string model;
  int n, k, option;
  double p, eta;
  std::uint64_t seed;
};

template <class T>
std::vector<T> parse_list(const Config& cfg, const std::string& key, const std::string& fallback) {
  std::vector<T> out;
  for (const auto& item : cfg.list(key, fallback)) {
    Config one;
    one.set(key, item);
    if constexpr (std::is_same_v<T, int>) out.push_back(one.integer(key, 0));
    else if constexpr (std::is_same_v<T, double>) out.push_back(one.real(key, 0.0));
    else out.push_back(one.seed(key, 0));
  }
  if (out.empty()) throw UsageError("sweep key '" + key + "' is empty");
  return out;
}

auto row_key(const RunRecord& r) {
  return std::make_tuple(r.model, r.n.value_or(0), r.p.value_or(0.0), r.k.value_or(0), r.eta.value_or(0.0),
                         r.option.value_or(0), r.seed.value_or(0), r.method, r.loss);
}

}  // namespace

SweepResult cmd_sweep(const Config& cfg, std::ostream& out) {
  std::vector<std::string> models;
  for (const auto& m : cfg.list("models", "ERO")) models.push_back(to_string(parse_model(m)));
  const auto ns = parse_list<int>(cfg, "n", "360");
  const auto ps = parse_list<double>(cfg, "p", "0.15");
  const auto ks = parse_list<int>(cfg, "k", "1");
  const auto etas = parse_list<double>(cfg, "eta", "0");
  const auto options = parse_list<int>(cfg, "option", "1");
  const auto seeds = parse_list<std::uint64_t>(cfg, "seeds", "0");
  const auto methods = cfg.list("methods", "spectral,spectral_rn,gpm,trivial");
  const auto losses = cfg.list("losses", "upset");
  const bool timing = cfg.flag("record_runtime", false);
  for (const auto& m : methods)
    if (m != "gnnsync" && m != "spectral" && m != "spectral_rn" && m != "gpm" && m != "trivial")
      throw UsageError("unknown method: " + m);
  const PGDConfig pcfg = pgd_config(cfg);
  std::vector<TrainConfig> tcfgs;
  for (const auto& l : losses) tcfgs.push_back(train_config(cfg, l));

  std::vector<Instance> jobs;
  for (const auto& model : models)
    for (int n : ns)
      for (double p : ps)
        for (int k : ks)
          for (double eta : etas)
            for (int option : options)
              for (std::uint64_t seed : seeds) jobs.push_back({model, n, k, option, p, eta, seed});

  struct JobResult {
    std::vector<RunRecord> rows;
    std::vector<std::string> failures;
    bool numerical = false;
  };
  std::vector<JobResult> results(jobs.size());

  auto run_job = [&](std::size_t idx) {
    const Instance& job = jobs[idx];
    JobResult& res = results[idx];
    RunRecord base;
    base.model = job.model;
    base.n = job.n;
    base.p = job.p;
    base.k = job.k;
    base.eta = job.eta;
    base.option = job.option;
    base.seed = job.seed;
    std::optional<SyntheticInstance> inst;
    std::string gen_error;
    try {
      SyntheticConfig s{parse_model(job.model), job.n, job.p, job.k, job.eta, job.option, job.seed};
      s.validate();
      inst = gen_offset_graph(s);
    } catch (const std::exception& e) {
      gen_error = e.what();
    }
    auto one = [&](const std::string& method, const TrainConfig* tcfg) {
      RunRecord rec = base;
      rec.method = method;
      if (tcfg) rec.loss = tcfg->loss.name();
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (!inst) throw std::runtime_error(gen_error);
        const OffsetGraph g = inst->graph.without_layers();
        const AngleMatrix r = tcfg ? train(g, job.k, [&] {
          TrainConfig t = *tcfg;
          t.seed = job.seed;
          return t;
        }(), pcfg).r
                                   : solve_with(method, g, job.k, cfg);
        fill_metrics(rec, g, r, &inst->truth.theta);
      } catch (const NumericalError& e) {
        res.numerical = true;
        res.failures.push_back(csv_row(rec, 0) + ": " + e.what());
      } catch (const std::exception& e) {
        res.failures.push_back(csv_row(rec, 0) + ": " + e.what());
      }
      if (timing) rec.runtime_s = seconds_since(t0);
      res.rows.push_back(rec);
    };
    for (const auto& m : methods) {
      if (m == "gnnsync") {
        for (const auto& t : tcfgs) one(m, &t);
      } else {
        one(m, nullptr);
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(jobs.size(), 1));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(i);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SweepResult sweep;
  sweep.max_k = *std::max_element(ks.begin(), ks.end());
  for (auto& r : results) {
    sweep.rows.insert(sweep.rows.end(), r.rows.begin(), r.rows.end());
    sweep.failures.insert(sweep.failures.end(), r.failures.begin(), r.failures.end());
    sweep.numerical_failure = sweep.numerical_failure || r.numerical;
  }
  std::stable_sort(sweep.rows.begin(), sweep.rows.end(),
                   [](const RunRecord& a, const RunRecord& b) { return row_key(a) < row_key(b); });

  std::ostringstream csv;
  csv << csv_header(sweep.max_k) << '\n';
  for (const auto& r : sweep.rows) csv << csv_row(r, sweep.max_k) << '\n';
  const std::string path = cfg.str("out", "-");
  if (path == "-") {
    out << csv.str();
  } else {
    auto os = open_out(path);
    os << csv.str();
  }
  return sweep;
}

RunRecord cmd_snl(const Config& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  SnlConfig s;
  s.shape = parse_cloud_shape(cfg.str("shape", "uniform"));
  s.n = cfg.integer("n", s.n);
  s.k_patch = cfg.integer("k_patch", s.k_patch);
  s.k_thres = cfg.integer("k_thres", s.k_thres);
  s.eta = cfg.real("eta", s.eta);
  s.option = cfg.integer("option", s.option);
  s.seed = cfg.seed("seed", s.seed);
  s.circular_shift = cfg.flag("circular_shift", false);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::string method = cfg.str("method", "spectral");

  Synchronizer sync;
  std::string loss_name;
  if (method == "gnnsync") {
    const TrainConfig tcfg = [&] {
      TrainConfig t = train_config(cfg, cfg.str("loss", "upset"));
      t.seed = s.seed;
      return t;
    }();
    loss_name = tcfg.loss.name();
    const PGDConfig pcfg = pgd_config(cfg);
    sync = [tcfg, pcfg](const OffsetGraph& g) { return train(g, 1, tcfg, pcfg).r; };
  } else if (method == "exact") {
    const AngleMatrix theta = gen_ground_truth(s.option, s.n, 1, s.seed);
    sync = [theta](const OffsetGraph& g) {
      if (g.n() != theta.rows()) throw UsageError("exact angles need a connected patch graph");
      return theta;
    };
  } else {
    if (method != "spectral" && method != "spectral_rn" && method != "gpm" && method != "trivial")
      throw UsageError("unknown method: " + method);
    sync = [method, &cfg](const OffsetGraph& g) { return solve_with(method, g, 1, cfg); };
  }

  const SnlResult res = run_snl(s, sync);
  if (cfg.has("out")) {
    auto os = open_out(cfg.str("out", ""));
    write_cloud(os, res.recovered, res.ane);
  }
  RunRecord rec;
  rec.model = "snl-" + to_string(s.shape);
  rec.n = s.n;
  rec.k = 1;
  rec.eta = s.eta;
  rec.option = s.option;
  rec.seed = s.seed;
  rec.method = method;
  rec.loss = loss_name;
  rec.ane = res.ane;
  const AngleMatrix theta = res.theta;
  fill_metrics(rec, res.patch_graph.graph, AngleMatrix(res.r), &theta);
  if (cfg.flag("record_runtime", false)) rec.runtime_s = seconds_since(t0);
  return rec;
}

namespace {

struct Command {
  CLI::App* app;
  std::vector<std::string> keys;
  std::map<std::string, std::string> values;
  std::string config_path;
  std::vector<std::string> sets;
};

Command* add_command(CLI::App& root, std::vector<std::unique_ptr<Command>>& cmds, const std::string& name,
                     const std::string& help, const std::vector<std::string>& keys) {
  auto c = std::make_unique<Command>();
  c->app = root.add_subcommand(name, help);
  c->keys = keys;
  c->app->add_option("--config", c->config_path, "key=value settings file");
  c->app->add_option("--set", c->sets, "override one setting, key=value");
  for (const auto& k : keys) {
    std::string flag = k;
    std::replace(flag.begin(), flag.end(), '_', '-');
    c->app->add_option("--" + flag, c->values[k]);
  }
  cmds.push_back(std::move(c));
  return cmds.back().get();
}

Config resolve(const Command& c) {
  Config cfg = c.config_path.empty() ? Config{} : Config::load(c.config_path);
  for (const auto& k : c.keys) {
    std::string flag = k;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (c.app->count("--" + flag) > 0) cfg.set(k, c.values.at(k));
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
    cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  return cfg;
}

const std::vector<std::string> kTrainKeys{"loss",    "pgd_steps", "alpha",    "trainable_alpha", "per_layer_h",
                                          "mode",    "lr",        "weight_decay", "epochs",      "patience",
                                          "d",       "hidden"};

std::vector<std::string> join(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Angular synchronization and k-synchronization benchmarks"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Command>> cmds;
  Command* gen = add_command(app, cmds, "gen", "generate a synthetic offset graph and its ground truth",
                             {"model", "n", "p", "k", "eta", "option", "seed", "graph", "truth"});
  Command* solve = add_command(app, cmds, "solve", "run a baseline synchronizer",
                               {"graph", "truth", "method", "k", "out", "seed", "gpm_iters", "gpm_alpha",
                                "record_runtime"});
  Command* trn = add_command(app, cmds, "train", "train GNNSync on one graph",
                             join({"graph", "truth", "k", "seeds", "seed", "out", "checkpoint", "record_runtime"},
                                  kTrainKeys));
  Command* sweep = add_command(app, cmds, "sweep", "run a parameter grid and write CSV",
                               join({"models", "n", "p", "k", "eta", "option", "seeds", "methods", "losses", "out",
                                     "record_runtime", "gpm_iters", "gpm_alpha"},
                                    kTrainKeys));
  Command* snl = add_command(app, cmds, "snl", "sensor network localization pipeline",
                             join({"shape", "n", "k_patch", "k_thres", "eta", "option", "seed", "method", "out",
                                   "circular_shift", "gpm_iters", "gpm_alpha", "record_runtime"},
                                  kTrainKeys));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->app->parsed()) {
      cmd_gen(resolve(*gen));
    } else if (solve->app->parsed()) {
      const RunRecord r = cmd_solve(resolve(*solve));
      const int k = r.k.value_or(1);
      out << csv_header(k) << '\n' << csv_row(r, k) << '\n';
    } else if (trn->app->parsed()) {
      const auto rows = cmd_train(resolve(*trn));
      const int k = rows.empty() ? 1 : rows.front().k.value_or(1);
      out << csv_header(k) << '\n';
      for (const auto& r : rows) out << csv_row(r, k) << '\n';
    } else if (sweep->app->parsed()) {
      const SweepResult res = cmd_sweep(resolve(*sweep), out);
      for (const auto& f : res.failures) err << "failed: " << f << '\n';
      if (!res.failures.empty()) return res.numerical_failure ? kExitNumerical : kExitUsage;
    } else if (snl->app->parsed()) {
      const RunRecord r = cmd_snl(resolve(*snl));
      out << csv_header(1) << '\n' << csv_row(r, 1) << '\n';
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace angsync::cli
