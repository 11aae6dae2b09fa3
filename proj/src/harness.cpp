#include "bdris/harness.hpp"

#include "bdris/baselines.hpp"
#include "bdris/mimo.hpp"
#include "bdris/siso.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace bdris::harness {

using netcore::Architecture;

// ------------------------------------------------------------------ ArchSpec

ArchSpec ArchSpec::parse(const std::string& label) {
  ArchSpec a;
  a.label = label;
  if (label == "direct") return a;

  const auto dash = label.find('-');
  require(dash != std::string::npos, ErrorCode::config_error, "bad architecture label '" + label + "'");
  const std::string kind = label.substr(0, dash);
  std::string rest = label.substr(dash + 1);
  if (kind == "active") {
    a.kind = Kind::active;
  } else if (kind == "passive") {
    a.kind = Kind::passive;
  } else {
    throw Error(ErrorCode::config_error, "bad architecture kind in '" + label + "'");
  }

  if (rest == "drs") {
    a.group_size = 1;
    return a;
  }
  const auto dash2 = rest.rfind('-');
  require(dash2 != std::string::npos, ErrorCode::config_error,
          "architecture '" + label + "' needs a -r or -nr suffix");
  const std::string recip = rest.substr(dash2 + 1);
  const std::string topo = rest.substr(0, dash2);
  require(recip == "r" || recip == "nr", ErrorCode::config_error,
          "architecture '" + label + "' needs a -r or -nr suffix");
  a.reciprocal = recip == "r";
  if (topo == "full") {
    a.group_size = 0;
  } else if (topo.rfind("group", 0) == 0) {
    int n = 0;
    const char* first = topo.data() + 5;
    const char* last = topo.data() + topo.size();
    auto [ptr, ec] = std::from_chars(first, last, n);
    require(ec == std::errc{} && ptr == last && n >= 1, ErrorCode::config_error,
            "bad group size in '" + label + "'");
    a.group_size = n;
  } else {
    throw Error(ErrorCode::config_error, "bad topology in '" + label + "'");
  }
  return a;
}

Architecture ArchSpec::resolve(int elements) const {
  require(kind != Kind::direct, ErrorCode::config_error, "direct link has no RIS architecture");
  if (group_size == 0) return Architecture::fully_connected(elements, reciprocal);
  if (group_size == 1) return Architecture::single_connected(elements);
  require(elements % group_size == 0, ErrorCode::config_error,
          "group size " + std::to_string(group_size) + " does not divide N_I = " +
              std::to_string(elements));
  return Architecture::group_connected(elements, group_size, reciprocal);
}

// ------------------------------------------------------------------ config

namespace {

using nlohmann::json;

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("key '") + key + "': " + e.what());
  }
}

channel::Point2 read_point(const json& j, const char* key, channel::Point2 fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  require(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(),
          ErrorCode::config_error, std::string("geometry.") + key + " must be [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

const std::set<std::string> kExperiments = {"siso-scaling", "siso-asymptotic", "mimo-power-sweep",
                                            "mimo-element-sweep", "validate"};

bool is_siso(const std::string& e) { return e == "siso-scaling" || e == "siso-asymptotic"; }

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("invalid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::config_error, "config must be a JSON object");

  static const std::set<std::string> known = {
      "experiment", "geometry", "n_t",  "n_r",   "streams",     "n_i",    "kappa",
      "archs",      "p_total_dbm", "power_split", "noise_dbm", "siso", "sweep",
      "trials",     "master_seed", "output", "max_iters", "tol", "timing"};
  for (const auto& [k, v] : j.items()) {
    require(known.count(k) > 0, ErrorCode::config_error, "unknown key '" + k + "'");
  }

  ExperimentConfig c;
  read(j, "experiment", c.experiment);
  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    require(g.is_object(), ErrorCode::config_error, "geometry must be an object");
    c.geometry.tx = read_point(g, "tx", c.geometry.tx);
    c.geometry.ris = read_point(g, "ris", c.geometry.ris);
    c.geometry.rx = read_point(g, "rx", c.geometry.rx);
  }
  read(j, "n_t", c.n_t);
  read(j, "n_r", c.n_r);
  read(j, "streams", c.streams);
  read(j, "n_i", c.n_i);
  read(j, "kappa", c.kappa);
  read(j, "archs", c.archs);
  read(j, "p_total_dbm", c.p_total_dbm);
  if (j.contains("power_split")) {
    const json& s = j.at("power_split");
    read(s, "tx", c.tx_fraction);
    read(s, "ris", c.ris_fraction);
  }
  read(j, "noise_dbm", c.noise_dbm);
  if (j.contains("siso")) {
    const json& s = j.at("siso");
    read(s, "p_t", c.p_t);
    read(s, "p_a", c.p_a);
    read(s, "p_t_passive", c.p_t_passive);
    read(s, "zeta_ri_db", c.zeta_ri_db);
    read(s, "zeta_it_db", c.zeta_it_db);
  }
  read(j, "sweep", c.sweep);
  read(j, "trials", c.trials);
  read(j, "master_seed", c.master_seed);
  read(j, "output", c.output);
  read(j, "max_iters", c.max_iters);
  read(j, "tol", c.tol);
  read(j, "timing", c.timing);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::config_error, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::config_error, m); };
  if (kExperiments.count(experiment) == 0) fail("unknown experiment '" + experiment + "'");
  if (experiment == "validate") return;
  if (trials < 1) fail("trials must be >= 1");
  if (sweep.empty()) fail("sweep grid must be non-empty");
  if (archs.empty()) fail("architecture list must be non-empty");
  if (std::abs(tx_fraction + ris_fraction - 1.0) > 1e-9 || tx_fraction <= 0.0 || ris_fraction < 0.0) {
    fail("power split fractions must be non-negative and sum to 1");
  }
  if (kappa < 0.0) fail("kappa must be non-negative");
  if (max_iters < 1 || !(tol > 0.0)) fail("max_iters must be >= 1 and tol > 0");
  try {
    geometry.validate();
  } catch (const Error& e) {
    fail(e.what());
  }

  const bool element_sweep = experiment == "siso-scaling" || experiment == "siso-asymptotic" ||
                             experiment == "mimo-element-sweep";
  std::vector<int> element_counts;
  if (element_sweep) {
    for (double v : sweep) {
      if (v < 1.0 || v != std::floor(v) || v > 1e7) fail("element sweep values must be positive integers");
      element_counts.push_back(static_cast<int>(v));
    }
  } else {
    if (n_i < 1) fail("n_i must be >= 1");
    element_counts.push_back(n_i);
  }
  if (is_siso(experiment)) {
    if (!(p_t > 0.0 && p_a > 0.0 && p_t_passive > 0.0)) fail("siso powers must be positive");
  } else {
    if (n_t < 1 || n_r < 1 || streams < 1 || streams > std::min(n_t, n_r)) {
      fail("need 1 <= streams <= min(n_t, n_r)");
    }
  }
  for (const auto& label : archs) {
    ArchSpec a;
    try {
      a = ArchSpec::parse(label);
    } catch (const Error& e) {
      fail(e.what());
    }
    if (a.kind == ArchSpec::Kind::direct) {
      if (is_siso(experiment)) fail("'direct' is not available for SISO experiments");
      continue;
    }
    if (experiment == "siso-asymptotic") continue;
    for (int n : element_counts) {
      try {
        a.resolve(n);
      } catch (const Error& e) {
        fail(e.what());
      }
    }
  }
}

// ------------------------------------------------------------------ experiments

namespace {

struct Task {
  int sweep_index;
  int trial;
};

// Rows produced by one (sweep point, trial) task, one bucket per architecture.
struct TaskOutput {
  std::vector<std::vector<ResultRow>> per_arch;
  std::vector<bool> failed;
};

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

siso::ScalingKind scaling_kind(const ArchSpec& a, int elements) {
  const bool active = a.kind == ArchSpec::Kind::active;
  if (a.group_size == 1) return active ? siso::ScalingKind::active_d : siso::ScalingKind::passive_d;
  if (a.group_size == 0 || a.group_size == elements) {
    return active ? siso::ScalingKind::active_bd_full : siso::ScalingKind::passive_bd_full;
  }
  return active ? siso::ScalingKind::active_bd_group : siso::ScalingKind::passive_bd_group;
}

siso::ScalingParams scaling_params(const ExperimentConfig& c) {
  const double noise = dbm_to_watts(c.noise_dbm);
  return {c.p_t, c.p_a, c.p_t_passive, noise, noise,
          db_to_linear(c.zeta_ri_db), db_to_linear(c.zeta_it_db)};
}

siso::SisoChannel siso_channel(const ExperimentConfig& c, int elements, int trial) {
  auto draw = [&](channel::Link link, double zeta_db, int rows, int cols) {
    channel::FadingSpec spec;
    spec.kappa = c.kappa;
    spec.pathloss_linear = db_to_linear(zeta_db);
    spec.rows = rows;
    spec.cols = cols;
    channel::RandomStream stream(c.master_seed, static_cast<std::uint64_t>(trial),
                                 static_cast<std::uint64_t>(link));
    return channel::draw_rician(spec, stream);
  };
  siso::SisoChannel ch;
  ch.h_it = draw(channel::Link::it, c.zeta_it_db, elements, 1).col(0);
  ch.h_ri = draw(channel::Link::ri, c.zeta_ri_db, 1, elements).row(0);
  return ch;
}

void siso_task(const ExperimentConfig& c, const std::vector<ArchSpec>& archs, const Task& t,
               TaskOutput& out) {
  const int elements = static_cast<int>(c.sweep[t.sweep_index]);
  const siso::SisoChannel ch = siso_channel(c, elements, t.trial);
  const double noise = dbm_to_watts(c.noise_dbm);
  const siso::PowerBudget pb{c.p_t, c.p_a, c.p_t_passive, noise, noise};
  for (std::size_t a = 0; a < archs.size(); ++a) {
    ResultRow row{c.experiment, archs[a].label, c.sweep[t.sweep_index], t.trial, "snr", 0.0,
                  c.master_seed, 0.0};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Architecture arch = archs[a].resolve(elements);
      if (archs[a].kind == ArchSpec::Kind::active) {
        row.value = siso::solve(ch, pb, arch).snr;
      } else {
        row.value = siso::closed_form_passive_snr(ch, pb, arch.group_size());
      }
    } catch (const Error& e) {
      row.metric = std::string("error:") + to_string(e.code());
      out.failed[a] = true;
    }
    if (c.timing) row.ms = elapsed_ms(t0);
    out.per_arch[a].push_back(row);
  }
}

void mimo_task(const ExperimentConfig& c, const std::vector<ArchSpec>& archs, const Task& t,
               TaskOutput& out) {
  const bool power_sweep = c.experiment == "mimo-power-sweep";
  const double sweep = c.sweep[t.sweep_index];
  const int elements = power_sweep ? c.n_i : static_cast<int>(sweep);
  const double p_tot = dbm_to_watts(power_sweep ? sweep : c.p_total_dbm);
  const double noise = dbm_to_watts(c.noise_dbm);
  const netcore::NoiseModel nm{noise, noise};

  const auto ch = channel::generate_realization(c.geometry, {c.n_t, elements, c.n_r}, c.kappa,
                                                c.master_seed, static_cast<std::uint64_t>(t.trial));
  mimo::WmmseOptions opts;
  opts.max_iters = c.max_iters;
  opts.tol = c.tol;

  for (std::size_t a = 0; a < archs.size(); ++a) {
    const ArchSpec& spec = archs[a];
    ResultRow rate{c.experiment, spec.label, sweep, t.trial, "rate", 0.0, c.master_seed, 0.0};
    ResultRow iters = rate;
    iters.metric = "iterations";
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (spec.kind == ArchSpec::Kind::direct) {
        rate.value = mimo::waterfilling_rate(ch.h_rt, p_tot, noise);
        iters.metric.clear();
      } else if (spec.kind == ArchSpec::Kind::active) {
        const auto p = mimo::MimoProblem::make(ch, spec.resolve(elements), c.streams,
                                               c.tx_fraction * p_tot, c.ris_fraction * p_tot, nm);
        const auto s = mimo::wmmse_optimize(p, opts);
        rate.value = s.rate_trace.back();
        iters.value = s.iterations;
      } else {
        const auto p = mimo::MimoProblem::make(ch, spec.resolve(elements), c.streams, p_tot, 0.0, nm);
        baselines::PassiveOptions po;
        po.outer = opts;
        const auto s = spec.group_size == 1 ? baselines::passive_drs_mimo(p, po)
                                            : baselines::passive_bdris_mimo(p, po);
        rate.value = s.rate_trace.back();
        iters.value = s.iterations;
      }
    } catch (const Error& e) {
      rate.metric = std::string("error:") + to_string(e.code());
      iters.metric.clear();
      out.failed[a] = true;
    }
    if (c.timing) rate.ms = elapsed_ms(t0);
    out.per_arch[a].push_back(rate);
    if (!iters.metric.empty()) out.per_arch[a].push_back(iters);
  }
}

// Runs fn(i) for i in [0, n) on `threads` workers. Results must be written by
// index so completion order never matters.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void analytic_rows(const ExperimentConfig& c, const std::vector<ArchSpec>& archs,
                   std::vector<ResultRow>& rows) {
  const siso::ScalingParams params = scaling_params(c);
  for (const auto& a : archs) {
    for (double s : c.sweep) {
      const int elements = static_cast<int>(s);
      const int ng = a.group_size == 0 ? elements : a.group_size;
      ResultRow row{c.experiment, a.label, s, -1, "snr_theory", 0.0, c.master_seed, 0.0};
      try {
        row.value = siso::asymptotic_snr(scaling_kind(a, elements), elements, ng, params);
      } catch (const Error& e) {
        row.metric = std::string("error:") + to_string(e.code());
      }
      rows.push_back(row);
    }
  }
}

}  // namespace

int resolve_threads(std::optional<int> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char* env = std::getenv("BDRIS_THREADS")) {
    int n = 0;
    const char* end = env + std::char_traits<char>::length(env);
    auto [ptr, ec] = std::from_chars(env, end, n);
    if (ec == std::errc{} && ptr == end && n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

RunResult run_experiment(const ExperimentConfig& config, int threads) {
  config.validate();
  RunResult result;

  if (config.experiment == "validate") {
    ValidateOptions vo;
    vo.seed = config.master_seed;
    const ValidationReport report = validate_suite(vo);
    for (const auto& chk : report.checks) {
      result.rows.push_back({config.experiment, chk.name, 0.0, -1, "residual", chk.residual,
                             config.master_seed, 0.0});
      result.rows.push_back({config.experiment, chk.name, 0.0, -1, "passed",
                             chk.passed ? 1.0 : 0.0, config.master_seed, 0.0});
      result.total_trials += 1;
      if (!chk.passed) result.failed_trials += 1;
    }
    result.summary = summarize(result.rows);
    return result;
  }

  std::vector<ArchSpec> archs;
  for (const auto& l : config.archs) archs.push_back(ArchSpec::parse(l));

  if (config.experiment == "siso-asymptotic") {
    analytic_rows(config, archs, result.rows);
    const auto cross = siso::crossover_elements(scaling_params(config));
    result.rows.push_back({config.experiment, "crossover", 0.0, -1, "n_bar", cross.n_bar,
                           config.master_seed, 0.0});
    result.rows.push_back({config.experiment, "crossover", 0.0, -1, "n_tilde", cross.n_tilde,
                           config.master_seed, 0.0});
    result.summary = summarize(result.rows);
    return result;
  }

  std::vector<Task> tasks;
  for (int s = 0; s < static_cast<int>(config.sweep.size()); ++s) {
    for (int t = 0; t < config.trials; ++t) tasks.push_back({s, t});
  }
  std::vector<TaskOutput> outputs(tasks.size());
  const bool siso_run = is_siso(config.experiment);
  parallel_for(tasks.size(), threads, [&](std::size_t i) {
    TaskOutput& out = outputs[i];
    out.per_arch.assign(archs.size(), {});
    out.failed.assign(archs.size(), false);
    if (siso_run) {
      siso_task(config, archs, tasks[i], out);
    } else {
      mimo_task(config, archs, tasks[i], out);
    }
  });

  // Row order: arch, sweep, trial, metric.
  for (std::size_t a = 0; a < archs.size(); ++a) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      for (const auto& row : outputs[i].per_arch[a]) result.rows.push_back(row);
      result.total_trials += 1;
      if (outputs[i].failed[a]) result.failed_trials += 1;
    }
  }
  if (siso_run) analytic_rows(config, archs, result.rows);
  result.summary = summarize(result.rows);
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  struct Acc {
    std::vector<double> values;
  };
  std::vector<std::tuple<std::string, double, std::string>> order;
  std::map<std::tuple<std::string, double, std::string>, Acc> acc;
  for (const auto& r : rows) {
    if (r.metric.rfind("error:", 0) == 0) continue;
    const auto key = std::make_tuple(r.arch, r.sweep, r.metric);
    auto it = acc.find(key);
    if (it == acc.end()) {
      order.push_back(key);
      it = acc.emplace(key, Acc{}).first;
    }
    it->second.values.push_back(r.value);
  }
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const auto& v = acc.at(key).values;
    SummaryRow s;
    s.arch = std::get<0>(key);
    s.sweep = std::get<1>(key);
    s.metric = std::get<2>(key);
    s.count = static_cast<int>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / s.count;
    if (s.count > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.std = std::sqrt(ss / (s.count - 1));
    }
    out.push_back(s);
  }
  return out;
}

// ------------------------------------------------------------------ CSV

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  require(ec == std::errc{}, ErrorCode::io_error, "float formatting failed");
  return std::string(buf, ptr);
}

namespace {

constexpr const char* kHeader = "experiment,arch,sweep,trial,metric,value,seed,ms";

void check_field(const std::string& s) {
  require(s.find_first_of(",\n\r\"") == std::string::npos, ErrorCode::io_error,
          "CSV field contains a separator: '" + s + "'");
}

double parse_double(const std::string& s, const std::string& path) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc{} && ptr == s.data() + s.size(), ErrorCode::io_error,
          path + ": bad number '" + s + "'");
  return v;
}

template <class Int>
Int parse_int(const std::string& s, const std::string& path) {
  Int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc{} && ptr == s.data() + s.size(), ErrorCode::io_error,
          path + ": bad integer '" + s + "'");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::io_error, "cannot write '" + path + "'");
  return out;
}

}  // namespace

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << kHeader << '\n';
  for (const auto& r : rows) {
    check_field(r.experiment);
    check_field(r.arch);
    check_field(r.metric);
    out << r.experiment << ',' << r.arch << ',' << format_double(r.sweep) << ',' << r.trial << ','
        << r.metric << ',' << format_double(r.value) << ',' << r.seed << ',' << format_double(r.ms)
        << '\n';
  }
  require(static_cast<bool>(out), ErrorCode::io_error, "write failed for '" + path + "'");
}

std::vector<ResultRow> parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot read '" + path + "'");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == kHeader, ErrorCode::io_error,
          path + ": missing or unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1) {
      f.push_back(line.substr(start, pos - start));
    }
    f.push_back(line.substr(start));
    require(f.size() == 8, ErrorCode::io_error, path + ": expected 8 fields in '" + line + "'");
    ResultRow r;
    r.experiment = f[0];
    r.arch = f[1];
    r.sweep = parse_double(f[2], path);
    r.trial = parse_int<std::int64_t>(f[3], path);
    r.metric = f[4];
    r.value = parse_double(f[5], path);
    r.seed = parse_int<std::uint64_t>(f[6], path);
    r.ms = parse_double(f[7], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "arch,sweep,metric,mean,std,n\n";
  for (const auto& r : rows) {
    out << r.arch << ',' << format_double(r.sweep) << ',' << r.metric << ','
        << format_double(r.mean) << ',' << format_double(r.std) << ',' << r.count << '\n';
  }
  require(static_cast<bool>(out), ErrorCode::io_error, "write failed for '" + path + "'");
}

// ------------------------------------------------------------------ validate

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.passed ? "PASS " : "FAIL ") << c.name << " residual=" << format_double(c.residual)
       << " tol=" << format_double(c.tolerance);
    if (!c.detail.empty()) os << " (" << c.detail << ")";
    os << '\n';
  }
  return os.str();
}

namespace {

CMatrix random_matrix(channel::RandomStream& rs, int rows, int cols) {
  CMatrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = rs.complex_normal();
  }
  return m;
}

CMatrix random_unitary(channel::RandomStream& rs, int n) {
  Eigen::HouseholderQR<CMatrix> qr(random_matrix(rs, n, n));
  return qr.householderQ() * CMatrix::Identity(n, n);
}

Check make_check(std::string name, double residual, double tol, std::string detail = {}) {
  return Check{std::move(name), residual, tol, residual <= tol, std::move(detail)};
}

// Accelerated projected gradient on the ellipsoid, in whitened coordinates.
double projected_gradient_oracle(const mimo::QcqpCanonical& q, channel::RandomStream& rs, int starts) {
  Eigen::LLT<CMatrix> llt(q.d);
  const auto l = llt.matrixL();
  const CMatrix y = l.solve(q.b);
  CMatrix bt = l.solve(CMatrix(y.adjoint()));
  bt = 0.5 * (bt + bt.adjoint());
  const CVector ct = l.solve(q.c);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(bt, Eigen::EigenvaluesOnly);
  const double lip = 2.0 * std::max(es.eigenvalues().maxCoeff(), 1e-300);
  const double radius = std::sqrt(q.budget);
  auto project = [&](CVector z) {
    const double n = z.norm();
    if (n > radius) z *= radius / n;
    return z;
  };
  auto obj = [&](const CVector& z) { return z.dot(bt * z).real() - 2.0 * z.dot(ct).real(); };

  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s) {
    CVector z = project(random_matrix(rs, static_cast<int>(ct.size()), 1).col(0) * radius);
    CVector prev = z;
    double tk = 1.0;
    double fz = obj(z);
    for (int it = 0; it < 4000; ++it) {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      const CVector v = z + ((tk - 1.0) / tn) * (z - prev);
      const CVector next = project(v - (2.0 * (bt * v - ct)) / lip);
      const double fn = obj(next);
      prev = z;
      if (fn > fz) {  // adaptive restart
        tk = 1.0;
        continue;
      }
      z = next;
      fz = fn;
      tk = tn;
    }
    best = std::min(best, fz);
  }
  return best;
}

mimo::QcqpCanonical random_qcqp(channel::RandomStream& rs, int n) {
  mimo::QcqpCanonical q;
  const CMatrix x = random_matrix(rs, n, n);
  q.b = x * x.adjoint();
  const CMatrix y = random_matrix(rs, n, n);
  q.d = y * y.adjoint();
  q.d.diagonal().array() += 1.0;
  q.c = random_matrix(rs, n, 1).col(0);
  // Mix active and inactive constraints.
  q.budget = 0.05 + 2.0 * rs.uniform();
  return q;
}

}  // namespace

ValidationReport validate_suite(const ValidateOptions& options) {
  ValidationReport report;
  const int reps = std::max(1, options.repetitions);
  const std::uint64_t seed = options.seed;

  // General vs simplified channel under matched, unilateral, isolated ports.
  {
    double worst = 0.0;
    for (int i = 0; i < reps; ++i) {
      channel::RandomStream rs(seed, i, 101);
      const int nt = 2, ni = 4, nr = 3;
      const CMatrix h_rt = random_matrix(rs, nr, nt), h_ri = random_matrix(rs, nr, ni),
                    h_it = random_matrix(rs, ni, nt);
      RVector amp(ni);
      for (int k = 0; k < ni; ++k) amp(k) = 1.0 + 3.0 * rs.uniform();
      const auto spec = netcore::ImpedanceNetworkSpec::matched(random_unitary(rs, ni),
                                                               random_unitary(rs, ni), amp);
      const CMatrix theta = netcore::assemble_theta(spec);
      const auto refl = netcore::general_active_reflection(spec);
      const auto s = netcore::PartitionedScattering::from_channels(h_rt, h_ri, h_it);
      const auto g = netcore::general_channel(s, CMatrix::Zero(nt, nt), CMatrix::Zero(nr, nr),
                                              refl.gamma_i, refl.pi_i);
      worst = std::max(worst, relative_difference(g.h, netcore::simplified_channel(h_rt, h_ri, h_it, theta)));
    }
    report.checks.push_back(make_check("general_vs_simplified_channel", worst, 1e-10));
  }

  // Takagi reconstruction.
  {
    double worst = 0.0;
    for (int i = 0; i < reps; ++i) {
      channel::RandomStream rs(seed, i, 102);
      const int n = 2 + i % 7;
      const CMatrix x = random_matrix(rs, n, n);
      const CMatrix a = x + x.transpose();
      const auto t = netcore::takagi(a);
      const CMatrix rec = t.q * t.sigma.cast<Complex>().asDiagonal() * t.q.transpose();
      worst = std::max({worst, relative_difference(rec, a), unitarity_error(t.q)});
    }
    report.checks.push_back(make_check("takagi_reconstruction", worst, 1e-10));
  }

  // QCQP: KKT slackness on random instances, then agreement with a projected-gradient oracle.
  {
    double worst_kkt = 0.0;
    double worst_feas = 0.0;
    double worst_gap = 0.0;
    const int oracle_instances = std::min(reps, 50);
    for (int i = 0; i < reps; ++i) {
      channel::RandomStream rs(seed, i, 103);
      const int n = 1 + i % 8;
      const auto q = random_qcqp(rs, n);
      const auto sol = mimo::solve_qcqp_ball(q);
      worst_kkt = std::max(worst_kkt, sol.mu * std::abs(sol.constraint - q.budget) / q.budget);
      worst_feas = std::max(worst_feas, (sol.constraint - q.budget) / q.budget);
      if (i < oracle_instances) {
        const double oracle = projected_gradient_oracle(q, rs, 20);
        const double mine = mimo::qcqp_objective(q, sol.x);
        worst_gap = std::max(worst_gap, std::abs(mine - oracle) / std::max(std::abs(oracle), 1e-300));
      }
    }
    report.checks.push_back(make_check("qcqp_kkt_slackness", worst_kkt, 1e-6));
    report.checks.push_back(make_check("qcqp_feasibility", std::max(worst_feas, 0.0), 1e-9));
    report.checks.push_back(make_check("qcqp_vs_projected_gradient", worst_gap, 1e-6));
  }

  // WMMSE: monotone trace, rate identity, feasibility, KKT of the Θ step.
  {
    double worst_drop = 0.0;
    double worst_identity = 0.0;
    double worst_power = 0.0;
    double worst_kkt = 0.0;
    const char* labels[] = {"active-drs", "active-group2-r", "active-full-nr", "active-group2-nr",
                            "active-full-r"};
    for (int i = 0; i < reps; ++i) {
      const auto spec = ArchSpec::parse(labels[i % 5]);
      const auto ch = channel::generate_realization(channel::Geometry::reference(), {2, 4, 2}, 1.0,
                                                    seed, static_cast<std::uint64_t>(1000 + i));
      const double p_tot = dbm_to_watts(10.0 + 5.0 * (i % 5));
      const double noise = dbm_to_watts(-90.0);
      const auto p = mimo::MimoProblem::make(ch, spec.resolve(4), 2, 0.99 * p_tot, 0.01 * p_tot,
                                             {noise, noise});
      mimo::WmmseOptions opts;
      opts.max_iters = 25;
      const auto s = mimo::wmmse_optimize(p, opts);
      for (std::size_t k = 1; k < s.rate_trace.size(); ++k) {
        worst_drop = std::max(worst_drop, s.rate_trace[k - 1] - s.rate_trace[k]);
      }
      const CMatrix h = p.channel(s.theta);
      const CMatrix r = mimo::noise_covariance(p.h_ri, s.theta, p.noise);
      const double rate = mimo::spectral_efficiency(h, s.f, r);
      const double logdet = std::log2(s.u.determinant().real());
      worst_identity = std::max(worst_identity, std::abs(logdet - rate));
      worst_power = std::max({worst_power, (s.f.squaredNorm() - p.p_t) / p.p_t,
                              (mimo::radiated_power(s.theta, p.h_it, s.f, noise) - p.p_a) / p.p_a});
      const auto q = p.arch.reciprocal() ? mimo::build_theta_qcqp_reciprocal(p, s.w, s.u, s.f)
                                         : mimo::build_theta_qcqp(p, s.w, s.u, s.f);
      const auto sol = mimo::solve_qcqp_ball(q);
      worst_kkt = std::max(worst_kkt, sol.mu * std::abs(sol.constraint - q.budget) / q.budget);
    }
    report.checks.push_back(make_check("wmmse_monotone", std::max(worst_drop, 0.0), 1e-6));
    report.checks.push_back(make_check("wmmse_rate_identity", worst_identity, 1e-8));
    report.checks.push_back(make_check("wmmse_power_feasible", std::max(worst_power, 0.0), 1e-9));
    report.checks.push_back(make_check("theta_step_kkt_slackness", worst_kkt, 1e-6));
  }

  // SISO: reciprocal optimum equals the non-reciprocal one and is feasible.
  {
    double worst = 0.0;
    double worst_feas = 0.0;
    std::string detail;
    for (int i = 0; i < reps; ++i) {
      channel::RandomStream rs(seed, i, 105);
      const int ng = 1 << (1 + i % 3);
      const int ni = 4 * ng;
      siso::SisoChannel ch;
      ch.h_it = random_matrix(rs, ni, 1).col(0) * 1e-3;
      ch.h_ri = random_matrix(rs, 1, ni).row(0) * 1e-3;
      const siso::PowerBudget pb{1.9, 0.1, 2.0, 1e-12, 1e-12};
      const auto nr = siso::solve_bdris_nonreciprocal(ch, pb, Architecture::group_connected(ni, ng, false));
      const auto arch_r = Architecture::group_connected(ni, ng, true);
      auto re = siso::solve_bdris_reciprocal(ch, pb, arch_r);
      worst = std::max(worst, std::abs(re.snr - nr.snr) / nr.snr);
      CMatrix theta = re.theta.value;
      if (options.perturb_symmetry) theta(0, 1) += 1e-3 * theta.norm();
      const auto rep = netcore::validate_theta(theta, arch_r, 1e-9);
      if (!rep.ok) {
        worst_feas = std::max(worst_feas, std::max(rep.violation, 1.0));
        detail = rep.reason;
      }
    }
    report.checks.push_back(make_check("siso_reciprocal_matches_nonreciprocal", worst, 1e-9));
    report.checks.push_back(make_check("siso_reciprocal_feasible", worst_feas, 0.0, detail));
  }

  // Symmetric map structure.
  {
    double worst = 0.0;
    for (int n = 1; n <= 6; ++n) {
      const mimo::SymmetricMap map(n);
      const RMatrix ptp = map.matrix().transpose() * map.matrix();
      for (int a = 0; a < ptp.rows(); ++a) {
        for (int b = 0; b < ptp.cols(); ++b) {
          const double want = a != b ? 0.0 : ptp(a, a);
          worst = std::max(worst, std::abs(ptp(a, b) - want));
          if (a == b && ptp(a, a) != 1.0 && ptp(a, a) != 2.0) worst = std::max(worst, 1.0);
        }
      }
      for (int r = 0; r < map.matrix().rows(); ++r) {
        worst = std::max(worst, std::abs(map.matrix().row(r).sum() - 1.0));
      }
    }
    report.checks.push_back(make_check("symmetric_map_structure", worst, 0.0));
  }
  return report;
}

}  // namespace bdris::harness
