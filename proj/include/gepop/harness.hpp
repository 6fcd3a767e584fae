#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "gepop/evolve.hpp"
#include "gepop/problems.hpp"
#include "gepop/rng.hpp"

namespace gepop {

/// Raised for malformed configs and inputs; the CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// How the K-Landscapes value tables are drawn across the matrix.
///
/// `shared` (default) uses one table for every k and run, so the parameter
/// k acts purely as the depth knob: with freshly drawn per-k tables the
/// instance-to-instance value offsets are larger than the k effect itself
/// and the measured hardness ordering is scrambled. `per_k` draws one
/// table per k (seed = k, shared by that configuration's runs); `per_run`
/// re-draws per run.
enum class KlandInstanceScheme { shared, per_k, per_run };

/// The full run matrix: problems x parameters x runs_per_config.
struct ExperimentConfig {
  std::vector<std::string> problems{"parity", "klandscapes"};
  std::vector<int> parity_params{3, 4, 5, 6, 7};
  std::vector<int> klandscapes_params{3, 4, 5, 6, 7};
  int runs_per_config = 5;
  std::uint64_t base_seed = 1;
  std::string out_dir = "out";
  int jobs = 0;  // 0 = one worker per hardware thread
  KlandInstanceScheme klandscapes_instance = KlandInstanceScheme::shared;
  std::uint64_t klandscapes_table_seed = 0;
  EvolutionConfig evolution;

  void validate() const {
    if (runs_per_config < 1) throw ConfigError("runs_per_config >= 1");
    if (problems.empty()) throw ConfigError("no problems selected");
    for (const auto& p : problems) {
      if (p != "parity" && p != "klandscapes")
        throw ConfigError("unknown problem '" + p + "'");
      if (p == "parity" && parity_params.empty())
        throw ConfigError("parity selected but parity_params is empty");
      if (p == "klandscapes" && klandscapes_params.empty())
        throw ConfigError("klandscapes selected but klandscapes_params is empty");
    }
    if (jobs < 0) throw ConfigError("jobs >= 0");
    try {
      evolution.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  const std::vector<int>& params_for(const std::string& problem) const {
    return problem == "parity" ? parity_params : klandscapes_params;
  }
};

/// One output row: a generation snapshot of one run.
struct RunRecord {
  std::string problem;
  int param = 0;
  int run = 0;
  int generation = 0;
  double bf = 0.0;
  double d = 0.0;
  double id = std::numeric_limits<double>::quiet_NaN();
  double id_fit = std::numeric_limits<double>::quiet_NaN();
};

// ---------------------------------------------------------------------------
// config file: flat `key = value` lines, '#' comments
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int n = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  }
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad real for " + key + ": '" + v + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  }
}

inline std::vector<int> parse_int_list(const std::string& key,
                                       const std::string& v) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) out.push_back(parse_int(key, item));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

}  // namespace detail

/// Apply one `key = value` setting. Shared by the config-file loader and
/// the command-line overrides.
inline void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                             const std::string& value) {
  using namespace detail;
  auto& evo = cfg.evolution;
  if (key == "problem") {
    cfg.problems = split_list(value);
  } else if (key == "parity_params") {
    cfg.parity_params = parse_int_list(key, value);
  } else if (key == "klandscapes_params") {
    cfg.klandscapes_params = parse_int_list(key, value);
  } else if (key == "runs_per_config") {
    cfg.runs_per_config = parse_int(key, value);
  } else if (key == "base_seed") {
    cfg.base_seed = parse_u64(key, value);
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "jobs") {
    cfg.jobs = parse_int(key, value);
  } else if (key == "klandscapes_instance") {
    if (value == "shared")
      cfg.klandscapes_instance = KlandInstanceScheme::shared;
    else if (value == "per_k")
      cfg.klandscapes_instance = KlandInstanceScheme::per_k;
    else if (value == "per_run")
      cfg.klandscapes_instance = KlandInstanceScheme::per_run;
    else
      throw ConfigError("klandscapes_instance must be shared, per_k or per_run");
  } else if (key == "klandscapes_table_seed") {
    cfg.klandscapes_table_seed = parse_u64(key, value);
  } else if (key == "population") {
    evo.population_size = parse_int(key, value);
  } else if (key == "offspring") {
    evo.offspring_count = parse_int(key, value);
  } else if (key == "generations") {
    evo.generations = parse_int(key, value);
  } else if (key == "tournament_size") {
    evo.tournament_size = parse_int(key, value);
  } else if (key == "genotype_bits") {
    evo.genotype_bits = parse_int(key, value);
  } else if (key == "crossover_rate") {
    evo.crossover_rate = parse_real(key, value);
  } else if (key == "mutation_prob") {
    evo.mutation_prob_per_bit = parse_real(key, value);
  } else if (key == "mapper") {
    if (value == "ge")
      evo.mapper = MapperKind::ge;
    else if (value == "whge")
      evo.mapper = MapperKind::whge;
    else
      throw ConfigError("mapper must be ge or whge");
  } else if (key == "codon_bits") {
    evo.ge.codon_bits = parse_int(key, value);
  } else if (key == "max_wraps") {
    evo.ge.max_wraps = parse_int(key, value);
  } else if (key == "depth_cap") {
    evo.whge.depth_cap = parse_int(key, value);
  } else if (key == "horizon") {
    evo.whge.horizon = parse_int(key, value);
  } else if (key == "id_fit") {
    if (value == "origin")
      evo.id_fit = IdFit::through_origin;
    else if (value == "free")
      evo.id_fit = IdFit::free_intercept;
    else
      throw ConfigError("id_fit must be origin or free");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    apply_config_key(cfg, detail::trim(t.substr(0, eq)),
                     detail::trim(t.substr(eq + 1)));
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// TSV output
// ---------------------------------------------------------------------------

/// Reals are printed with 6 significant digits; undefined values as `NaN`.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline void write_runs_tsv(const std::string& path,
                           const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << "problem\tparam\trun\tgeneration\tbf\td\tid\tid_fit\n";
  for (const auto& r : records) {
    out << r.problem << '\t' << r.param << '\t' << r.run << '\t'
        << r.generation << '\t' << format_real(r.bf) << '\t'
        << format_real(r.d) << '\t' << format_real(r.id) << '\t'
        << format_real(r.id_fit) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<RunRecord> read_runs_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read records file " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "problem\tparam\trun\tgeneration\tbf\td\tid\tid_fit")
    throw ConfigError(path + ": unexpected header");
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    RunRecord r;
    auto next = [&]() -> std::string {
      if (!std::getline(ss, field, '\t'))
        throw ConfigError(path + ": short row '" + line + "'");
      return field;
    };
    r.problem = next();
    r.param = detail::parse_int("param", next());
    r.run = detail::parse_int("run", next());
    r.generation = detail::parse_int("generation", next());
    r.bf = detail::parse_real("bf", next());
    r.d = detail::parse_real("d", next());
    const auto id = next();
    r.id = id == "NaN" ? std::numeric_limits<double>::quiet_NaN()
                       : detail::parse_real("id", id);
    const auto id_fit = next();
    r.id_fit = id_fit == "NaN" ? std::numeric_limits<double>::quiet_NaN()
                               : detail::parse_real("id_fit", id_fit);
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------------------
// run matrix
// ---------------------------------------------------------------------------

/// Per-run seed: base_seed xor a stable hash of the run coordinates, so
/// any single run can be reproduced in isolation.
inline std::uint64_t run_seed(std::uint64_t base_seed,
                              const std::string& problem, int param,
                              int run_index) {
  return base_seed ^ fnv1a64(problem + "/" + std::to_string(param) + "/" +
                             std::to_string(run_index));
}

namespace detail {

struct RunTask {
  std::string problem;
  int param;
  int run;
};

inline Problem make_problem(const ExperimentConfig& cfg,
                            const RunTask& task) {
  if (task.problem == "parity") return make_parity_problem(task.param);
  std::uint64_t instance_seed = cfg.klandscapes_table_seed;
  if (cfg.klandscapes_instance == KlandInstanceScheme::per_k)
    instance_seed = static_cast<std::uint64_t>(task.param);
  else if (cfg.klandscapes_instance == KlandInstanceScheme::per_run)
    instance_seed = run_seed(cfg.base_seed, task.problem, task.param, task.run);
  return make_klandscapes_problem(task.param, instance_seed);
}

}  // namespace detail

/// Execute the whole run matrix and write <out_dir>/runs.tsv. Runs are
/// independent and may execute on a worker pool; records are assembled in
/// canonical (problem, param, run, generation) order afterwards, so the
/// output is byte-identical for any jobs value.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  std::vector<detail::RunTask> tasks;
  for (const auto& problem : cfg.problems)
    for (const int param : cfg.params_for(problem))
      for (int run = 0; run < cfg.runs_per_config; ++run)
        tasks.push_back({problem, param, run});

  std::vector<std::vector<SnapshotMetrics>> results(tasks.size());
  std::vector<std::string> failures(tasks.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const auto t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      try {
        const auto problem = detail::make_problem(cfg, tasks[t]);
        Rng rng(run_seed(cfg.base_seed, tasks[t].problem, tasks[t].param,
                         tasks[t].run));
        results[t] = run_evolution(cfg.evolution, problem, rng);
      } catch (const std::exception& e) {
        failures[t] = e.what();
      }
    }
  };

  unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                               : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, tasks.size());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t t = 0; t < tasks.size(); ++t)
    if (!failures[t].empty())
      throw std::runtime_error("run " + tasks[t].problem + "/" +
                               std::to_string(tasks[t].param) + "/" +
                               std::to_string(tasks[t].run) + " failed: " +
                               failures[t]);

  std::vector<RunRecord> records;
  records.reserve(tasks.size() * (cfg.evolution.generations + 1));
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (const auto& snap : results[t]) {
      RunRecord r;
      r.problem = tasks[t].problem;
      r.param = tasks[t].param;
      r.run = tasks[t].run;
      r.generation = snap.generation;
      r.bf = snap.best_fitness;
      r.d = snap.diversity;
      r.id = snap.id;
      r.id_fit = snap.id_fit_quality;
      records.push_back(std::move(r));
    }
  }

  // record-count conservation: problems x params x runs x (generations+1)
  std::size_t expected = 0;
  for (const auto& problem : cfg.problems)
    expected += cfg.params_for(problem).size() * cfg.runs_per_config *
                (cfg.evolution.generations + 1);
  if (records.size() != expected)
    throw std::logic_error("run_experiment: record count mismatch");

  write_runs_tsv((std::filesystem::path(cfg.out_dir) / "runs.tsv").string(),
                 records);
  return records;
}

// ---------------------------------------------------------------------------
// aggregation
// ---------------------------------------------------------------------------

/// Mean across runs for one (problem, param, generation) cell. The id mean
/// skips NaN runs; it is NaN only when every run's estimate was undefined.
struct AggregateRow {
  std::string problem;
  int param = 0;       // written to the `k` column
  int generation = 0;  // written to the `iterations` column
  double bf = 0.0;
  double d = 0.0;
  double id = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<AggregateRow> aggregate_records(
    const std::vector<RunRecord>& records) {
  if (records.empty()) throw ConfigError("aggregate: no records");

  // completeness check: every (problem, param) must cover the same full
  // (run, generation) grid
  std::set<int> runs, gens;
  for (const auto& r : records) {
    runs.insert(r.run);
    gens.insert(r.generation);
  }
  std::map<std::pair<std::string, int>, std::set<std::pair<int, int>>> cells;
  for (const auto& r : records)
    cells[{r.problem, r.param}].insert({r.run, r.generation});
  std::string missing;
  for (const auto& [key, have] : cells)
    for (const int run : runs)
      for (const int gen : gens)
        if (!have.count({run, gen}))
          missing += " " + key.first + "/" + std::to_string(key.second) +
                     "/run" + std::to_string(run) + "/gen" +
                     std::to_string(gen);
  if (!missing.empty()) throw ConfigError("aggregate: missing cells:" + missing);

  struct Acc {
    int n = 0;
    double bf = 0, d = 0;
    int id_n = 0;
    double id = 0;
  };
  std::map<std::tuple<std::string, int, int>, Acc> acc;
  std::vector<std::tuple<std::string, int, int>> order;
  for (const auto& r : records) {
    const auto key = std::make_tuple(r.problem, r.param, r.generation);
    auto it = acc.find(key);
    if (it == acc.end()) {
      it = acc.emplace(key, Acc{}).first;
      order.push_back(key);
    }
    auto& a = it->second;
    ++a.n;
    a.bf += r.bf;
    a.d += r.d;
    if (!std::isnan(r.id)) {
      ++a.id_n;
      a.id += r.id;
    }
  }
  std::sort(order.begin(), order.end());
  std::vector<AggregateRow> rows;
  rows.reserve(order.size());
  for (const auto& key : order) {
    const auto& a = acc.at(key);
    AggregateRow row;
    std::tie(row.problem, row.param, row.generation) = key;
    row.bf = a.bf / a.n;
    row.d = a.d / a.n;
    row.id = a.id_n > 0 ? a.id / a.id_n
                        : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Read a records file and write one aggregated TSV per problem
/// (<out_dir>/<problem>.tsv) with the plot-data columns
/// k, iterations, bf, d, id. Returns the written paths.
inline std::vector<std::string> aggregate(const std::string& records_path,
                                          const std::string& out_dir) {
  const auto rows = aggregate_records(read_runs_tsv(records_path));
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  std::set<std::string> problems;
  for (const auto& r : rows) problems.insert(r.problem);
  for (const auto& problem : problems) {
    const auto path =
        (std::filesystem::path(out_dir) / (problem + ".tsv")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "k\titerations\tbf\td\tid\n";
    for (const auto& r : rows) {
      if (r.problem != problem) continue;
      out << r.param << '\t' << r.generation << '\t' << format_real(r.bf)
          << '\t' << format_real(r.d) << '\t' << format_real(r.id) << '\n';
    }
    written.push_back(path);
  }
  return written;
}

// ---------------------------------------------------------------------------
// plot emission
// ---------------------------------------------------------------------------

/// gnuplot script: three panels (best fitness, diversity, id) against
/// iterations, one series per parameter value.
inline std::string plot_script(const std::string& problem,
                               const std::string& data_filename,
                               const std::vector<int>& params) {
  std::string s;
  s += "# gnuplot script generated from " + data_filename + "\n";
  s += "set terminal pngcairo size 1350,400\n";
  s += "set output '" + problem + ".png'\n";
  s += "set datafile separator '\\t'\n";
  s += "set datafile missing 'NaN'\n";
  s += "set key outside bottom center horizontal\n";
  s += "set grid\n";
  s += "set xlabel 'iterations'\n";
  s += "set multiplot layout 1,3\n";
  const auto panel = [&](const std::string& title, int column) {
    s += "set title '" + title + "'\n";
    s += "plot";
    bool first = true;
    for (const int p : params) {
      if (!first) s += ",";
      first = false;
      s += " '" + data_filename + "' using ($1==" + std::to_string(p) +
           "?$2:1/0):" + std::to_string(column) + " with lines title '" +
           std::to_string(p) + "'";
    }
    s += "\n";
  };
  panel("best fitness (lower is better)", 3);
  panel("diversity", 4);
  panel("ID", 5);
  s += "unset multiplot\n";
  return s;
}

/// Write one <out_dir>/<problem>.gp per problem. A problem with an empty
/// parameter list gets no file, only a warning on stderr.
inline std::vector<std::string> emit_plot_data(const ExperimentConfig& cfg) {
  std::vector<std::string> written;
  for (const auto& problem : cfg.problems) {
    const auto& params = cfg.params_for(problem);
    if (params.empty()) {
      std::fprintf(stderr, "warning: no parameters for %s, skipping plot\n",
                   problem.c_str());
      continue;
    }
    const auto path =
        (std::filesystem::path(cfg.out_dir) / (problem + ".gp")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << plot_script(problem, problem + ".tsv", params);
    written.push_back(path);
  }
  return written;
}

}  // namespace gepop
