/*
 * Copyright 2026 The FLoRA Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "flora/errors.hpp"
#include "flora/eval.hpp"
#include "flora/federation.hpp"
#include "flora/ingest.hpp"
#include "flora/local_hpo.hpp"
#include "flora/manifest.hpp"

namespace flora::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kDefaultOutDir = "flora_out";
constexpr const char* kOutDirEnv = "FLORA_OUT_DIR";

// Options shared by every subcommand. Overrides are applied only when
// the flag was given on the command line.
struct Common {
  std::string manifest;
  std::string data;
  std::string label;
  std::string positive;
  std::string name;
  std::string out;
  std::uint64_t seed = 0;
  int parties = 0;
  int trials = 0;
  int oracle_budget = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::string surface;
  std::string partition;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--manifest", c.manifest, "Experiment manifest file");
  sub->add_option("--data", c.data, "Dataset CSV or synthetic:... source");
  sub->add_option("--label", c.label, "Label column of --data");
  sub->add_option("--positive", c.positive, "Label value mapped to class 1");
  sub->add_option("--name", c.name, "Dataset name");
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--seed", c.seed, "Global seed");
  sub->add_option("--parties", c.parties, "Number of parties");
  sub->add_option("--trials", c.trials, "Local HPO trials per party");
  sub->add_option("--alpha", c.alpha, "SGM+U exploration weight");
  sub->add_option("--oracle-budget", c.oracle_budget, "Centralized oracle budget");
  sub->add_option("--surface", c.surface, "sgm, sgm-u, mplm, aplm or all")
      ->check(CLI::IsMember({"sgm", "sgm-u", "mplm", "aplm", "all"}));
  sub->add_option("--partition", c.partition, "iid or label-skew")
      ->check(CLI::IsMember({"iid", "label-skew"}));
  sub->add_option("--beta", c.beta, "Dirichlet concentration for label-skew");
}

std::string read_artifact(const std::string& path, const std::string& phase) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("[" + phase + "] cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw RuntimeFailure("failed writing '" + path.string() + "'");
}

ExperimentManifest resolve_manifest(const Common& c, const CLI::App& sub) {
  ExperimentManifest m;
  if (!c.manifest.empty()) m = load_manifest(c.manifest);
  if (!c.data.empty()) {
    DatasetEntry e;
    e.source = is_synthetic_source(c.data)
                   ? c.data
                   : fs::absolute(c.data).lexically_normal().string();
    e.label = c.label;
    e.positive = c.positive;
    e.name = !c.name.empty() ? c.name
             : is_synthetic_source(c.data) ? std::string("synthetic")
                                           : fs::path(c.data).stem().string();
    if (e.label.empty() && !is_synthetic_source(e.source)) {
      throw ConfigError("--data needs --label");
    }
    m.datasets = {e};
  }
  if (sub.count("--seed")) m.seeds = {c.seed};
  if (sub.count("--parties")) m.parties = {c.parties};
  if (sub.count("--trials")) m.federation.trials = c.trials;
  if (sub.count("--alpha")) m.federation.surface.alpha = c.alpha;
  if (sub.count("--oracle-budget")) m.oracle_budget = c.oracle_budget;
  if (sub.count("--beta")) m.federation.beta = c.beta;
  if (sub.count("--partition")) {
    m.federation.partition = parse_partition_scheme(c.partition);
  }
  if (sub.count("--surface")) {
    if (c.surface == "all") {
      m.surfaces.assign(std::begin(kAllSurfaceKinds), std::end(kAllSurfaceKinds));
    } else {
      m.surfaces = {parse_surface_kind(c.surface)};
    }
  }
  if (!c.out.empty()) {
    m.output_dir = c.out;
  } else if (m.output_dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    m.output_dir = env && *env ? env : kDefaultOutDir;
  }
  m.check();
  return m;
}

// Phase subcommands operate on a single (p, seed) cell.
FederationConfig single_cell(const ExperimentManifest& m) {
  if (m.seeds.size() != 1 || m.parties.size() != 1) {
    throw ConfigError(
        "phase subcommands run one cell; select it with --seed and --parties");
  }
  FederationConfig fed = m.federation;
  fed.seed = m.seeds.front();
  fed.parties = m.parties.front();
  fed.check();
  return fed;
}

std::string holdout_header(const HpSpace& space) {
  std::string h = "dataset,p,surface,seed,a_holdout,a_star_holdout,b_holdout";
  for (const auto& d : space.domains()) h += ',' + d.name;
  return h + '\n';
}

std::string holdout_row(const RegretReport& r, const HpSpace& space) {
  std::string s = r.dataset + ',' + std::to_string(r.parties) + ',' +
                  std::string(to_string(r.surface)) + ',' + std::to_string(r.seed) +
                  ',' + format_double(r.a_holdout) + ',' +
                  format_double(r.a_star_holdout) + ',' + format_double(r.b_holdout);
  for (const auto& d : space.domains()) {
    s += ',' + format_double(r.chosen_config.at(d.name));
  }
  return s + '\n';
}

std::string choice_csv(SurfaceKind kind, const HpConfig& config,
                       const HpSpace& space) {
  std::string s = "surface";
  for (const auto& d : space.domains()) s += ',' + d.name;
  s += '\n';
  s += to_string(kind);
  for (const auto& d : space.domains()) s += ',' + format_double(config.at(d.name));
  return s + '\n';
}

std::pair<SurfaceKind, HpConfig> parse_choice_csv(const std::string& text,
                                                  const HpSpace& space,
                                                  const std::string& path) {
  std::istringstream in(text);
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  auto fields = [](const std::string& line) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream s(line);
    while (std::getline(s, item, ',')) out.push_back(item);
    return out;
  };
  const auto h = fields(header);
  const auto v = fields(row);
  if (h.size() != space.size() + 1 || v.size() != h.size() || h[0] != "surface") {
    throw DataError("[evaluate] malformed choice file '" + path + "'");
  }
  HpConfig config;
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i] != space.domains()[i - 1].name) {
      throw DataError("[evaluate] choice file '" + path + "' column '" + h[i] +
                      "' does not match the search space");
    }
    try {
      std::size_t used = 0;
      config.set(h[i], std::stod(v[i], &used));
      if (used != v[i].size()) throw std::invalid_argument(v[i]);
    } catch (const std::logic_error&) {
      throw DataError("[evaluate] choice file '" + path + "': bad value '" +
                      v[i] + "'");
    }
  }
  try {
    return {parse_surface_kind(v[0]), config};
  } catch (const Error& e) {
    rethrow_in_phase("evaluate", e);
  }
}

std::vector<TrialLog> read_logs(const std::vector<std::string>& paths,
                                const HpSpace& space, const std::string& phase,
                                std::size_t* bytes) {
  std::vector<TrialLog> logs;
  for (const auto& path : paths) {
    const std::string text = read_artifact(path, phase);
    if (bytes) *bytes += text.size();
    try {
      logs.push_back(parse_trial_log_csv(text, space));
    } catch (const Error& e) {
      rethrow_in_phase(phase + " " + path, e);
    }
  }
  if (logs.empty()) throw ConfigError("[" + phase + "] no trial logs given");
  return logs;
}

void write_reports(const fs::path& dir, std::span<const RegretReport> rows) {
  const Summary s = summarize(rows);
  write_file(dir / "results.csv", results_csv(rows));
  write_file(dir / "summary.csv", summary_csv(s));
  write_file(dir / "results.md", results_markdown(s));
}

int cmd_run(const ExperimentManifest& manifest, std::ostream& out,
            std::ostream& err) {
  if (manifest.datasets.empty()) throw ConfigError("manifest lists no dataset");
  ExperimentManifest m = manifest;
  BenchmarkSpec spec;
  for (auto& entry : m.datasets) {
    Dataset data = load_dataset(entry);
    entry.checksum = checksum(data);
    err << "loaded " << entry.name << ": " << data.n_rows << " rows, "
        << data.n_cols << " features, classes (" << data.class_counts()[0] << ", "
        << data.class_counts()[1] << ")\n";
    spec.datasets.push_back(std::move(data));
  }
  const fs::path dir(m.output_dir);
  write_file(dir / "manifest.echo.txt", echo_manifest(m));

  spec.parties = m.parties;
  spec.surfaces = m.surfaces;
  spec.seeds = m.seeds;
  spec.federation = m.federation;
  spec.oracle_budget = m.oracle_budget;
  spec.record_wall_time = m.record_wall_time;
  const HpSpace space = m.hp_space();
  const BenchmarkResult result = run_benchmark(
      spec, space, [&err](std::string_view msg) { err << msg << '\n'; });

  write_reports(dir, result.rows);
  std::string holdout = holdout_header(space);
  for (const auto& r : result.rows) holdout += holdout_row(r, space);
  write_file(dir / "holdout.csv", holdout);

  std::string failures;
  for (const auto& f : result.failures) {
    failures += f.dataset + " p=" + std::to_string(f.parties) + " seed=" +
                std::to_string(f.seed) + ": " + f.message + '\n';
  }
  write_file(dir / "failures.txt", failures);

  std::string cells = "cell,cv_folds,top_up_transfers\n";
  std::string timings = "cell,local_hpo_s,aggregate_s,final_training_s\n";
  for (const auto& c : result.cells) {
    std::string folds;
    for (int k : c.cv_folds) folds += (folds.empty() ? "" : " ") + std::to_string(k);
    cells += c.key + ',' + folds + ',' + std::to_string(c.top_up_transfers) + '\n';
    timings += c.key + ',' + format_double(c.times.local_hpo_s) + ',' +
               format_double(c.times.aggregate_s) + ',' +
               format_double(c.times.final_training_s) + '\n';
    for (const auto& log : c.logs) {
      write_file(dir / "logs" / c.key / (log.party_id + ".csv"), to_csv(log, space));
    }
  }
  write_file(dir / "cells.csv", cells);
  write_file(dir / "timings.csv", timings);

  out << results_markdown(summarize(result.rows));
  if (!result.failures.empty()) {
    err << result.failures.size() << " cell(s) failed; see "
        << (dir / "failures.txt").string() << '\n';
    for (const auto& f : result.failures) err << "  " << f.message << '\n';
    if (result.rows.empty()) return 4;
  }
  return 0;
}

int cmd_partition(const ExperimentManifest& m, const std::string& dataset_name,
                  std::ostream& out) {
  const FederationConfig fed = single_cell(m);
  DatasetEntry entry = m.datasets.at(find_dataset(m, dataset_name));
  Dataset data;
  try {
    data = load_dataset(entry);
  } catch (const Error& e) {
    rethrow_in_phase("partition", e);
  }
  FederationData fd;
  try {
    fd = prepare_federation(data, fed);
  } catch (const Error& e) {
    rethrow_in_phase("partition", e);
  }
  const fs::path dir(m.output_dir);
  write_file(dir / "split_pool.csv", to_dataset_csv(fd.split.pool));
  write_file(dir / "split_holdout.csv", to_dataset_csv(fd.split.holdout));
  std::string record = "dataset = " + entry.name + "\nchecksum = " + checksum(data) +
                       "\ntop_up_transfers = " +
                       std::to_string(fd.top_up_transfers) + '\n';
  for (std::size_t i = 0; i < fd.shards.size(); ++i) {
    const std::string id = party_name(static_cast<int>(i));
    write_file(dir / ("shard_" + id + ".csv"), to_dataset_csv(fd.shards[i]));
    const auto counts = fd.shards[i].class_counts();
    record += id + " = " + std::to_string(counts[0]) + " " +
              std::to_string(counts[1]) + '\n';
  }
  write_file(dir / "partition.txt", record);
  out << record;
  return 0;
}

int cmd_local_hpo(const ExperimentManifest& m, const std::string& shard_path,
                  std::string party_id, std::ostream& out) {
  const FederationConfig fed = single_cell(m);
  if (party_id.empty()) {
    party_id = fs::path(shard_path).stem().string();
    if (party_id.rfind("shard_", 0) == 0) party_id.erase(0, 6);
  }
  Dataset shard;
  try {
    shard = parse_dataset_csv(read_artifact(shard_path, "local-hpo"), party_id);
  } catch (const Error& e) {
    if (std::string(e.what()).rfind("[local-hpo]", 0) == 0) throw;
    rethrow_in_phase("local-hpo " + shard_path, e);
  }
  const HpSpace space = m.hp_space();
  PartyRun run;
  try {
    run = run_party_hpo(shard, party_id, space, fed);
  } catch (const Error& e) {
    rethrow_in_phase("local-hpo " + party_id, e);
  }
  const fs::path path = fs::path(m.output_dir) / (party_id + ".csv");
  write_file(path, to_csv(run.log, space));
  out << party_id << ": " << run.log.trials.size() << " trials, " << run.cv_folds
      << "-fold CV, best loss " << format_double(best_loss(run.log)) << " -> "
      << path.string() << '\n';
  return 0;
}

int cmd_aggregate(const ExperimentManifest& m, const std::vector<std::string>& paths,
                  std::ostream& out) {
  const FederationConfig fed = single_cell(m);
  const HpSpace space = m.hp_space();
  const auto logs = read_logs(paths, space, "aggregate", nullptr);
  for (SurfaceKind kind : m.surfaces) {
    HpConfig chosen;
    try {
      chosen = aggregate_and_select(logs, kind, space, fed);
    } catch (const Error& e) {
      rethrow_in_phase("aggregate", e);
    }
    const fs::path path =
        fs::path(m.output_dir) / ("choice_" + std::string(to_string(kind)) + ".csv");
    write_file(path, choice_csv(kind, chosen, space));
    out << to_string(kind) << ": " << to_string(chosen) << '\n';
  }
  return 0;
}

int cmd_evaluate(const ExperimentManifest& m, const std::string& dataset_name,
                 const std::string& pool_path, const std::string& holdout_path,
                 const std::vector<std::string>& log_paths,
                 const std::vector<std::string>& choice_paths, std::ostream& out) {
  const FederationConfig fed = single_cell(m);
  const HpSpace space = m.hp_space();
  const std::string name = m.datasets.empty()
                               ? (dataset_name.empty() ? "dataset" : dataset_name)
                               : m.datasets.at(find_dataset(m, dataset_name)).name;
  HoldoutSplit split;
  try {
    split.pool = parse_dataset_csv(read_artifact(pool_path, "evaluate"), name);
    split.holdout = parse_dataset_csv(read_artifact(holdout_path, "evaluate"), name);
  } catch (const Error& e) {
    if (std::string(e.what()).rfind("[evaluate]", 0) == 0) throw;
    rethrow_in_phase("evaluate", e);
  }
  std::size_t bytes = 0;
  const auto logs = read_logs(log_paths, space, "evaluate", &bytes);

  std::vector<std::pair<SurfaceKind, HpConfig>> choices;
  for (const auto& path : choice_paths) {
    choices.push_back(parse_choice_csv(read_artifact(path, "evaluate"), space, path));
  }
  if (choices.empty()) throw ConfigError("[evaluate] no choice files given");
  auto rank = [&m](SurfaceKind k) {
    const auto it = std::find(m.surfaces.begin(), m.surfaces.end(), k);
    return it - m.surfaces.begin();
  };
  std::stable_sort(choices.begin(), choices.end(),
                   [&](const auto& a, const auto& b) { return rank(a.first) < rank(b.first); });

  Reference ref;
  try {
    ref = compute_reference(split, space, fed, m.oracle_budget);
  } catch (const Error& e) {
    rethrow_in_phase("reference", e);
  }
  const SeedPlan seeds = SeedPlan::from(fed.seed);
  std::vector<RegretReport> rows;
  for (const auto& [kind, config] : choices) {
    FloraResult r;
    r.kind = kind;
    r.chosen_config = config;
    r.per_party_logs = logs;
    r.communication_bytes = bytes;
    try {
      r.final_loss = 1.0 - cv_balanced_accuracy(config, split.pool, fed.cv_folds,
                                                seeds.final_folds);
      r.holdout_accuracy = holdout_balanced_accuracy(config, split.pool, split.holdout);
      rows.push_back(make_report(name, fed, kind, r, ref));
    } catch (const Error& e) {
      rethrow_in_phase("final-training", e);
    }
  }
  const fs::path dir(m.output_dir);
  write_reports(dir, rows);
  std::string holdout = holdout_header(space);
  for (const auto& r : rows) holdout += holdout_row(r, space);
  write_file(dir / "holdout.csv", holdout);
  out << results_csv(rows);
  return 0;
}

int cmd_report(const std::string& dir_name, std::ostream& out) {
  const fs::path dir(dir_name);
  if (!fs::is_directory(dir)) {
    throw DataError("[report] results directory '" + dir_name + "' does not exist");
  }
  std::vector<RegretReport> rows;
  const fs::path results = dir / "results.csv";
  if (fs::exists(results)) {
    try {
      rows = parse_results_csv(read_artifact(results.string(), "report"));
    } catch (const Error& e) {
      if (std::string(e.what()).rfind("[report]", 0) == 0) throw;
      rethrow_in_phase("report " + results.string(), e);
    }
  }
  const Summary s = summarize(rows);
  write_file(dir / "summary.csv", summary_csv(s));
  write_file(dir / "results.md", results_markdown(s));
  out << results_markdown(s);
  return 0;
}

int cmd_synth(const SyntheticSpec& spec, const std::string& name,
              const std::string& out_dir, std::ostream& out) {
  const Dataset data = make_synthetic(spec, name);
  std::string csv;
  for (const auto& f : data.feature_names) csv += f + ',';
  csv += "label\n";
  for (std::size_t r = 0; r < data.n_rows; ++r) {
    for (std::size_t c = 0; c < data.n_cols; ++c) csv += format_double(data.at(r, c)) + ',';
    csv += data.labels[r] ? "1\n" : "0\n";
  }
  const fs::path path = fs::path(out_dir) / (name + ".csv");
  write_file(path, csv);
  out << path.string() << ": " << data.n_rows << " rows, " << data.n_cols
      << " features, checksum " << checksum(data) << '\n';
  return 0;
}

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::kConfig:
      return 2;
    case ErrorClass::kData:
      return 3;
    case ErrorClass::kRuntime:
      return 4;
  }
  return 4;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Single-shot federated hyper-parameter optimization", "flora"};
  app.require_subcommand(1);
  Common c;
  std::string dataset_name;

  auto* run = app.add_subcommand("run", "Full pipeline over every manifest cell");
  add_common(run, c);

  auto* partition = app.add_subcommand("partition", "Holdout split and party shards");
  add_common(partition, c);
  partition->add_option("--dataset", dataset_name, "Manifest dataset to use");

  std::string shard;
  std::string party;
  auto* local = app.add_subcommand("local-hpo", "Local HPO on one party shard");
  add_common(local, c);
  local->add_option("--shard", shard, "Shard file from partition")->required();
  local->add_option("--party", party, "Party id (default: from file name)");

  std::vector<std::string> logs;
  auto* aggregate = app.add_subcommand("aggregate", "Build surfaces and select configs");
  add_common(aggregate, c);
  aggregate->add_option("--logs", logs, "Party trial-log CSVs")->required();

  std::string pool;
  std::string holdout;
  std::vector<std::string> choices;
  auto* evaluate = app.add_subcommand("evaluate", "Score selected configs against the oracle");
  add_common(evaluate, c);
  evaluate->add_option("--dataset", dataset_name, "Manifest dataset name");
  evaluate->add_option("--pool", pool, "Pool file from partition")->required();
  evaluate->add_option("--holdout", holdout, "Holdout file from partition")->required();
  evaluate->add_option("--logs", logs, "Party trial-log CSVs")->required();
  evaluate->add_option("--choices", choices, "Choice files from aggregate")->required();

  std::string results_dir;
  auto* report = app.add_subcommand("report", "Summarize a results directory");
  report->add_option("dir", results_dir, "Results directory")->required();

  SyntheticSpec synth_spec;
  std::string synth_name = "synthetic";
  std::string synth_out = ".";
  auto* synth = app.add_subcommand("synth", "Write a planted synthetic dataset CSV");
  synth->add_option("--rows", synth_spec.rows, "Row count");
  synth->add_option("--features", synth_spec.features, "Feature count");
  synth->add_option("--noise", synth_spec.label_noise, "Label flip probability");
  synth->add_option("--seed", synth_spec.seed, "Generator seed");
  synth->add_option("--name", synth_name, "Dataset name");
  synth->add_option("--out", synth_out, "Output directory");

  std::vector<std::string> argv_store;
  argv_store.push_back("flora");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "flora: " << e.what() << '\n';
    return 2;
  }

  try {
    if (report->parsed()) return cmd_report(results_dir, out);
    if (synth->parsed()) return cmd_synth(synth_spec, synth_name, synth_out, out);
    CLI::App* sub = app.get_subcommands().front();
    const ExperimentManifest m = resolve_manifest(c, *sub);
    if (run->parsed()) return cmd_run(m, out, err);
    if (partition->parsed()) return cmd_partition(m, dataset_name, out);
    if (local->parsed()) return cmd_local_hpo(m, shard, party, out);
    if (aggregate->parsed()) return cmd_aggregate(m, logs, out);
    if (evaluate->parsed()) {
      return cmd_evaluate(m, dataset_name, pool, holdout, logs, choices, out);
    }
  } catch (const Error& e) {
    err << "flora: " << e.what() << '\n';
    return exit_code(e.error_class());
  } catch (const fs::filesystem_error& e) {
    err << "flora: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "flora: internal error: " << e.what() << '\n';
    return 4;
  }
  return 2;
}

}  // namespace flora::cli
