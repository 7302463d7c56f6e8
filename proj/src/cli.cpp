// Copyright 2026 The advbin Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "advbin/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "advbin/error.hpp"
#include "advbin/hash.hpp"
#include "advbin/miniisa.hpp"
#include "advbin/oracles.hpp"
#include "advbin/strand_store.hpp"

namespace advbin {
namespace {

namespace fs = std::filesystem;

std::string Hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void WriteText(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << text;
  if (!f) throw Error("write failed for " + path);
}

std::size_t DefaultJobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

struct LoadedInputs {
  GroupedCorpus corpus;
  StrandDb db;
};

LoadedInputs LoadInputs(const RunManifest& m) {
  LoadedInputs in;
  auto functions = LoadCorpus(m.corpus_path);
  const std::string hash = CorpusHash(functions);
  if (!m.corpus_hash.empty() && hash != m.corpus_hash) {
    throw Error("corpus " + m.corpus_path + " has hash " + hash + ", manifest expects " +
                m.corpus_hash);
  }
  in.corpus = GroupCorpus(std::move(functions));
  if (m.strands_path.empty()) {
    in.db = ExtractStrands(in.corpus.functions);
  } else {
    in.db = StrandDb::Load(m.strands_path);
  }
  const std::string strands_hash = Hex(Fnv1a(in.db.ToJson().dump()));
  if (!m.strands_hash.empty() && strands_hash != m.strands_hash) {
    throw Error("strand database has hash " + strands_hash + ", manifest expects " +
                m.strands_hash);
  }
  return in;
}

json OracleNotes(const std::vector<std::string>& descriptors, const std::vector<OraclePtr>& oracles) {
  json notes = json::object();
  for (std::size_t i = 0; i < descriptors.size(); ++i) notes[descriptors[i]] = oracles[i]->Describe();
  return notes;
}

std::vector<OraclePtr> MakeOracles(const std::vector<std::string>& descriptors) {
  std::vector<OraclePtr> oracles;
  for (const auto& s : descriptors) oracles.push_back(MakeOracle(s));
  return oracles;
}

json SampleJson(std::size_t index, const AttackSample& sample, const SampleRun& run,
                bool emit_functions) {
  json variants = json::array();
  for (const auto& v : sample.variants) variants.push_back(v.id());
  return {{"index", index},
          {"query", sample.query.id()},
          {"variants", std::move(variants)},
          {"pre_success", run.outcome.pre_success},
          {"post_success", run.outcome.post_success},
          {"pre_in_topk", run.outcome.pre_in_topk},
          {"post_in_topk", run.outcome.post_in_topk},
          {"attack", run.attack.ToJson(false, emit_functions)}};
}

json TimingJson(const MetricsReport& r) {
  return {{"mean_iteration_time_s", r.mean_iteration_time_s},
          {"stddev_iteration_time_s", r.stddev_iteration_time_s},
          {"mean_run_time_s", r.mean_run_time_s}};
}

std::vector<SampleOutcome> Outcomes(const std::vector<SampleRun>& runs) {
  std::vector<SampleOutcome> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.push_back(r.outcome);
  return out;
}

RunOutput ExecuteAttack(const RunManifest& m, const LoadedInputs& in, std::size_t jobs) {
  const auto oracles = MakeOracles(m.oracles);
  const std::size_t pool_size = m.pool_sizes.at(0);
  const std::size_t k = m.ks.at(0);
  const auto samples = BuildSamples(in.corpus, pool_size, m.samples, m.mode, m.seed);
  const auto runs = RunEvaluation(samples, *oracles[0], in.db, m.attack, k, jobs);
  const EvalConfig eval{k, m.levels};
  const MetricsReport metrics = ComputeMetrics(Outcomes(runs), eval);

  RunOutput out;
  json per_sample = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    per_sample.push_back(SampleJson(i, samples[i], runs[i], m.emit_functions));
  }
  out.body = {{"metrics", metrics.ToJson(false)}, {"samples", std::move(per_sample)}};
  out.timing = TimingJson(metrics);
  out.csv = MetricsCsvHeader(eval) + "\n" +
            MetricsCsvRow(m.oracles[0], pool_size, k, m.attack.lambda, m.mode, metrics, eval) +
            "\n";
  out.oracles = OracleNotes(m.oracles, oracles);
  return out;
}

RunOutput ExecuteSweep(const RunManifest& m, const LoadedInputs& in, std::size_t jobs) {
  const auto oracles = MakeOracles(m.oracles);
  const EvalConfig header{0, m.levels};
  RunOutput out;
  out.csv = MetricsCsvHeader(header) + "\n";
  json cells = json::array();
  json timing = json::array();
  for (std::size_t o = 0; o < oracles.size(); ++o) {
    for (std::size_t pool_size : m.pool_sizes) {
      const auto samples = BuildSamples(in.corpus, pool_size, m.samples, m.mode, m.seed);
      for (double lambda : m.lambdas) {
        AttackConfig config = m.attack;
        config.lambda = lambda;
        // The attack never looks at k, so one run serves every k.
        const auto runs = RunEvaluation(samples, *oracles[o], in.db, config, m.ks.at(0), jobs);
        for (std::size_t k : m.ks) {
          std::vector<SampleOutcome> outcomes(runs.size());
          ParallelFor(runs.size(), jobs, [&](std::size_t i) {
            outcomes[i] = EvaluateOutcome(*oracles[o], samples[i], runs[i].attack, k);
          });
          const EvalConfig eval{k, m.levels};
          const MetricsReport metrics = ComputeMetrics(outcomes, eval);
          cells.push_back({{"oracle", m.oracles[o]},
                           {"pool_size", pool_size},
                           {"k", k},
                           {"lambda", lambda},
                           {"metrics", metrics.ToJson(false)}});
          json t = TimingJson(metrics);
          t["oracle"] = m.oracles[o];
          t["pool_size"] = pool_size;
          t["k"] = k;
          t["lambda"] = lambda;
          timing.push_back(std::move(t));
          out.csv += MetricsCsvRow(m.oracles[o], pool_size, k, lambda, m.mode, metrics, eval) + "\n";
        }
      }
    }
  }
  out.body = {{"cells", std::move(cells)}};
  out.timing = {{"cells", std::move(timing)}};
  out.oracles = OracleNotes(m.oracles, oracles);
  return out;
}

RunOutput ExecuteTransfer(const RunManifest& m, const LoadedInputs& in, std::size_t jobs) {
  const auto oracles = MakeOracles(m.oracles);
  const auto samples = BuildSamples(in.corpus, m.pool_sizes.at(0), m.samples, m.mode, m.seed);
  const TransferReport report =
      TransferMatrix(samples, oracles, oracles, in.db, m.attack, m.ks.at(0), jobs);
  RunOutput out;
  out.body = report.ToJson();
  out.timing = json::object();
  out.oracles = OracleNotes(m.oracles, oracles);
  return out;
}

// ---------------------------------------------------------------------------
// Command-line parsing.

struct SharedFlags {
  std::uint64_t seed = 0;
  std::size_t jobs = DefaultJobs();
  std::string out;
  std::vector<std::size_t> k = {10};
  std::vector<std::size_t> pool_size = {128};
  std::vector<double> lambda = {0.0};
  double epsilon = AttackConfig{}.epsilon;
  int iterations = AttackConfig{}.max_iterations;
  std::size_t positions = AttackConfig{}.n_positions;
  std::size_t strands_tested = AttackConfig{}.strands_tested;
  std::vector<std::string> only_transform;
  std::vector<std::string> oracle = {"gsize"};
  std::string mode = "untargeted";
  std::string corpus;
  std::string strands;
  std::size_t samples = 100;
  std::string csv;
  bool emit_functions = false;
};

class OracleNameValidator : public CLI::Validator {
 public:
  OracleNameValidator() {
    name_ = "ORACLE";
    func_ = [](const std::string& s) -> std::string {
      static const char* kBuiltin[] = {"gsize", "gedit", "catalog1", "ngram"};
      for (const char* b : kBuiltin) {
        if (s == b) return {};
      }
      if (s.rfind("remote:", 0) == 0 && s.size() > 7) return {};
      return "unknown oracle '" + s + "' (gsize|gedit|catalog1|ngram|remote:HOST:PORT)";
    };
  }
};

// Registers the shared attack flags. Which of the list-valued ones may
// actually repeat is checked after parsing (see RepeatedFlagError).
std::vector<CLI::Option*> AddAttackFlags(CLI::App* cmd, SharedFlags& f) {
  std::vector<CLI::Option*> opts;
  opts.push_back(cmd->add_option("--corpus", f.corpus, "Corpus JSON file")
                     ->required()
                     ->check(CLI::ExistingFile));
  opts.push_back(cmd->add_option("--strands", f.strands,
                                 "Strand database (derived from the corpus if omitted)")
                     ->check(CLI::ExistingFile));
  opts.push_back(cmd->add_option("--seed", f.seed, "Master seed"));
  opts.push_back(cmd->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber));
  opts.push_back(cmd->add_option("--out", f.out, "Output path ('-' for stdout)"));
  opts.push_back(cmd->add_option("--samples", f.samples, "Number of attack samples")
                     ->check(CLI::PositiveNumber));
  opts.push_back(cmd->add_option("--epsilon", f.epsilon, "Exploration probability")
                     ->check(CLI::Range(0.0, 1.0)));
  opts.push_back(cmd->add_option("--iterations", f.iterations, "Maximum iterations")
                     ->check(CLI::NonNegativeNumber));
  opts.push_back(cmd->add_option("--positions", f.positions, "Positions kept per iteration")
                     ->check(CLI::PositiveNumber));
  opts.push_back(cmd->add_option("--strands-tested", f.strands_tested,
                                 "Pool strands tried per insertion position"));
  opts.push_back(cmd->add_option("--only-transform", f.only_transform,
                                 "Restrict to these transformations (repeatable)")
                     ->check(CLI::IsMember({"IR", "NS", "DBA", "SA"}))
                     ->allow_extra_args(false));
  opts.push_back(cmd->add_option("--mode", f.mode, "Attack mode")
                     ->check(CLI::IsMember({"targeted", "untargeted"})));
  auto* k = cmd->add_option("--k", f.k, "Top-K cutoff")->check(CLI::PositiveNumber);
  auto* pool = cmd->add_option("--pool-size", f.pool_size, "Search pool size")
                   ->check(CLI::PositiveNumber);
  auto* lambda = cmd->add_option("--lambda", f.lambda, "Size penalty")
                     ->check(CLI::NonNegativeNumber);
  auto* oracle = cmd->add_option("--oracle", f.oracle, "Similarity oracle")
                     ->check(OracleNameValidator());
  for (auto* o : {k, pool, lambda, oracle}) {
    o->allow_extra_args(false);
    opts.push_back(o);
  }
  return opts;
}

// Empty when every list-valued flag respects the command's arity.
std::string RepeatedFlagError(const std::string& command, const SharedFlags& f) {
  if (command == "sweep") return {};
  if (f.k.size() > 1) return "--k may be given once for " + command;
  if (f.pool_size.size() > 1) return "--pool-size may be given once for " + command;
  if (f.lambda.size() > 1) return "--lambda may be given once for " + command;
  if (command == "attack" && f.oracle.size() > 1) return "--oracle may be given once for attack";
  if (command == "transfer" && f.oracle.size() < 2) {
    return "transfer needs at least two --oracle values";
  }
  return {};
}

RunManifest ManifestFromFlags(const std::string& command, const SharedFlags& f) {
  RunManifest m;
  m.command = command;
  m.corpus_path = f.corpus;
  m.corpus_hash = CorpusHash(LoadCorpus(f.corpus));
  m.strands_path = f.strands;
  if (!f.strands.empty()) m.strands_hash = Hex(Fnv1a(StrandDb::Load(f.strands).ToJson().dump()));
  m.oracles = f.oracle;
  m.mode = ParseAttackMode(f.mode);
  m.pool_sizes = f.pool_size;
  m.ks = f.k;
  m.lambdas = f.lambda;
  m.samples = f.samples;
  m.seed = f.seed;
  m.attack.max_iterations = f.iterations;
  m.attack.lambda = f.lambda.at(0);
  m.attack.epsilon = f.epsilon;
  m.attack.n_positions = f.positions;
  m.attack.strands_tested = f.strands_tested;
  m.attack.seed = f.seed;
  if (!f.only_transform.empty()) {
    KindSet enabled;
    for (const auto& t : f.only_transform) enabled.Insert(ParseTransformKind(t));
    m.attack.enabled = enabled;
  }
  m.attack.Validate();
  m.emit_functions = f.emit_functions;
  if (!f.out.empty()) m.outputs.push_back(f.out);
  if (!f.csv.empty()) m.outputs.push_back(f.csv);
  return m;
}

json DefaultedFlags(const std::vector<CLI::Option*>& opts) {
  json names = json::array();
  for (const auto* o : opts) {
    if (o->count() == 0 && !o->get_required()) names.push_back(o->get_name());
  }
  return names;
}

json AssembleReport(const RunManifest& m, const RunOutput& r, json defaults, std::size_t jobs,
                    double wall_s) {
  json timing = r.timing;
  timing["jobs"] = jobs;
  timing["wall_time_s"] = wall_s;
  return {{"manifest", m.ToJson()},
          {"notes", {{"oracles", r.oracles}, {"defaulted_flags", std::move(defaults)}}},
          {"body", r.body},
          {"timing", std::move(timing)}};
}

void PrintMetricsSummary(const json& metrics, std::ostream& out) {
  out << "samples " << metrics.at("samples").get<std::size_t>() << "  wASR "
      << std::fixed << std::setprecision(2) << metrics.at("wasr").get<double>();
  for (const auto& [level, v] : metrics.at("asr_at").items()) {
    out << "  ASR@" << level << " " << v.get<double>();
  }
  out << "  recall " << metrics.at("recall_pre").get<double>() << " -> "
      << metrics.at("recall_post").get<double>() << "\n";
  out.unsetf(std::ios::floatfield);
}

void PrintReportSummary(const json& report, std::ostream& out) {
  const json& m = report.at("manifest");
  const json& body = report.at("body");
  const std::string command = m.at("command");
  out << command << " report, corpus " << m.at("corpus").at("hash").get<std::string>() << "\n";
  if (command == "attack") {
    PrintMetricsSummary(body.at("metrics"), out);
  } else if (command == "sweep") {
    for (const auto& c : body.at("cells")) {
      out << c.at("oracle").get<std::string>() << " pool=" << c.at("pool_size").get<std::size_t>()
          << " k=" << c.at("k").get<std::size_t>() << " lambda=" << c.at("lambda").get<double>()
          << ": ";
      PrintMetricsSummary(c.at("metrics"), out);
    }
  } else if (command == "transfer") {
    for (const auto& c : body.at("matrix")) {
      out << c.at("source").get<std::string>() << " -> " << c.at("target").get<std::string>()
          << ": " << c.at("wasr").get<double>() << "\n";
    }
    for (const auto& [name, v] : body.at("tsr").items()) {
      out << "TSR " << name << " " << v.get<double>() << "\n";
    }
    for (const auto& [name, v] : body.at("vr").items()) {
      out << "VR " << name << " " << v.get<double>() << "\n";
    }
  }
}

std::vector<fs::path> ExpandInputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(in);
    }
  }
  return files;
}

}  // namespace

json RunManifest::ToJson() const {
  return {{"command", command},
          {"tool_version", tool_version},
          {"corpus", {{"path", corpus_path}, {"hash", corpus_hash}}},
          {"strands", {{"path", strands_path}, {"hash", strands_hash}}},
          {"oracles", oracles},
          {"mode", std::string(ToString(mode))},
          {"pool_sizes", pool_sizes},
          {"ks", ks},
          {"lambdas", lambdas},
          {"samples", samples},
          {"seed", seed},
          {"attack", attack.ToJson()},
          {"levels", levels},
          {"emit_functions", emit_functions},
          {"outputs", outputs}};
}

RunManifest RunManifest::FromJson(const json& d) {
  try {
    RunManifest m;
    m.command = d.at("command").get<std::string>();
    m.tool_version = d.value("tool_version", std::string(kToolVersion));
    m.corpus_path = d.at("corpus").at("path").get<std::string>();
    m.corpus_hash = d.at("corpus").value("hash", std::string());
    m.strands_path = d.at("strands").value("path", std::string());
    m.strands_hash = d.at("strands").value("hash", std::string());
    m.oracles = d.at("oracles").get<std::vector<std::string>>();
    m.mode = ParseAttackMode(d.at("mode").get<std::string>());
    m.pool_sizes = d.at("pool_sizes").get<std::vector<std::size_t>>();
    m.ks = d.at("ks").get<std::vector<std::size_t>>();
    m.lambdas = d.at("lambdas").get<std::vector<double>>();
    m.samples = d.at("samples").get<std::size_t>();
    m.seed = d.at("seed").get<std::uint64_t>();
    m.attack = AttackConfig::FromJson(d.at("attack"));
    m.levels = d.value("levels", m.levels);
    m.emit_functions = d.value("emit_functions", false);
    m.outputs = d.value("outputs", std::vector<std::string>{});
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bad manifest: ") + e.what());
  }
}

std::string CorpusHash(std::span<const FunctionCfg> functions) {
  return Hex(Fnv1a(SerializeCorpus(functions).dump()));
}

RunOutput ExecuteManifest(const RunManifest& m, std::size_t jobs) {
  if (m.oracles.empty() || m.pool_sizes.empty() || m.ks.empty() || m.lambdas.empty()) {
    throw std::invalid_argument("manifest needs at least one oracle, pool size, k and lambda");
  }
  const LoadedInputs in = LoadInputs(m);
  if (m.command == "attack") return ExecuteAttack(m, in, jobs);
  if (m.command == "sweep") return ExecuteSweep(m, in, jobs);
  if (m.command == "transfer") return ExecuteTransfer(m, in, jobs);
  throw std::invalid_argument("manifest command '" + m.command + "' is not re-runnable");
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Black-box adversarial attacks on binary function similarity", "advbin"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // ingest
  std::vector<std::string> ingest_inputs;
  std::string ingest_out;
  bool ingest_strict = false;
  auto* ingest = app.add_subcommand("ingest", "Validate ingestion JSON and write a corpus file");
  ingest->add_option("inputs", ingest_inputs, "JSON files or directories")->required();
  ingest->add_option("--out", ingest_out, "Corpus output path")->required();
  ingest->add_flag("--strict", ingest_strict, "Reject functions failing the corpus filter");

  // gen-corpus
  std::size_t gen_functions = 250;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic mini-ISA corpus");
  gen->add_option("--functions", gen_functions, "Source functions (4 variants each)")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", gen_out, "Corpus output path")->required();

  // strands build
  std::string strands_corpus, strands_out;
  std::size_t strands_dim = kEmbeddingDim;
  auto* strands = app.add_subcommand("strands", "Strand database operations");
  strands->require_subcommand(1);
  auto* strands_build = strands->add_subcommand("build", "Extract and embed strands");
  strands_build->add_option("--corpus", strands_corpus, "Corpus JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  strands_build->add_option("--out", strands_out, "Strand database output path")->required();
  strands_build->add_option("--dim", strands_dim, "Embedding dimension")
      ->check(CLI::PositiveNumber);

  // attack / sweep / transfer
  SharedFlags attack_flags, sweep_flags, transfer_flags;
  auto* attack = app.add_subcommand("attack", "Run the attack over sampled queries");
  auto attack_opts = AddAttackFlags(attack, attack_flags);
  attack->add_option("--csv", attack_flags.csv, "Also write the metrics row as CSV");
  attack->add_flag("--emit-functions", attack_flags.emit_functions,
                   "Embed adversarial functions in the report");

  auto* sweep = app.add_subcommand("sweep", "Run an oracle x pool size x k x lambda grid");
  auto sweep_opts = AddAttackFlags(sweep, sweep_flags);
  sweep->add_option("--json", sweep_flags.csv, "Also write the full JSON report here");

  auto* transfer = app.add_subcommand("transfer", "Cross-oracle transferability matrix");
  auto transfer_opts = AddAttackFlags(transfer, transfer_flags);
  transfer_flags.oracle = {};

  // report
  std::string report_in;
  bool report_verify = false;
  std::size_t report_jobs = DefaultJobs();
  auto* report = app.add_subcommand("report", "Summarize a report, optionally re-running it");
  report->add_option("--in", report_in, "Report JSON")->required()->check(CLI::ExistingFile);
  report->add_flag("--verify", report_verify, "Re-run the manifest and compare bodies");
  report->add_option("--jobs", report_jobs, "Worker threads for --verify")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
    return kExitUsage;
  }

  try {
    if (*ingest) {
      std::vector<FunctionCfg> functions;
      const ParseOptions options{ingest_strict};
      for (const auto& path : ExpandInputs(ingest_inputs)) {
        const json doc = ReadJsonFile(path.string());
        if (doc.is_array()) {
          auto part = ParseCorpus(doc, options);
          functions.insert(functions.end(), part.begin(), part.end());
        } else {
          functions.push_back(ParseFunction(doc, options));
        }
      }
      SaveCorpus(ingest_out, functions);
      const GroupedCorpus grouped = GroupCorpus(functions);
      out << functions.size() << " functions, " << grouped.groups.size() << " complete groups, "
          << grouped.rejected.size() << " incomplete groups\n";
      for (const auto& r : grouped.rejected) err << "warning: incomplete group " << r << "\n";
      return kExitOk;
    }
    if (*gen) {
      const auto corpus = GenCorpus(gen_functions, gen_seed);
      SaveCorpus(gen_out, corpus);
      out << corpus.size() << " functions (" << gen_functions << " groups x "
          << kVariantsPerGroup << " variants)\n";
      return kExitOk;
    }
    if (*strands_build) {
      const auto corpus = LoadCorpus(strands_corpus);
      const StrandDb db = ExtractStrands(corpus, strands_dim);
      db.Save(strands_out);
      out << db.size() << " strands\n";
      return kExitOk;
    }
    if (*report) {
      const json doc = ReadJsonFile(report_in);
      if (!doc.contains("manifest") || !doc.contains("body")) {
        throw SchemaError(report_in + " is not an advbin report");
      }
      PrintReportSummary(doc, out);
      if (report_verify) {
        const RunManifest m = RunManifest::FromJson(doc.at("manifest"));
        const RunOutput rerun = ExecuteManifest(m, report_jobs);
        if (rerun.body.dump() != doc.at("body").dump()) {
          err << "verify: body differs from the re-run\n";
          return kExitRuntime;
        }
        out << "verify: identical body (" << Hex(Fnv1a(rerun.body.dump())) << ")\n";
      }
      return kExitOk;
    }

    struct Selected {
      const char* name;
      SharedFlags* flags;
      std::vector<CLI::Option*>* opts;
    };
    Selected sel{nullptr, nullptr, nullptr};
    if (*attack) sel = {"attack", &attack_flags, &attack_opts};
    if (*sweep) sel = {"sweep", &sweep_flags, &sweep_opts};
    if (*transfer) sel = {"transfer", &transfer_flags, &transfer_opts};
    SharedFlags& f = *sel.flags;
    if (const std::string problem = RepeatedFlagError(sel.name, f); !problem.empty()) {
      err << "error: " << problem << "\n\n" << app.help("", CLI::AppFormatMode::All);
      return kExitUsage;
    }
    RunManifest m;
    try {
      m = ManifestFromFlags(sel.name, f);
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
      return kExitUsage;
    }
    const auto start = std::chrono::steady_clock::now();
    const RunOutput result = ExecuteManifest(m, f.jobs);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const json doc = AssembleReport(m, result, DefaultedFlags(*sel.opts), f.jobs, wall);
    if (m.command == "sweep") {
      WriteText(f.out, result.csv, out);
      if (!f.csv.empty()) WriteText(f.csv, doc.dump(2) + "\n", out);
    } else {
      WriteText(f.out, doc.dump(2) + "\n", out);
      if (m.command == "attack" && !f.csv.empty()) WriteText(f.csv, result.csv, out);
    }
    if (!f.out.empty() && f.out != "-") PrintReportSummary(doc, out);
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace advbin
