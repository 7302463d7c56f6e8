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

// Python bindings. Functions and reports cross the boundary as JSON text;
// the pure-Python layer in advbin/__init__.py turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "advbin/cfg.hpp"
#include "advbin/cli.hpp"
#include "advbin/error.hpp"
#include "advbin/evaluation.hpp"
#include "advbin/miniisa.hpp"
#include "advbin/optimizer.hpp"
#include "advbin/oracles.hpp"
#include "advbin/strand_store.hpp"
#include "advbin/transforms.hpp"

namespace py = pybind11;

namespace advbin {
namespace {

FunctionCfg LoadFunction(const std::string& text) { return ParseFunction(json::parse(text)); }

std::vector<FunctionCfg> LoadFunctions(const std::string& text) {
  std::vector<FunctionCfg> out;
  for (const auto& f : json::parse(text)) out.push_back(ParseFunction(f));
  return out;
}

std::string DumpFunctions(const std::vector<FunctionCfg>& fs) {
  json out = json::array();
  for (const auto& f : fs) out.push_back(SerializeFunction(f));
  return out.dump();
}

std::string NormalizeFunction(const std::string& text, bool strict) {
  ParseOptions options;
  options.strict = strict;
  return SerializeFunction(ParseFunction(json::parse(text), options)).dump();
}

double Similarity(const std::string& oracle, const std::string& a, const std::string& b) {
  return MakeOracle(oracle)->Similarity(LoadFunction(a), LoadFunction(b));
}

std::vector<std::pair<std::string, double>> Rank(const std::string& oracle, const std::string& query,
                                                 const std::string& pool) {
  const auto functions = LoadFunctions(pool);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& e : RankPool(*MakeOracle(oracle), LoadFunction(query), functions)) out.emplace_back(e.id, e.score);
  return out;
}

std::string Apply(const std::string& function, const std::string& action, const StrandDb& db) {
  return SerializeFunction(ApplyAction(LoadFunction(function), ActionFromJson(json::parse(action)), db)).dump();
}

std::string Equivalence(const std::string& a, const std::string& b, int trials, std::uint64_t seed) {
  const auto v = CheckEquivalence(LoadFunction(a), LoadFunction(b), trials, seed);
  return json{{"equivalent", v.equivalent}, {"trials_run", v.trials_run}, {"trials_skipped", v.trials_skipped}}
      .dump();
}

AttackConfig ConfigFrom(const std::string& text) {
  return text.empty() ? AttackConfig{} : AttackConfig::FromJson(json::parse(text));
}

std::string Attack(const std::string& query, const std::string& variants, const std::string& oracle,
                   const StrandDb& db, const std::string& mode, const std::string& config) {
  AttackSample sample;
  sample.query = LoadFunction(query);
  sample.variants = LoadFunctions(variants);
  sample.mode = ParseAttackMode(mode);
  const AttackConfig c = ConfigFrom(config);
  const OraclePtr o = MakeOracle(oracle);
  py::gil_scoped_release release;
  return RunAttack(sample, *o, db, c).ToJson(false, true).dump();
}

std::string Evaluate(const std::string& corpus, const std::string& oracle, std::size_t pool_size,
                     std::size_t samples, std::size_t k, const std::string& mode, std::uint64_t seed,
                     const std::string& config, std::size_t jobs) {
  const GroupedCorpus grouped = GroupCorpus(LoadFunctions(corpus));
  const auto built = BuildSamples(grouped, pool_size, samples, ParseAttackMode(mode), seed);
  const StrandDb db = ExtractStrands(grouped.functions);
  const AttackConfig c = ConfigFrom(config);
  const OraclePtr o = MakeOracle(oracle);
  py::gil_scoped_release release;
  const auto runs = RunEvaluation(built, *o, db, c, k, jobs);
  std::vector<SampleOutcome> outcomes;
  for (const auto& r : runs) outcomes.push_back(r.outcome);
  EvalConfig eval;
  eval.k = k;
  return ComputeMetrics(outcomes, eval).ToJson().dump();
}

py::tuple Cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = RunCli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace
}  // namespace advbin

PYBIND11_MODULE(_advbin, m) {
  using namespace advbin;
  m.doc() = "Native core of the advbin package";
  m.attr("__version__") = std::string(kToolVersion);

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<OracleError> oracle_error(m, "OracleError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const OracleError& e) {
      oracle_error(e.what());
    } catch (const Error& e) {
      base(e.what());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  py::class_<StrandDb>(m, "StrandDb")
      .def_static("from_corpus", [](const std::string& corpus) { return ExtractStrands(LoadFunctions(corpus)); },
                  py::arg("corpus_json"))
      .def_static("load", &StrandDb::Load, py::arg("path"))
      .def("save", &StrandDb::Save, py::arg("path"))
      .def("__len__", &StrandDb::size)
      .def("strand_text", [](const StrandDb& db, std::size_t i) { return StrandText(db.strand(i)); }, py::arg("index"))
      .def("neighbors", &StrandDb::Neighbors, py::arg("index"), py::arg("k"))
      .def_property_readonly("dim", &StrandDb::dim);

  m.def("gen_corpus", [](std::size_t groups, std::uint64_t seed) { return DumpFunctions(GenCorpus(groups, seed)); },
        py::arg("groups"), py::arg("seed"));
  m.def("normalize_function", &NormalizeFunction, py::arg("function_json"), py::arg("strict") = false);
  m.def("similarity", &Similarity, py::arg("oracle"), py::arg("a_json"), py::arg("b_json"));
  m.def("rank_pool", &Rank, py::arg("oracle"), py::arg("query_json"), py::arg("pool_json"));
  m.def("apply_action", &Apply, py::arg("function_json"), py::arg("action_json"), py::arg("db"));
  m.def("check_equivalence", &Equivalence, py::arg("a_json"), py::arg("b_json"), py::arg("trials") = 8,
        py::arg("seed") = 0);
  m.def("run_attack", &Attack, py::arg("query_json"), py::arg("variants_json"), py::arg("oracle"), py::arg("db"),
        py::arg("mode"), py::arg("config_json") = "");
  m.def("evaluate", &Evaluate, py::arg("corpus_json"), py::arg("oracle"), py::arg("pool_size"), py::arg("samples"),
        py::arg("k"), py::arg("mode"), py::arg("seed"), py::arg("config_json") = "", py::arg("jobs") = 1);
  m.def("run_cli", &Cli, py::arg("args"));
}
