// Copyright 2026 The pmqs Authors
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

// Instance documents (schema "pmqs-instance", version 1):
//
//   {
//     "schema": "pmqs-instance", "version": 1, "family": "qcnp" | ...,
//     "params": {...},            // generator parameters
//     "data": {...},              // every array needed to rebuild the instance
//     "moduli": [L_0, ..., L_p],  // informational; recomputed on load
//     "bounds": {"nu_g", "kappa_f", "kappa_g"},
//     "slater": {"point", "margin"}   // when present
//   }
//
// Matrices are arrays of rows. Doubles are written with round-trip precision.

#ifndef PMQS_PROBLEMS_IO_HPP_
#define PMQS_PROBLEMS_IO_HPP_

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmqs/core.hpp"
#include "pmqs/problems/fairness.hpp"
#include "pmqs/problems/neyman_pearson.hpp"
#include "pmqs/problems/qcnp.hpp"

namespace pmqs {

using Json = nlohmann::json;

inline constexpr const char* kInstanceSchema = "pmqs-instance";
inline constexpr int kInstanceVersion = 1;

namespace json_detail {

inline Json FromVector(const Vector& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vector ToVector(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(),
                                  static_cast<Index>(values.size()));
}

inline Json FromMatrix(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(FromVector(m.row(i)));
  return rows;
}

inline Matrix ToMatrix(const Json& j, Index cols) {
  Matrix m(static_cast<Index>(j.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    const Vector row = ToVector(j.at(static_cast<std::size_t>(i)));
    if (row.size() != cols) throw Error("instance: ragged matrix row");
    m.row(i) = row;
  }
  return m;
}

inline Json FromMatrices(const std::vector<Matrix>& ms) {
  Json out = Json::array();
  for (const Matrix& m : ms) out.push_back(FromMatrix(m));
  return out;
}

inline std::vector<Matrix> ToMatrices(const Json& j, Index cols) {
  std::vector<Matrix> out;
  for (const Json& m : j) out.push_back(ToMatrix(m, cols));
  return out;
}

inline void WriteCommon(const StochasticProblem& problem, Json& doc) {
  const ProblemInfo& info = problem.info();
  doc["moduli"] = FromVector(info.moduli);
  if (info.bounds) {
    doc["bounds"] = {{"nu_g", info.bounds->nu_g},
                     {"kappa_f", info.bounds->kappa_f},
                     {"kappa_g", info.bounds->kappa_g}};
  }
  if (info.slater) {
    doc["slater"] = {{"point", FromVector(info.slater->point)},
                     {"margin", info.slater->margin}};
  }
}

}  // namespace json_detail

inline Json InstanceToJson(const StochasticProblem& problem) {
  using namespace json_detail;
  Json doc;
  doc["schema"] = kInstanceSchema;
  doc["version"] = kInstanceVersion;
  doc["family"] = problem.info().family;
  if (const auto* q = dynamic_cast<const QcnpProblem*>(&problem)) {
    const QcnpParams& p = q->params();
    doc["params"] = {{"n", p.n},           {"p", p.p},
                     {"N", p.num_samples}, {"m", p.m},
                     {"R", p.radius},      {"q_max", p.q_max},
                     {"a_range", {p.a_lo, p.a_hi}},
                     {"xbar_range", {p.xbar_lo, p.xbar_hi}}};
    const QcnpData& d = q->data();
    Json c = Json::array();
    for (const Vector& v : d.c) c.push_back(FromVector(v));
    doc["data"] = {{"H", FromMatrices(d.h)},   {"c", c},
                   {"A", FromMatrices(d.a)},   {"Q_diag", FromMatrices(d.q_diag)},
                   {"xbar", FromVector(d.xbar)}, {"xfeas", FromVector(d.xfeas)},
                   {"xobj", FromVector(d.xobj)}};
  } else if (const auto* np = dynamic_cast<const NeymanPearsonProblem*>(&problem)) {
    const NpParams& p = np->params();
    doc["params"] = {{"d", p.d},     {"n0", p.n0},
                     {"n1", p.n1},   {"tau", p.tau},
                     {"separation", p.separation}, {"R", p.radius}};
    doc["data"] = {{"positive", FromMatrix(np->data().positive)},
                   {"negative", FromMatrix(np->data().negative)}};
  } else if (const auto* fp = dynamic_cast<const FairnessProblem*>(&problem)) {
    const FairnessParams& p = fp->params();
    doc["params"] = {{"d", p.d},
                     {"sizes", {p.size_d, p.size_s, p.size_min}},
                     {"tau", p.tau},
                     {"truncation", p.truncation},
                     {"R", p.radius}};
    doc["data"] = {{"features", FromMatrix(fp->data().features)},
                   {"labels", FromVector(fp->data().labels)}};
  } else {
    throw Error("InstanceToJson: unsupported problem family '" +
                problem.info().family + "'");
  }
  WriteCommon(problem, doc);
  return doc;
}

inline std::unique_ptr<StochasticProblem> InstanceFromJson(const Json& doc) {
  using namespace json_detail;
  try {
    if (doc.at("schema").get<std::string>() != kInstanceSchema) {
      throw Error("instance: unexpected schema '" +
                  doc.at("schema").get<std::string>() + "'");
    }
    const int version = doc.at("version").get<int>();
    if (version != kInstanceVersion) {
      throw Error("instance: unsupported version " + std::to_string(version));
    }
    const std::string family = doc.at("family").get<std::string>();
    const Json& params = doc.at("params");
    const Json& data = doc.at("data");
    if (family == "qcnp") {
      QcnpParams p;
      p.n = params.at("n").get<Index>();
      p.p = params.at("p").get<Index>();
      p.num_samples = params.at("N").get<Index>();
      p.m = params.at("m").get<Index>();
      p.radius = params.at("R").get<double>();
      p.q_max = params.at("q_max").get<double>();
      p.a_lo = params.at("a_range").at(0).get<double>();
      p.a_hi = params.at("a_range").at(1).get<double>();
      p.xbar_lo = params.at("xbar_range").at(0).get<double>();
      p.xbar_hi = params.at("xbar_range").at(1).get<double>();
      QcnpData d;
      d.h = ToMatrices(data.at("H"), p.n);
      for (const Json& c : data.at("c")) d.c.push_back(ToVector(c));
      d.a = ToMatrices(data.at("A"), p.n);
      d.q_diag = ToMatrices(data.at("Q_diag"), p.n);
      d.xbar = ToVector(data.at("xbar"));
      d.xfeas = ToVector(data.at("xfeas"));
      d.xobj = ToVector(data.at("xobj"));
      return std::make_unique<QcnpProblem>(p, std::move(d));
    }
    if (family == "neyman_pearson") {
      NpParams p;
      p.d = params.at("d").get<Index>();
      p.tau = params.at("tau").get<double>();
      p.separation = params.at("separation").get<double>();
      p.radius = params.at("R").get<double>();
      NpData d;
      d.positive = ToMatrix(data.at("positive"), p.d);
      d.negative = ToMatrix(data.at("negative"), p.d);
      return std::make_unique<NeymanPearsonProblem>(p, std::move(d));
    }
    if (family == "fairness") {
      FairnessParams p;
      p.d = params.at("d").get<Index>();
      p.size_d = params.at("sizes").at(0).get<Index>();
      p.size_s = params.at("sizes").at(1).get<Index>();
      p.size_min = params.at("sizes").at(2).get<Index>();
      p.tau = params.at("tau").get<double>();
      p.truncation = params.at("truncation").get<double>();
      p.radius = params.at("R").get<double>();
      FairnessData d;
      d.features = ToMatrix(data.at("features"), p.d);
      d.labels = ToVector(data.at("labels"));
      return std::make_unique<FairnessProblem>(p, std::move(d));
    }
    throw Error("instance: unknown family '" + family + "'");
  } catch (const Json::exception& e) {
    throw Error(std::string("instance: malformed document: ") + e.what());
  }
}

inline void SaveInstance(const StochasticProblem& problem,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << InstanceToJson(problem).dump() << "\n";
}

inline std::unique_ptr<StochasticProblem> LoadInstance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open instance file '" + path + "'");
  Json doc;
  try {
    in >> doc;
  } catch (const Json::exception& e) {
    throw Error("instance '" + path + "': " + e.what());
  }
  return InstanceFromJson(doc);
}

}  // namespace pmqs

#endif  // PMQS_PROBLEMS_IO_HPP_
