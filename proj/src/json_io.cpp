#include "csof/json_io.hpp"

#include <sstream>

#include "csof/augmented.hpp"

namespace csof::json_io {

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(where + ": missing required key '" + key + "'");
  }
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where + ": expected an integer");
  return j.get<int>();
}

template <typename T>
T number_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if constexpr (std::is_integral_v<T>) {
    return integer(j.at(key), where + "." + key);
  } else {
    return number(j.at(key), where + "." + key);
  }
}

StageModel stage_from_json(const json& j, const std::string& where) {
  StageModel s;
  s.A = matrix_from_json(require(j, "A", where), where + ".A");
  s.B = matrix_from_json(require(j, "B", where), where + ".B");
  s.G = matrix_from_json(require(j, "G", where), where + ".G");
  s.H = matrix_from_json(require(j, "H", where), where + ".H");
  s.R = sym_from_json(require(j, "R", where), where + ".R");
  return s;
}

json stage_to_json(const StageModel& s) {
  return json{{"A", matrix_to_json(s.A)},
              {"B", matrix_to_json(s.B)},
              {"G", matrix_to_json(s.G)},
              {"H", matrix_to_json(s.H)},
              {"R", sym_to_json(s.R)}};
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json sym_to_json(const SymMatrix& m) { return matrix_to_json(m.matrix()); }

Matrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  if (!j.front().is_array()) throw ParseError(where + ": expected nested row arrays");
  const auto cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      std::ostringstream os;
      os << where << ": row " << i << " has inconsistent length";
      throw ParseError(os.str());
    }
    for (Index c = 0; c < cols; ++c) {
      m(i, c) = number(row[static_cast<std::size_t>(c)], where);
    }
  }
  return m;
}

Vector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], where);
  return v;
}

SymMatrix sym_from_json(const json& j, const std::string& where) {
  const Matrix m = matrix_from_json(j, where);
  if (m.rows() != m.cols()) throw DimensionError(where + ": expected a square matrix");
  return SymMatrix(m);
}

json problem_to_json(const ProblemSpec& spec) {
  json stages = json::array();
  for (const auto& s : spec.stages) stages.push_back(stage_to_json(s));

  const auto& init = spec.boundary.init;
  json init_cov{{"mode", std::string(to_string(init.mode))},
                {"Ptilde0", sym_to_json(init.Ptilde0_minus)}};
  switch (init.mode) {
    case InitMode::Case1: init_cov["Phat0"] = sym_to_json(init.Phat0_minus); break;
    case InitMode::Case2: init_cov["P0"] = sym_to_json(init.P0); break;
    case InitMode::Explicit: init_cov["Paug0"] = sym_to_json(init.Paug0); break;
  }

  return json{
      {"name", spec.name},
      {"dims",
       {{"nx", spec.dims.nx}, {"nu", spec.dims.nu}, {"ny", spec.dims.ny}, {"nw", spec.dims.nw}}},
      {"horizon", {{"N", spec.N}}},
      {"stages", std::move(stages)},
      {"boundary",
       {{"mu0", vector_to_json(spec.boundary.mu0)},
        {"muf", vector_to_json(spec.boundary.muf)},
        {"Pf", sym_to_json(spec.boundary.Pf)},
        {"init_cov", std::move(init_cov)}}},
      {"filter", {{"underweight_p", spec.underweight_p}}},
      {"scp",
       {{"w0", spec.scp.w0},
        {"beta", spec.scp.beta},
        {"eps_rank", spec.scp.eps_rank},
        {"eps_obj", spec.scp.eps_obj},
        {"eps_cross", spec.scp.eps_cross},
        {"max_iters", spec.scp.max_iters},
        {"w_max", spec.scp.w_max}}},
  };
}

ProblemSpec problem_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("problem: top level must be an object");
  ProblemSpec spec;
  if (j.contains("name") && j.at("name").is_string()) spec.name = j.at("name").get<std::string>();

  const json& dims = require(j, "dims", "problem");
  spec.dims.nx = integer(require(dims, "nx", "dims"), "dims.nx");
  spec.dims.nu = integer(require(dims, "nu", "dims"), "dims.nu");
  spec.dims.ny = integer(require(dims, "ny", "dims"), "dims.ny");
  spec.dims.nw = number_or<int>(dims, "nw", spec.dims.nx, "dims");

  spec.N = integer(require(require(j, "horizon", "problem"), "N", "horizon"), "horizon.N");

  const json& stages = require(j, "stages", "problem");
  if (stages.is_array()) {
    for (std::size_t k = 0; k < stages.size(); ++k) {
      spec.stages.push_back(stage_from_json(stages[k], "stages[" + std::to_string(k) + "]"));
    }
  } else if (stages.is_object() && stages.contains("constant")) {
    if (spec.N < 0) throw ValidationError("horizon: N must be >= 2");
    const StageModel s = stage_from_json(stages.at("constant"), "stages.constant");
    spec.stages.assign(static_cast<std::size_t>(spec.N), s);
  } else {
    throw ParseError("stages: expected an array or an object with a 'constant' block");
  }

  const json& bnd = require(j, "boundary", "problem");
  spec.boundary.mu0 = vector_from_json(require(bnd, "mu0", "boundary"), "boundary.mu0");
  spec.boundary.muf = vector_from_json(require(bnd, "muf", "boundary"), "boundary.muf");
  spec.boundary.Pf = sym_from_json(require(bnd, "Pf", "boundary"), "boundary.Pf");

  const json& ic = require(bnd, "init_cov", "boundary");
  const std::string where = "boundary.init_cov";
  const json& mode = require(ic, "mode", where);
  if (!mode.is_string()) throw ParseError(where + ".mode: expected a string");
  auto& init = spec.boundary.init;
  init.Ptilde0_minus = sym_from_json(require(ic, "Ptilde0", where), where + ".Ptilde0");
  const std::string m = mode.get<std::string>();
  // Block shapes are checked by the validator; mismatched builder inputs are
  // reported here as dimension errors.
  if (m == "case1") {
    init.mode = InitMode::Case1;
    init.Phat0_minus = sym_from_json(require(ic, "Phat0", where), where + ".Phat0");
    init.Paug0 = build_case1_init(init.Ptilde0_minus, init.Phat0_minus);
  } else if (m == "case2") {
    init.mode = InitMode::Case2;
    init.P0 = sym_from_json(require(ic, "P0", where), where + ".P0");
    init.Paug0 = build_case2_init(init.Ptilde0_minus, init.P0);
  } else if (m == "explicit") {
    init.mode = InitMode::Explicit;
    init.Paug0 = sym_from_json(require(ic, "Paug0", where), where + ".Paug0");
  } else {
    throw ParseError(where + ".mode: expected 'case1', 'case2' or 'explicit', got '" + m + "'");
  }

  if (j.contains("filter")) {
    spec.underweight_p = number_or<double>(j.at("filter"), "underweight_p", 1.0, "filter");
  }
  if (j.contains("scp")) {
    const json& s = j.at("scp");
    const ScpParams d;
    spec.scp.w0 = number_or<double>(s, "w0", d.w0, "scp");
    spec.scp.beta = number_or<double>(s, "beta", d.beta, "scp");
    spec.scp.eps_rank = number_or<double>(s, "eps_rank", d.eps_rank, "scp");
    spec.scp.eps_obj = number_or<double>(s, "eps_obj", d.eps_obj, "scp");
    spec.scp.eps_cross = number_or<double>(s, "eps_cross", d.eps_cross, "scp");
    spec.scp.max_iters = number_or<int>(s, "max_iters", d.max_iters, "scp");
    spec.scp.w_max = number_or<double>(s, "w_max", d.w_max, "scp");
  }
  return spec;
}

}  // namespace csof::json_io
