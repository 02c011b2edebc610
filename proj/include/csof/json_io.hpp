#pragma once

#include <json.hpp>

#include "csof/linalg.hpp"
#include "csof/model.hpp"

namespace csof::json_io {

using nlohmann::json;

// Matrices are row-major nested arrays; vectors are flat arrays.
json matrix_to_json(const Matrix& m);
json vector_to_json(const Vector& v);
json sym_to_json(const SymMatrix& m);

/// `where` is prefixed to error messages.
Matrix matrix_from_json(const json& j, const std::string& where);
Vector vector_from_json(const json& j, const std::string& where);
SymMatrix sym_from_json(const json& j, const std::string& where);

json problem_to_json(const ProblemSpec& spec);
ProblemSpec problem_from_json(const json& j);

}  // namespace csof::json_io
