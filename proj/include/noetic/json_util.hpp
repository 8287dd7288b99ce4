#pragma once

#include "noetic/signal.hpp"

#include <nlohmann/json.hpp>

namespace noetic {

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

}  // namespace noetic
