#pragma once

#include <string>

#include "demvar/model.hpp"

namespace demvar {

enum class QpKind { Max, Demonic };

// Textual quadratic program over the occupation-measure polytope: one line
// per constraint `name: coef*var ... = rhs`, moment definitions, and a final
// `max:` objective. Demonic adds a primed copy of the polytope and writes
// bilinear terms as y[q]*y'[r]. Expects a weighted-reachability model
// (reward models are unfolded by the caller).
std::string export_qp(const Mdp& m, QpKind kind);

}  // namespace demvar
