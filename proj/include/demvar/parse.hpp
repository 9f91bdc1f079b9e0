#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "demvar/model.hpp"

namespace demvar {

struct ParseError : std::runtime_error {
    int line;  // 1-based
    int column;
    ParseError(int line_, int column_, const std::string& what_)
        : std::runtime_error("line " + std::to_string(line_) + ":" +
                             std::to_string(column_) + ": " + what_),
          line(line_),
          column(column_) {}
};

// Line-oriented grammar, '#' starts a comment:
//   MDP
//   STATE <name> [ABSORBING] [WEIGHT <rational>]
//   INIT <name>
//   TRANS <state> <action> [REWARD <uint>] -> <state>:<rational> ...
// ABSORBING states without TRANS lines get an implicit self-loop 'loop'.
Mdp parse_model(std::string_view text);

// Inverse of parse_model up to formatting; parse(print(m)) == m structurally.
std::string print_model(const Mdp& m);

}  // namespace demvar
