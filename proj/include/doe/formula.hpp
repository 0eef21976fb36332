#pragma once

#include <set>
#include <string>
#include <vector>

#include "doe/diagram.hpp"

namespace doe {

/// Emitting the Error() dialect fails when a design needs a mixed model.
class FormulaError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// "<fixed-part>+Error(<unit-part>)" with "/" for nesting chains and "+" for
/// crossed random unit factors; M and the minimum unit factor are omitted.
/// Throws FormulaError when a random unit-by-treatment interaction is present.
std::string emit_error_stratum_formula(const Diagram& diagram);

/// "<fixed-part>+(1|G1)+..." with one term per non-minimum random factor;
/// unambiguous nesting chains compact to "(1|B1/B2)".
std::string emit_pipe_random_term_formula(const Diagram& diagram);

/// Canonical term set of a symbolic formula: each term is the sorted set of
/// base names after expanding "*" and "/" ("A*B" -> {A}, {B}, {A,B}).
std::set<std::set<std::string>> expand_formula(std::string_view formula);

}  // namespace doe
