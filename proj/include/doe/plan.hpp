#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "doe/diagram.hpp"

namespace doe {

/// A randomized layout: one row per response unit, columns for every unit
/// factor (decreasing height) followed by every base treatment factor
/// (declaration order). Values are 1-based level ids.
struct Plan {
    std::vector<std::string> columns;
    std::vector<FactorId> column_ids;
    std::vector<std::vector<long long>> rows;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

struct PlanViolation {
    std::string message;
    std::vector<std::size_t> rows;  // offending row indices (0-based)
};

struct PlanReport {
    std::vector<PlanViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Randomization restrictions for the treatments sharing one experimental
/// unit factor, derived from the composed diagram.
///
/// grouped: unit levels are grouped by the joint level of all unit factors
///   above the experimental unit; each group receives a balanced shuffle.
/// latin: one unit per crossed-cell and a level count matching the grid size;
///   generation delegates to a Latin square per context group.
/// pooled: crossed-cell randomization without the once-per-line restriction
///   (balanced only within context groups); carries a warning.
struct RandomizationScheme {
    enum class Mode { grouped, latin, pooled };
    Mode mode = Mode::grouped;
    int unit_base = -1;
    std::vector<int> treatments;  // randomized treatment bases, declaration order
    long long combos = 1;         // joint treatment level combinations

    std::vector<std::vector<long long>> groups;  // unit level ids per restriction group

    struct Grid {
        std::vector<long long> rows, cols;  // grid factor level ids
        std::map<std::pair<long long, long long>, long long> cell;  // (row, col) -> unit level
    };
    std::vector<Grid> grids;       // latin mode
    int row_base = -1, col_base = -1;

    std::string warning;  // set for pooled mode
    std::string error;    // balance failure; empty when satisfiable
};

std::vector<RandomizationScheme> analyze_randomization(const Diagram& diagram);

/// Seeded, balanced randomization honoring every restriction implied by the
/// diagram. Deterministic given (diagram, seed).
Plan generate_plan(const Diagram& diagram, std::uint64_t seed);

/// Latin square of order a: cyclic square, then seeded row, column, and symbol
/// permutations. Values are 1..a.
std::vector<std::vector<int>> generate_latin_square(int a, std::uint64_t seed);

/// Check both plan invariants: nesting-consistent unit columns and balanced
/// treatment assignment within every randomization-restriction group.
PlanReport validate_plan(const Plan& plan, const Diagram& diagram);

std::string to_csv(const Plan& plan);
Plan plan_from_csv(std::istream& in, const Diagram& diagram);

class PlanError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace doe
