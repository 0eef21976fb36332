#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "doe/plan.hpp"
#include "doe/skeleton.hpp"

namespace doe {

/// Observed data: the layout columns of a valid plan plus a response value
/// per response unit.
struct DataTable {
    std::vector<std::string> columns;  // base factor names, layout order
    std::vector<FactorId> column_ids;
    std::vector<std::vector<long long>> rows;
    std::vector<double> response;
};

struct AnovaRow {
    FactorId factor = -1;
    std::string label;
    long long df = 0;
    double ss = 0.0;
    double ms = 0.0;        // valid when df > 0
    double f_ratio = 0.0;   // valid when has_f
    bool has_ms = false;
    bool has_f = false;
    FactorId stratum = -1;
    Denominator denominator;
};

struct AnovaTable {
    std::vector<AnovaRow> rows;  // skeleton order, M excluded
    double total_ss = 0.0;       // sum of y^2 over all observations
    double mean_ss = 0.0;        // SS attributed to M
};

class AnovaError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Per-factor effect values, one per level-class, from the topological sweep
/// effect(F, class) = class mean - sum of ancestor effects. Balanced data only.
std::map<FactorId, std::vector<double>> effect_decomposition(const Diagram& diagram,
                                                             const DataTable& data);

AnovaTable compute_anova(const Diagram& diagram, const DataTable& data);

/// Fixed effects for simulation, keyed by factor id; one value per level
/// (interaction levels in mixed-radix constituent order).
using FixedEffects = std::map<FactorId, std::vector<double>>;
using VarianceComponents = std::map<FactorId, double>;  // random factor -> sigma^2

/// Simulate a response vector over a seeded plan: fixed effects along each
/// observation's level path plus one zero-mean normal draw per random-factor
/// level. Deterministic given seed.
DataTable simulate_response(const Diagram& diagram, const FixedEffects& effects,
                            const VarianceComponents& components, std::uint64_t seed);

/// Class index of every observation for a factor (0-based dense ids).
std::vector<long long> factor_classes(const Diagram& diagram, const DataTable& data, FactorId f);

/// Evaluate an EMS at given variance components; fixed-effect Q terms count as
/// zero. This is the expected mean square under zero fixed effects.
double ems_value(const EmsExpression& ems, const VarianceComponents& components);

DataTable data_from_csv(std::istream& in, const Diagram& diagram);
std::string to_text(const AnovaTable& table, const Diagram& diagram);

}  // namespace doe
