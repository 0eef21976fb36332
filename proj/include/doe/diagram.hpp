#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "doe/dsl.hpp"

namespace doe {

using FactorId = int;
constexpr FactorId kMean = 0;  // the general mean M is always factor 0

enum class Role { mean, treatment, unit, unit_by_treatment };

/// A declared base factor. Bases keep their identity even when the poset has
/// no node for them (a main effect dropped while its interaction is kept).
struct BaseFactor {
    std::string name;
    Variability variability = Variability::fixed;
    DeclRole decl_role = DeclRole::treatment;
    long long levels = 1;
    FactorId node = -1;  // poset node, -1 when absent
};

/// A factor in a Hasse diagram: a partition of the experimental material.
struct Factor {
    std::string name;                // colon-joined for interactions
    std::vector<int> constituents;   // sorted base indices; empty for M
    Variability variability = Variability::fixed;
    Role role = Role::unit;
    long long levels = 1;

    bool is_base() const { return constituents.size() == 1; }
    bool is_interaction() const { return constituents.size() > 1; }
};

/// Nesting metadata for a declared unit factor (base indices).
struct UnitNesting {
    long long per_parent = 1;
    std::vector<int> parents;  // empty means nested directly under M
};

/// A factor poset. `below(x, y)` is the strict order "x nested in y"; cover
/// edges are its transitive reduction. Operations return new diagrams and
/// never mutate their inputs.
class Diagram {
  public:
    std::vector<Factor> factors;
    std::vector<BaseFactor> bases;

    FactorId response = -1;                 // -1 when unmarked
    std::map<int, int> randomization;       // treatment base -> unit base (indices)
    std::map<int, UnitNesting> unit_nesting;

    // Response-unit enumeration: one row per response unit, one column per
    // unit base factor (1-based level ids). Filled by build_unit_poset.
    std::vector<int> unit_columns;  // base indices, declaration order
    std::vector<std::vector<long long>> unit_rows;

    std::vector<long long> df;            // per factor; empty until computed
    std::vector<std::string> merge_log;   // provenance of zero-df merges
    std::map<FactorId, std::vector<std::string>> absorbed;  // survivor -> merged names
    std::vector<std::string> notes;       // composition remarks (not failures)

    int size() const { return static_cast<int>(factors.size()); }
    bool below(FactorId x, FactorId y) const { return below_[x][y]; }
    const std::vector<std::pair<FactorId, FactorId>>& cover_edges() const { return covers_; }

    FactorId find(std::string_view name) const;  // -1 if absent
    FactorId find_constituents(const std::vector<int>& bases) const;
    int base_index(std::string_view name) const;  // -1 if absent

    std::vector<FactorId> ancestors(FactorId f) const;    // strictly above
    std::vector<FactorId> descendants(FactorId f) const;  // strictly below
    std::vector<FactorId> cover_parents(FactorId f) const;
    std::vector<FactorId> cover_children(FactorId f) const;
    int height(FactorId f) const;  // longest path from M
    bool has_df() const { return !df.empty(); }

    /// Ids in topological order (M first), ties broken by display name.
    std::vector<FactorId> topological_order() const;

    /// Base indices transitively determined by a level of the given bases:
    /// unit ancestors plus treatments randomized on determined units.
    std::set<int> determined(const std::vector<int>& base_set) const;

    // Construction (builders and tests).
    FactorId add_factor(Factor f);
    void set_below(FactorId x, FactorId y);
    void recompute_order();   // derive the full order from constituents/nesting
    void close_and_reduce();  // transitive closure of below_, then covers

  private:
    std::vector<std::vector<bool>> below_;
    std::vector<std::pair<FactorId, FactorId>> covers_;  // (upper, lower)
};

class BuildError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

Diagram build_treatment_poset(const DesignSpec& spec);
Diagram build_unit_poset(const DesignSpec& spec);

/// Merge treatment and unit diagrams along the randomization map. The policy
/// controls which unit-by-treatment interactions are inserted.
Diagram compose_experiment(const Diagram& treatment, const Diagram& unit,
                           const std::vector<std::pair<std::string, std::string>>& randomize,
                           const InteractionPolicy& policy);

/// Find or insert the factor for a constituent set (given as factor ids).
/// A constituent already below another absorbs it ({Plot, Block} -> Plot).
FactorId canonicalize_interaction(const std::vector<FactorId>& constituents, Diagram& diagram);

/// Recompute cover edges as the transitive reduction of the order.
Diagram transitive_reduction(Diagram diagram);

/// df(M) = 1; walking down, df(F) = levels(F) minus the df of every factor
/// strictly above F. Results are memoized on the diagram.
std::map<FactorId, long long> degrees_of_freedom(Diagram& diagram);

/// Negative df (inconsistent or unbalanced structure).
class DegreesOfFreedomError : public BuildError {
  public:
    DegreesOfFreedomError(const std::string& msg, FactorId f) : BuildError(msg), factor_(f) {}
    FactorId factor() const { return factor_; }

  private:
    FactorId factor_;
};

/// Remove zero-df factors, recording what each was confounded with. Requires
/// df computed.
Diagram merge_zero_df(const Diagram& diagram);

/// Full pipeline: build both posets, compose, compute df.
Diagram compose(const DesignSpec& spec);

}  // namespace doe
