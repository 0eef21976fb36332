#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "doe/diagram.hpp"

namespace doe {

/// Symbolic expected mean squares: an optional fixed-effect term plus variance
/// components, each with coefficient N / levels(factor).
struct EmsTerm {
    long long coeff = 1;
    FactorId factor = -1;
};

struct EmsExpression {
    std::optional<EmsTerm> fixed_q;  // Q(f), present when f is fixed
    std::vector<EmsTerm> variance;   // sigma^2 components, decreasing coefficient

    bool operator==(const EmsExpression& other) const;

    /// The expression without the given factor's own component (what a
    /// denominator's EMS must equal).
    EmsExpression without(FactorId f) const;
};

/// F-test denominator for a factor: a unique factor, no exact test (with the
/// incomparable candidates), or none (the minimum factor has no denominator).
struct Denominator {
    enum class Kind { factor, no_exact_test, none };
    Kind kind = Kind::none;
    FactorId id = -1;
    std::vector<FactorId> candidates;  // filled for no_exact_test
};

struct SkeletonRow {
    FactorId factor = -1;
    std::string label;       // factor name; the minimum unit factor reads "Residual"
    long long levels = 0;
    long long df = 0;
    FactorId stratum = -1;
    Denominator denominator;
    EmsExpression ems;
};

struct SkeletonTable {
    std::vector<SkeletonRow> rows;  // stratum-then-topological order, M excluded
};

enum class DiagnosticKind {
    pseudo_replication,
    complete_confounding,
    marginality_violation,
    no_exact_test,
    unit_treatment_interaction_assumed_negligible,
};

struct Diagnostic {
    DiagnosticKind kind;
    std::vector<FactorId> subjects;
    std::string message;
};

/// Experimental unit of each treatment factor: the unit factor it is randomized
/// on; for interactions, the lowest among the constituents' units. Entries are
/// absent when the candidates are incomparable (split-block-like designs).
std::map<FactorId, FactorId> experimental_units(const Diagram& diagram);

std::vector<Diagnostic> detect_pseudo_replication(const Diagram& diagram);
std::vector<Diagnostic> marginality_check(const Diagram& diagram);

/// All design diagnostics: pseudo-replication, marginality, zero-df
/// confounding, no-exact-test situations, and negligibility assumptions.
std::vector<Diagnostic> design_diagnostics(const Diagram& diagram);

/// The closest random factor below f not involving a new fixed factor.
Denominator find_denominator(const Diagram& diagram, FactorId f);

/// Stratum of every non-mean factor. Random non-treatment factors head their
/// own strata; tested factors join their denominator's stratum.
std::map<FactorId, FactorId> error_strata(const Diagram& diagram);

EmsExpression expected_mean_squares(const Diagram& diagram, FactorId f);

SkeletonTable skeleton_table(const Diagram& diagram);

std::string to_text(const SkeletonTable& table, const Diagram& diagram);
std::string to_csv(const SkeletonTable& table, const Diagram& diagram);
std::string to_string(const EmsExpression& ems, const Diagram& diagram);
std::string to_string(DiagnosticKind kind);

}  // namespace doe
