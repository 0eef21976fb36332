#include <set>
#include <sstream>

#include "doe/diagram.hpp"
#include "doe/dsl.hpp"
#include "doe/plan.hpp"

namespace doe {

ValidationReport validate_spec(const DesignSpec& spec) {
    ValidationReport report;
    auto add = [&](Severity s, std::string code, std::string msg) {
        report.entries.push_back({s, std::move(code), std::move(msg)});
    };

    for (const auto& d : spec.treatments)
        if (d.variability == Variability::random)
            add(Severity::error, "random-treatment",
                "treatment factor '" + d.name + "' is random; random treatment factors are not supported");

    // Reachability: every declared treatment should occur in the structure.
    std::set<std::string> structure_names;
    for (const auto& term : expand_terms(spec.structure))
        structure_names.insert(term.begin(), term.end());
    for (const auto& d : spec.treatments)
        if (!structure_names.count(d.name))
            add(Severity::warning, "unreachable-factor",
                "treatment factor '" + d.name + "' does not occur in the structure expression");

    // Every structure base must be randomized somewhere.
    std::set<std::string> randomized;
    for (const auto& [t, u] : spec.randomize) {
        if (!randomized.insert(t).second)
            add(Severity::error, "duplicate-randomization",
                "treatment factor '" + t + "' is randomized more than once");
    }
    for (const auto& n : structure_names)
        if (!randomized.count(n))
            add(Severity::error, "missing-randomization",
                "treatment factor '" + n + "' is never randomized on a unit factor");

    // Kept interactions must draw on factors present in the model.
    if (spec.policy.kind == InteractionPolicy::Kind::explicit_list) {
        for (const auto& term : spec.policy.keep)
            for (const auto& n : term) {
                bool is_unit = false;
                for (const auto& u : spec.units)
                    if (u.name == n) is_unit = true;
                if (!is_unit && !structure_names.count(n))
                    add(Severity::error, "constituent-missing",
                        "kept interaction names '" + n + "', which is absent from the treatment structure");
            }
    }

    Diagram unit;
    try {
        unit = build_unit_poset(spec);
    } catch (const BuildError& e) {
        add(Severity::error, "unit-structure", e.what());
        return report;
    }
    try {
        Diagram treatment = build_treatment_poset(spec);
        if (report.ok()) {
            Diagram composed = compose_experiment(treatment, unit, spec.randomize, spec.policy);
            // Randomization targets must sit on the response nesting chain.
            for (const auto& [t, u] : spec.randomize) {
                int ub = composed.base_index(u);
                FactorId node = ub >= 0 ? composed.bases[ub].node : -1;
                if (node >= 0 && composed.response >= 0 && node != composed.response &&
                    !composed.below(composed.response, node))
                    add(Severity::error, "randomization-target",
                        "treatment '" + t + "' is randomized on '" + u +
                            "', which is not on the response nesting chain");
            }
            // Balance of every randomization restriction.
            for (const auto& s : analyze_randomization(composed)) {
                if (!s.error.empty())
                    add(Severity::error, "balance", s.error);
                else if (!s.warning.empty())
                    add(Severity::warning, "pooled-randomization", s.warning);
            }
            try {
                degrees_of_freedom(composed);
            } catch (const DegreesOfFreedomError& e) {
                add(Severity::error, "negative-df", e.what());
            }
        }
    } catch (const BuildError& e) {
        add(Severity::error, "compose", e.what());
    }
    return report;
}

}  // namespace doe
