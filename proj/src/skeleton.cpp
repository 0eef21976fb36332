#include "doe/skeleton.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace doe {

namespace {

std::vector<int> fixed_bases(const Diagram& d, FactorId f) {
    std::vector<int> out;
    for (int b : d.factors[f].constituents)
        if (d.bases[b].variability == Variability::fixed) out.push_back(b);
    return out;
}

bool subset(const std::vector<int>& a, const std::vector<int>& b) {
    for (int x : a)
        if (std::find(b.begin(), b.end(), x) == b.end()) return false;
    return true;
}

FactorId minimum_factor(const Diagram& d) {
    FactorId min = -1;
    for (int f = 0; f < d.size(); ++f)
        if (d.descendants(f).empty()) {
            if (min >= 0) return -1;  // not unique
            min = f;
        }
    return min;
}

}  // namespace

EmsExpression EmsExpression::without(FactorId f) const {
    EmsExpression out = *this;
    if (out.fixed_q && out.fixed_q->factor == f) out.fixed_q.reset();
    std::erase_if(out.variance, [&](const EmsTerm& t) { return t.factor == f; });
    return out;
}

bool EmsExpression::operator==(const EmsExpression& other) const {
    auto term_eq = [](const EmsTerm& a, const EmsTerm& b) {
        return a.coeff == b.coeff && a.factor == b.factor;
    };
    if (fixed_q.has_value() != other.fixed_q.has_value()) return false;
    if (fixed_q && !term_eq(*fixed_q, *other.fixed_q)) return false;
    if (variance.size() != other.variance.size()) return false;
    for (std::size_t i = 0; i < variance.size(); ++i)
        if (!term_eq(variance[i], other.variance[i])) return false;
    return true;
}

std::map<FactorId, FactorId> experimental_units(const Diagram& d) {
    std::map<FactorId, FactorId> out;
    for (int f = 0; f < d.size(); ++f) {
        if (d.factors[f].role != Role::treatment) continue;
        if (d.factors[f].is_base()) {
            auto it = d.randomization.find(d.factors[f].constituents[0]);
            if (it == d.randomization.end()) continue;
            FactorId node = d.bases[it->second].node;
            if (node >= 0) out[f] = node;
        }
    }
    for (int f = 0; f < d.size(); ++f) {
        if (d.factors[f].role != Role::treatment || !d.factors[f].is_interaction()) continue;
        std::vector<FactorId> units;
        bool complete = true;
        for (int b : d.factors[f].constituents) {
            FactorId node = d.bases[b].node;
            auto it = node >= 0 ? out.find(node) : out.end();
            auto rand_it = d.randomization.find(b);
            if (rand_it != d.randomization.end() && d.bases[rand_it->second].node >= 0) {
                units.push_back(d.bases[rand_it->second].node);
            } else if (it != out.end()) {
                units.push_back(it->second);
            } else {
                complete = false;
            }
        }
        if (!complete || units.empty()) continue;
        // The lowest (most nested) unit; all candidates must be comparable.
        FactorId lowest = units[0];
        for (FactorId u : units)
            if (d.below(u, lowest)) lowest = u;
        bool comparable = true;
        for (FactorId u : units)
            if (u != lowest && !d.below(lowest, u)) comparable = false;
        if (comparable) out[f] = lowest;
    }
    return out;
}

std::vector<Diagnostic> detect_pseudo_replication(const Diagram& d) {
    std::vector<Diagnostic> out;
    if (d.response < 0) return out;
    auto eu = experimental_units(d);
    for (int f = 0; f < d.size(); ++f) {
        if (d.factors[f].role != Role::treatment) continue;
        auto it = eu.find(f);
        if (it == eu.end()) continue;
        if (d.below(d.response, it->second)) {
            Diagnostic diag;
            diag.kind = DiagnosticKind::pseudo_replication;
            diag.subjects = {f, it->second, d.response};
            diag.message = "experimental unit for '" + d.factors[f].name + "' is '" +
                           d.factors[it->second].name + "'; measurements on '" +
                           d.factors[d.response].name + "' are pseudo-replications";
            out.push_back(std::move(diag));
        }
    }
    return out;
}

std::vector<Diagnostic> marginality_check(const Diagram& d) {
    std::vector<Diagnostic> out;
    for (int f = 0; f < d.size(); ++f) {
        if (!d.factors[f].is_interaction()) continue;
        for (int b : d.factors[f].constituents) {
            if (d.bases[b].node >= 0) continue;
            Diagnostic diag;
            diag.kind = DiagnosticKind::marginality_violation;
            diag.subjects = {f};
            diag.message = "interaction '" + d.factors[f].name + "' is present but the main effect of '" +
                           d.bases[b].name + "' is not; removing a factor requires removing every " +
                           "interaction that contains it";
            out.push_back(std::move(diag));
        }
    }
    return out;
}

Denominator find_denominator(const Diagram& d, FactorId f) {
    auto f_fixed = fixed_bases(d, f);
    std::vector<FactorId> candidates;
    for (int g = 0; g < d.size(); ++g) {
        if (!d.below(g, f)) continue;
        if (d.factors[g].variability != Variability::random) continue;
        if (!subset(fixed_bases(d, g), f_fixed)) continue;
        candidates.push_back(g);
    }
    Denominator out;
    if (candidates.empty()) return out;  // kind none: f is (or acts as) the minimum
    std::vector<FactorId> maximal;
    for (FactorId c : candidates) {
        bool dominated = false;
        for (FactorId other : candidates)
            if (other != c && d.below(c, other)) dominated = true;
        if (!dominated) maximal.push_back(c);
    }
    if (maximal.size() == 1) {
        out.kind = Denominator::Kind::factor;
        out.id = maximal[0];
    } else {
        out.kind = Denominator::Kind::no_exact_test;
        out.candidates = maximal;
    }
    return out;
}

std::map<FactorId, FactorId> error_strata(const Diagram& d) {
    std::map<FactorId, FactorId> out;
    auto eu = experimental_units(d);
    for (int f = 1; f < d.size(); ++f) {
        const Factor& fac = d.factors[f];
        if (fac.variability == Variability::random && fac.role != Role::treatment) {
            out[f] = f;  // random unit factors (and kept random interactions) head strata
            continue;
        }
        Denominator den = find_denominator(d, f);
        if (den.kind == Denominator::Kind::factor) {
            out[f] = den.id;
        } else if (den.kind == Denominator::Kind::no_exact_test) {
            auto it = eu.find(f);
            out[f] = it != eu.end() ? it->second : den.candidates.front();
        } else {
            out[f] = f;
        }
    }
    return out;
}

EmsExpression expected_mean_squares(const Diagram& d, FactorId f) {
    FactorId min = d.response >= 0 ? d.response : minimum_factor(d);
    if (min < 0) throw BuildError("expected mean squares require a unique minimum factor");
    const long long n_total = d.factors[min].levels;
    EmsExpression out;
    const Factor& fac = d.factors[f];
    if (fac.variability == Variability::fixed) {
        out.fixed_q = EmsTerm{n_total / fac.levels, f};
    } else {
        out.variance.push_back(EmsTerm{n_total / fac.levels, f});
    }
    auto f_fixed = fixed_bases(d, f);
    for (int g = 0; g < d.size(); ++g) {
        if (!d.below(g, f)) continue;
        if (d.factors[g].variability != Variability::random) continue;
        if (!subset(fixed_bases(d, g), f_fixed)) continue;
        out.variance.push_back(EmsTerm{n_total / d.factors[g].levels, g});
    }
    // Canonical order depends on the term set alone, so that removing a
    // row's leading term leaves exactly the denominator's expression.
    std::sort(out.variance.begin(), out.variance.end(), [&](const EmsTerm& a, const EmsTerm& b) {
        if (a.coeff != b.coeff) return a.coeff > b.coeff;
        return a.factor < b.factor;
    });
    return out;
}

std::vector<Diagnostic> design_diagnostics(const Diagram& d) {
    std::vector<Diagnostic> out = detect_pseudo_replication(d);
    auto marg = marginality_check(d);
    out.insert(out.end(), marg.begin(), marg.end());

    if (d.has_df()) {
        for (int f = 1; f < d.size(); ++f) {
            if (d.df[f] != 0) continue;
            Diagnostic diag;
            diag.kind = DiagnosticKind::complete_confounding;
            diag.subjects = {f};
            auto parents = d.cover_parents(f);
            std::string names;
            for (std::size_t i = 0; i < parents.size(); ++i)
                names += (i ? ", " : "") + d.factors[parents[i]].name;
            diag.subjects.insert(diag.subjects.end(), parents.begin(), parents.end());
            diag.message = "'" + d.factors[f].name + "' has zero degrees of freedom; completely confounded with " + names;
            out.push_back(std::move(diag));
        }
    }

    FactorId min = d.response >= 0 ? d.response : minimum_factor(d);
    for (int f = 1; f < d.size(); ++f) {
        if (f == min) continue;
        Denominator den = find_denominator(d, f);
        if (den.kind != Denominator::Kind::no_exact_test) continue;
        Diagnostic diag;
        diag.kind = DiagnosticKind::no_exact_test;
        diag.subjects = {f};
        diag.subjects.insert(diag.subjects.end(), den.candidates.begin(), den.candidates.end());
        std::string names;
        for (std::size_t i = 0; i < den.candidates.size(); ++i)
            names += (i ? ", " : "") + d.factors[den.candidates[i]].name;
        diag.message = "no exact F-test for '" + d.factors[f].name + "': incomparable error candidates {" +
                       names + "}; a weighted-average (Satterthwaite) denominator approximation is needed";
        out.push_back(std::move(diag));
    }

    // Unit-by-treatment crossings dropped from the model.
    for (int x = 1; x < d.size(); ++x) {
        if (d.factors[x].role != Role::unit || !d.factors[x].is_base()) continue;
        for (int y = 1; y < d.size(); ++y) {
            if (d.factors[y].role != Role::treatment || !d.factors[y].is_base()) continue;
            if (d.below(x, y) || d.below(y, x)) continue;
            std::vector<int> u = {d.factors[x].constituents[0], d.factors[y].constituents[0]};
            std::sort(u.begin(), u.end());
            if (d.find_constituents(u) >= 0) continue;
            Diagnostic diag;
            diag.kind = DiagnosticKind::unit_treatment_interaction_assumed_negligible;
            diag.subjects = {x, y};
            diag.message = "unit-by-treatment interaction " + d.factors[x].name + ":" +
                           d.factors[y].name + " assumed negligible";
            out.push_back(std::move(diag));
        }
    }
    return out;
}

SkeletonTable skeleton_table(const Diagram& d) {
    if (!d.has_df()) throw BuildError("skeleton table requires degrees of freedom");
    FactorId min = minimum_factor(d);
    auto strata = error_strata(d);

    SkeletonTable table;
    for (FactorId f : d.topological_order()) {
        if (f == kMean) continue;
        SkeletonRow row;
        row.factor = f;
        row.label = f == min ? "Residual" : d.factors[f].name;
        row.levels = d.factors[f].levels;
        row.df = d.df[f];
        row.stratum = strata.at(f);
        row.denominator = find_denominator(d, f);
        row.ems = expected_mean_squares(d, f);
        table.rows.push_back(std::move(row));
    }
    // Stratum-then-topological order: strata by head height (top stratum
    // first), then head id; rows within a stratum keep topological order.
    std::vector<FactorId> heads;
    for (const auto& row : table.rows)
        if (std::find(heads.begin(), heads.end(), row.stratum) == heads.end())
            heads.push_back(row.stratum);
    std::stable_sort(heads.begin(), heads.end(), [&](FactorId a, FactorId b) {
        int ha = d.height(a), hb = d.height(b);
        if (ha != hb) return ha < hb;
        return a < b;
    });
    std::stable_sort(table.rows.begin(), table.rows.end(), [&](const SkeletonRow& a, const SkeletonRow& b) {
        auto pa = std::find(heads.begin(), heads.end(), a.stratum) - heads.begin();
        auto pb = std::find(heads.begin(), heads.end(), b.stratum) - heads.begin();
        return pa < pb;
    });
    return table;
}

std::string to_string(const EmsExpression& ems, const Diagram& d) {
    std::ostringstream os;
    bool first = true;
    auto coeff = [&](long long c) { return c == 1 ? std::string() : std::to_string(c) + "*"; };
    if (ems.fixed_q) {
        os << coeff(ems.fixed_q->coeff) << "Q(" << d.factors[ems.fixed_q->factor].name << ")";
        first = false;
    }
    for (const auto& t : ems.variance) {
        if (!first) os << " + ";
        os << coeff(t.coeff) << "s2(" << d.factors[t.factor].name << ")";
        first = false;
    }
    return os.str();
}

namespace {

std::string denominator_text(const Denominator& den, const Diagram& d) {
    switch (den.kind) {
        case Denominator::Kind::factor:
            return d.factors[den.id].name;
        case Denominator::Kind::no_exact_test: {
            std::string out = "no exact test {";
            for (std::size_t i = 0; i < den.candidates.size(); ++i)
                out += (i ? ", " : "") + d.factors[den.candidates[i]].name;
            return out + "}";
        }
        case Denominator::Kind::none:
            return "-";
    }
    return "-";
}

}  // namespace

std::string to_text(const SkeletonTable& table, const Diagram& d) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"factor", "levels", "df", "stratum", "denominator", "EMS"});
    for (const auto& row : table.rows) {
        cells.push_back({row.label, std::to_string(row.levels), std::to_string(row.df),
                         d.factors[row.stratum].name, denominator_text(row.denominator, d),
                         to_string(row.ems, d)});
    }
    std::vector<std::size_t> width(6, 0);
    for (const auto& r : cells)
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    std::ostringstream os;
    for (const auto& r : cells) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            os << r[i];
            if (i + 1 < r.size()) os << std::string(width[i] - r[i].size() + 2, ' ');
        }
        os << "\n";
    }
    return os.str();
}

std::string to_csv(const SkeletonTable& table, const Diagram& d) {
    std::ostringstream os;
    os << "factor,levels,df,stratum,denominator,ems\n";
    for (const auto& row : table.rows) {
        std::string den;
        switch (row.denominator.kind) {
            case Denominator::Kind::factor:
                den = d.factors[row.denominator.id].name;
                break;
            case Denominator::Kind::no_exact_test: {
                den = "no_exact_test(";
                for (std::size_t i = 0; i < row.denominator.candidates.size(); ++i)
                    den += (i ? "|" : "") + d.factors[row.denominator.candidates[i]].name;
                den += ")";
                break;
            }
            case Denominator::Kind::none:
                den = "-";
                break;
        }
        os << row.label << "," << row.levels << "," << row.df << "," << d.factors[row.stratum].name
           << "," << den << "," << to_string(row.ems, d) << "\n";
    }
    return os.str();
}

std::string to_string(DiagnosticKind kind) {
    switch (kind) {
        case DiagnosticKind::pseudo_replication: return "pseudo-replication";
        case DiagnosticKind::complete_confounding: return "complete-confounding";
        case DiagnosticKind::marginality_violation: return "marginality-violation";
        case DiagnosticKind::no_exact_test: return "no-exact-test";
        case DiagnosticKind::unit_treatment_interaction_assumed_negligible:
            return "interaction-assumed-negligible";
    }
    return "unknown";
}

}  // namespace doe
