#include "doe/formula.hpp"

#include <algorithm>
#include <map>

namespace doe {

namespace {

FactorId minimum_factor(const Diagram& d) {
    for (int f = 0; f < d.size(); ++f)
        if (d.descendants(f).empty()) return f;
    return -1;
}

// Formula spelling of a factor: treatment bases first, then unit bases, each
// in declaration order. The GRCBD interaction renders as "A:B".
std::string term_name(const Diagram& d, const std::vector<int>& constituents) {
    std::vector<int> order = constituents;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        bool ta = d.bases[a].decl_role == DeclRole::treatment;
        bool tb = d.bases[b].decl_role == DeclRole::treatment;
        if (ta != tb) return ta;
        return a < b;
    });
    std::string out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i) out += ":";
        out += d.bases[order[i]].name;
    }
    return out;
}

// The fixed part: every fixed non-mean factor. A complete factorial renders
// with "*", anything else as "+"-joined colon terms.
std::string fixed_part(const Diagram& d) {
    std::vector<std::vector<int>> terms;
    for (int f = 1; f < d.size(); ++f)
        if (d.factors[f].variability == Variability::fixed) terms.push_back(d.factors[f].constituents);
    if (terms.empty()) return "1";

    std::vector<int> all_bases;
    for (const auto& t : terms)
        for (int b : t)
            if (std::find(all_bases.begin(), all_bases.end(), b) == all_bases.end())
                all_bases.push_back(b);
    std::sort(all_bases.begin(), all_bases.end());

    if (all_bases.size() >= 2) {
        std::size_t full = (std::size_t{1} << all_bases.size()) - 1;
        if (terms.size() == full) {
            // Confirm every nonempty subset occurs.
            std::set<std::vector<int>> have;
            for (auto t : terms) {
                std::sort(t.begin(), t.end());
                have.insert(t);
            }
            bool complete = true;
            for (std::size_t mask = 1; mask <= full && complete; ++mask) {
                std::vector<int> sub;
                for (std::size_t i = 0; i < all_bases.size(); ++i)
                    if (mask & (std::size_t{1} << i)) sub.push_back(all_bases[i]);
                complete = have.count(sub) > 0;
            }
            if (complete) {
                // Treatment bases first, declaration order within role.
                std::vector<int> order = all_bases;
                std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                    bool ta = d.bases[a].decl_role == DeclRole::treatment;
                    bool tb = d.bases[b].decl_role == DeclRole::treatment;
                    if (ta != tb) return ta;
                    return a < b;
                });
                std::string out;
                for (std::size_t i = 0; i < order.size(); ++i) {
                    if (i) out += "*";
                    out += d.bases[order[i]].name;
                }
                return out;
            }
        }
    }
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    std::string out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i) out += "+";
        out += term_name(d, terms[i]);
    }
    return out;
}

// Colon-expanded name of a random unit base: its nesting path from the top
// ("Rep:R" for R nested in Rep).
std::string nesting_path_name(const Diagram& d, int base) {
    std::vector<int> path;
    int cur = base;
    path.push_back(cur);
    while (true) {
        auto it = d.unit_nesting.find(cur);
        if (it == d.unit_nesting.end() || it->second.parents.size() != 1) break;
        cur = it->second.parents[0];
        path.push_back(cur);
    }
    std::string out;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        if (!out.empty()) out += ":";
        out += d.bases[*it].name;
    }
    return out;
}

struct RandomTerm {
    std::string text;
    int height = 0;
    int order = 0;  // smallest base index involved
};

// Random terms, with unambiguous "/" chains compacted. Each chain link needs a
// unique random parent and a unique random child among the emitted factors.
std::vector<RandomTerm> random_terms(const Diagram& d) {
    FactorId min = minimum_factor(d);
    std::vector<FactorId> nodes;
    for (int f = 1; f < d.size(); ++f)
        if (d.factors[f].variability == Variability::random && f != min) nodes.push_back(f);

    // Direct-nesting graph restricted to the emitted unit bases.
    std::map<int, int> parent_of;   // base -> unique parent base in the set
    std::map<int, int> child_count; // base -> children in the set
    std::set<int> base_set;
    for (FactorId f : nodes)
        if (d.factors[f].is_base() && d.factors[f].role == Role::unit)
            base_set.insert(d.factors[f].constituents[0]);
    for (int b : base_set) {
        auto it = d.unit_nesting.find(b);
        if (it == d.unit_nesting.end() || it->second.parents.size() != 1) continue;
        int p = it->second.parents[0];
        if (base_set.count(p)) {
            parent_of[b] = p;
            child_count[p] += 1;
        }
    }

    std::vector<RandomTerm> out;
    std::set<int> used;
    for (FactorId f : nodes) {
        if (!d.factors[f].is_base() || d.factors[f].role != Role::unit) continue;
        int b = d.factors[f].constituents[0];
        if (used.count(b)) continue;
        bool chain_start = !parent_of.count(b);
        if (!chain_start) continue;  // handled by its chain head (or emitted alone below)
        // Walk down while each link is unambiguous.
        std::vector<int> chain = {b};
        int cur = b;
        while (child_count[cur] == 1) {
            int next = -1;
            for (auto& [c, p] : parent_of)
                if (p == cur && !used.count(c)) next = c;
            if (next < 0) break;
            chain.push_back(next);
            cur = next;
        }
        for (int c : chain) used.insert(c);
        RandomTerm term;
        term.height = d.height(d.bases[chain[0]].node);
        term.order = chain[0];
        if (chain.size() > 1) {
            for (std::size_t i = 0; i < chain.size(); ++i) {
                if (i) term.text += "/";
                term.text += d.bases[chain[i]].name;
            }
        } else {
            term.text = nesting_path_name(d, chain[0]);
        }
        out.push_back(std::move(term));
    }
    // Bases that sit under an ambiguous parent (not absorbed in a chain).
    for (FactorId f : nodes) {
        if (!d.factors[f].is_base() || d.factors[f].role != Role::unit) continue;
        int b = d.factors[f].constituents[0];
        if (used.count(b)) continue;
        used.insert(b);
        RandomTerm term;
        term.height = d.height(f);
        term.order = b;
        term.text = nesting_path_name(d, b);
        out.push_back(std::move(term));
    }
    // Random interactions (unit-unit cells, unit-by-treatment terms).
    for (FactorId f : nodes) {
        if (d.factors[f].is_base()) continue;
        RandomTerm term;
        term.height = d.height(f);
        term.order = d.factors[f].constituents[0];
        term.text = term_name(d, d.factors[f].constituents);
        out.push_back(std::move(term));
    }
    std::stable_sort(out.begin(), out.end(), [](const RandomTerm& a, const RandomTerm& b) {
        if (a.height != b.height) return a.height < b.height;
        return a.order < b.order;
    });
    return out;
}

}  // namespace

std::string emit_error_stratum_formula(const Diagram& d) {
    for (int f = 1; f < d.size(); ++f)
        if (d.factors[f].variability == Variability::random &&
            d.factors[f].role == Role::unit_by_treatment)
            throw FormulaError(
                "random unit-by-treatment interaction '" + d.factors[f].name +
                "' cannot be expressed in an Error() stratum specification; use the mixed-model "
                "dialect (pipe random terms) instead");
    std::string fixed = fixed_part(d);
    auto terms = random_terms(d);
    if (terms.empty()) return fixed;
    std::string unit;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i) unit += "+";
        unit += terms[i].text;
    }
    return fixed + "+Error(" + unit + ")";
}

std::string emit_pipe_random_term_formula(const Diagram& d) {
    std::string out = fixed_part(d);
    for (const auto& t : random_terms(d)) out += "+(1|" + t.text + ")";
    return out;
}

std::set<std::set<std::string>> expand_formula(std::string_view formula) {
    StructureExpr e = parse_structure_expr(formula);
    auto terms = expand_terms(e);
    return {terms.begin(), terms.end()};
}

}  // namespace doe
