#include "doe/plan.hpp"

#include <algorithm>
#include <istream>
#include <set>
#include <sstream>

#include "doe/rng.hpp"

namespace doe {

namespace {

int column_of(const Diagram& d, int base) {
    auto it = std::find(d.unit_columns.begin(), d.unit_columns.end(), base);
    if (it == d.unit_columns.end())
        throw PlanError("unit factor '" + d.bases[base].name + "' missing from the unit table");
    return static_cast<int>(it - d.unit_columns.begin());
}

// Unit bases strictly above a base (its nesting ancestors), ascending.
std::vector<int> unit_ancestors(const Diagram& d, int base) {
    std::vector<int> out;
    for (int b : d.determined({base}))
        if (b != base && d.bases[b].decl_role == DeclRole::unit) out.push_back(b);
    std::sort(out.begin(), out.end());
    return out;
}

// Level table of one unit factor: level id -> levels of its ancestors.
std::map<long long, std::vector<long long>> level_context(const Diagram& d, int base,
                                                          const std::vector<int>& context) {
    int col = column_of(d, base);
    std::vector<int> ctx_cols;
    for (int b : context) ctx_cols.push_back(column_of(d, b));
    std::map<long long, std::vector<long long>> out;
    for (const auto& row : d.unit_rows) {
        std::vector<long long> key;
        key.reserve(ctx_cols.size());
        for (int c : ctx_cols) key.push_back(row[c]);
        out.emplace(row[col], std::move(key));
    }
    return out;
}

std::string treatment_list(const Diagram& d, const std::vector<int>& ts) {
    std::string out;
    for (std::size_t i = 0; i < ts.size(); ++i) out += (i ? ", " : "") + d.bases[ts[i]].name;
    return out;
}

std::vector<std::vector<int>> latin_square_stream(Rng& rng, int a) {
    std::vector<std::vector<int>> square(a, std::vector<int>(a));
    for (int i = 0; i < a; ++i)
        for (int j = 0; j < a; ++j) square[i][j] = (i + j) % a + 1;
    std::vector<int> row_perm(a), col_perm(a), sym_perm(a);
    for (int i = 0; i < a; ++i) row_perm[i] = col_perm[i] = sym_perm[i] = i;
    rng.shuffle(row_perm);
    rng.shuffle(col_perm);
    rng.shuffle(sym_perm);
    std::vector<std::vector<int>> out(a, std::vector<int>(a));
    for (int i = 0; i < a; ++i)
        for (int j = 0; j < a; ++j) out[i][j] = sym_perm[square[row_perm[i]][col_perm[j]] - 1] + 1;
    return out;
}

}  // namespace

std::vector<RandomizationScheme> analyze_randomization(const Diagram& d) {
    std::map<int, std::vector<int>> by_unit;
    for (const auto& [t, u] : d.randomization) by_unit[u].push_back(t);

    std::vector<RandomizationScheme> out;
    for (auto& [u, ts] : by_unit) {
        std::sort(ts.begin(), ts.end());
        RandomizationScheme s;
        s.unit_base = u;
        s.treatments = ts;
        for (int t : ts) s.combos *= d.bases[t].levels;

        auto anc = unit_ancestors(d, u);
        auto ctx_of = level_context(d, u, anc);

        // Joint-ancestor groups.
        std::map<std::vector<long long>, std::vector<long long>> grouped;
        for (const auto& [lvl, key] : ctx_of) grouped[key].push_back(lvl);
        long long group_size = grouped.empty() ? 0 : static_cast<long long>(grouped.begin()->second.size());
        for (auto& [key, members] : grouped) {
            std::sort(members.begin(), members.end());
            if (static_cast<long long>(members.size()) != group_size)
                throw PlanError("unbalanced unit enumeration for '" + d.bases[u].name + "'");
        }
        if (group_size % s.combos == 0) {
            s.mode = RandomizationScheme::Mode::grouped;
            for (auto& [key, members] : grouped) s.groups.push_back(members);
            out.push_back(std::move(s));
            continue;
        }

        auto nest_it = d.unit_nesting.find(u);
        const bool multi_parent =
            nest_it != d.unit_nesting.end() && nest_it->second.parents.size() >= 2;
        if (multi_parent && nest_it->second.per_parent == 1) {
            // Latin pattern: the last two parents form the square grid.
            const auto& parents = nest_it->second.parents;
            int x = parents[parents.size() - 2];
            int y = parents[parents.size() - 1];
            std::vector<int> ctx;
            for (int b : anc)
                if (b != x && b != y) ctx.push_back(b);
            auto keys = level_context(d, u, ctx);
            int xcol = column_of(d, x), ycol = column_of(d, y), ucol = column_of(d, u);
            std::map<std::vector<long long>, RandomizationScheme::Grid> grids;
            bool valid = true;
            for (const auto& row : d.unit_rows) {
                auto& grid = grids[keys.at(row[ucol])];
                auto cell_key = std::make_pair(row[xcol], row[ycol]);
                auto [it, inserted] = grid.cell.emplace(cell_key, row[ucol]);
                if (!inserted && it->second != row[ucol]) valid = false;
            }
            for (auto& [key, grid] : grids) {
                std::set<long long> rows, cols;
                for (const auto& [cell, lvl] : grid.cell) {
                    rows.insert(cell.first);
                    cols.insert(cell.second);
                }
                grid.rows.assign(rows.begin(), rows.end());
                grid.cols.assign(cols.begin(), cols.end());
                if (static_cast<long long>(grid.rows.size()) != s.combos ||
                    static_cast<long long>(grid.cols.size()) != s.combos ||
                    static_cast<long long>(grid.cell.size()) != s.combos * s.combos)
                    valid = false;
            }
            if (valid) {
                s.mode = RandomizationScheme::Mode::latin;
                s.row_base = x;
                s.col_base = y;
                for (auto& [key, grid] : grids) s.grids.push_back(std::move(grid));
                out.push_back(std::move(s));
                continue;
            }
        }
        if (multi_parent) {
            // Crossed cells without the once-per-line property: balanced
            // randomization within context groups only.
            const auto& parents = nest_it->second.parents;
            int x = parents[parents.size() - 2];
            int y = parents[parents.size() - 1];
            std::vector<int> ctx;
            for (int b : anc)
                if (b != x && b != y) ctx.push_back(b);
            auto keys = level_context(d, u, ctx);
            std::map<std::vector<long long>, std::vector<long long>> pooled;
            for (const auto& [lvl, key] : keys) pooled[key].push_back(lvl);
            bool ok = true;
            for (auto& [key, members] : pooled) {
                std::sort(members.begin(), members.end());
                if (static_cast<long long>(members.size()) % s.combos != 0) ok = false;
            }
            if (ok) {
                s.mode = RandomizationScheme::Mode::pooled;
                for (auto& [key, members] : pooled) s.groups.push_back(members);
                s.warning = "treatments (" + treatment_list(d, ts) + ") are randomized on the crossed cells of '" +
                            d.bases[u].name + "' without a once-per-line restriction";
                out.push_back(std::move(s));
                continue;
            }
        }
        s.error = "unit factor '" + d.bases[u].name + "' provides randomization groups of size " +
                  std::to_string(group_size) + ", not divisible by the " + std::to_string(s.combos) +
                  " level combinations of (" + treatment_list(d, ts) + ")";
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::vector<int>> generate_latin_square(int a, std::uint64_t seed) {
    if (a < 1) throw PlanError("Latin square order must be at least 1");
    Rng rng(seed);
    return latin_square_stream(rng, a);
}

namespace {

struct PlanColumns {
    std::vector<int> unit_bases;       // top-down
    std::vector<int> treatment_bases;  // declaration order
};

PlanColumns plan_columns(const Diagram& d) {
    PlanColumns out;
    out.unit_bases = d.unit_columns;
    std::stable_sort(out.unit_bases.begin(), out.unit_bases.end(), [&](int a, int b) {
        return d.height(d.bases[a].node) < d.height(d.bases[b].node);
    });
    for (const auto& [t, u] : d.randomization) out.treatment_bases.push_back(t);
    std::sort(out.treatment_bases.begin(), out.treatment_bases.end());
    return out;
}

long long combo_level(const RandomizationScheme& s, const Diagram& d, long long combo, int t) {
    long long stride = 1;
    for (std::size_t i = s.treatments.size(); i-- > 0;) {
        if (s.treatments[i] == t) return (combo / stride) % d.bases[t].levels + 1;
        stride *= d.bases[s.treatments[i]].levels;
    }
    throw PlanError("treatment not in scheme");
}

}  // namespace

Plan generate_plan(const Diagram& d, std::uint64_t seed) {
    if (d.unit_rows.empty()) throw PlanError("diagram carries no unit enumeration");
    auto schemes = analyze_randomization(d);
    for (const auto& s : schemes)
        if (!s.error.empty()) throw PlanError(s.error);

    Rng rng(seed);
    std::map<int, std::map<long long, long long>> assignment;  // unit base -> level -> combo
    std::vector<std::string> warnings;
    for (const auto& s : schemes) {
        auto& slot = assignment[s.unit_base];
        if (s.mode == RandomizationScheme::Mode::latin) {
            for (const auto& grid : s.grids) {
                auto square = latin_square_stream(rng, static_cast<int>(s.combos));
                for (std::size_t i = 0; i < grid.rows.size(); ++i)
                    for (std::size_t j = 0; j < grid.cols.size(); ++j)
                        slot[grid.cell.at({grid.rows[i], grid.cols[j]})] = square[i][j] - 1;
            }
        } else {
            for (const auto& group : s.groups) {
                std::vector<long long> symbols;
                symbols.reserve(group.size());
                for (std::size_t i = 0; i < group.size(); ++i)
                    symbols.push_back(static_cast<long long>(i) % s.combos);
                rng.shuffle(symbols);
                for (std::size_t i = 0; i < group.size(); ++i) slot[group[i]] = symbols[i];
            }
        }
        if (!s.warning.empty()) warnings.push_back(s.warning);
    }

    PlanColumns cols = plan_columns(d);
    Plan plan;
    plan.seed = seed;
    plan.warnings = std::move(warnings);
    for (int b : cols.unit_bases) {
        plan.columns.push_back(d.bases[b].name);
        plan.column_ids.push_back(b);
    }
    for (int b : cols.treatment_bases) {
        plan.columns.push_back(d.bases[b].name);
        plan.column_ids.push_back(b);
    }
    std::map<int, const RandomizationScheme*> scheme_of;
    for (const auto& s : schemes)
        for (int t : s.treatments) scheme_of[t] = &s;

    for (const auto& row : d.unit_rows) {
        std::vector<long long> out_row;
        for (int b : cols.unit_bases) out_row.push_back(row[column_of(d, b)]);
        for (int t : cols.treatment_bases) {
            const RandomizationScheme& s = *scheme_of.at(t);
            long long ulevel = row[column_of(d, s.unit_base)];
            long long combo = assignment.at(s.unit_base).at(ulevel);
            out_row.push_back(combo_level(s, d, combo, t));
        }
        plan.rows.push_back(std::move(out_row));
    }
    return plan;
}

PlanReport validate_plan(const Plan& plan, const Diagram& d) {
    PlanColumns cols = plan_columns(d);
    std::vector<std::string> expected;
    for (int b : cols.unit_bases) expected.push_back(d.bases[b].name);
    for (int b : cols.treatment_bases) expected.push_back(d.bases[b].name);
    if (plan.columns != expected) throw PlanError("plan columns do not match the design");
    if (plan.rows.size() != d.unit_rows.size())
        throw PlanError("plan row count does not match the number of response units");

    PlanReport report;
    auto plan_col = [&](int base) {
        for (std::size_t i = 0; i < plan.column_ids.size(); ++i)
            if (plan.column_ids[i] == base) return static_cast<int>(i);
        throw PlanError("plan misses column for '" + d.bases[base].name + "'");
    };

    // Unit columns must reproduce the design's nesting structure.
    std::map<std::vector<long long>, long long> expected_units;
    for (const auto& row : d.unit_rows) {
        std::vector<long long> key;
        for (int b : cols.unit_bases) key.push_back(row[column_of(d, b)]);
        expected_units[key] += 1;
    }
    for (std::size_t r = 0; r < plan.rows.size(); ++r) {
        std::vector<long long> key;
        for (int b : cols.unit_bases) key.push_back(plan.rows[r][plan_col(b)]);
        auto it = expected_units.find(key);
        if (it == expected_units.end() || it->second == 0) {
            report.violations.push_back({"unit columns do not match the design's nesting", {r}});
        } else {
            it->second -= 1;
        }
    }

    // Treatment restrictions per scheme.
    for (const auto& s : analyze_randomization(d)) {
        if (!s.error.empty()) {
            report.violations.push_back({s.error, {}});
            continue;
        }
        int ucol = plan_col(s.unit_base);
        // Every experimental unit must carry a single treatment combination.
        std::map<long long, std::vector<long long>> combo_of;
        std::map<long long, std::vector<std::size_t>> rows_of;
        bool consistent = true;
        for (std::size_t r = 0; r < plan.rows.size(); ++r) {
            long long ulevel = plan.rows[r][ucol];
            std::vector<long long> combo;
            for (int t : s.treatments) combo.push_back(plan.rows[r][plan_col(t)]);
            rows_of[ulevel].push_back(r);
            auto it = combo_of.find(ulevel);
            if (it == combo_of.end()) {
                combo_of[ulevel] = combo;
            } else if (it->second != combo) {
                report.violations.push_back(
                    {"treatment combination varies within level " + std::to_string(ulevel) +
                         " of experimental unit '" + d.bases[s.unit_base].name + "'",
                     rows_of[ulevel]});
                consistent = false;
            }
        }
        if (!consistent) continue;
        for (auto& [ulevel, combo] : combo_of)
            for (long long v : combo)
                if (v < 1) report.violations.push_back({"treatment level out of range", rows_of[ulevel]});

        auto check_balance = [&](const std::vector<long long>& members, const std::string& where) {
            std::map<std::vector<long long>, long long> counts;
            for (long long m : members) {
                auto it = combo_of.find(m);
                if (it != combo_of.end()) counts[it->second] += 1;
            }
            long long expected_count =
                static_cast<long long>(members.size()) / std::max<long long>(1, s.combos);
            bool bad = static_cast<long long>(counts.size()) != s.combos;
            for (auto& [c, n] : counts)
                if (n != expected_count) bad = true;
            if (bad) {
                std::vector<std::size_t> rows;
                for (long long m : members) {
                    auto it = rows_of.find(m);
                    if (it != rows_of.end()) rows.insert(rows.end(), it->second.begin(), it->second.end());
                }
                std::sort(rows.begin(), rows.end());
                report.violations.push_back(
                    {"unbalanced treatment assignment (" + treatment_list(d, s.treatments) + ") " + where,
                     std::move(rows)});
            }
        };

        if (s.mode == RandomizationScheme::Mode::latin) {
            for (const auto& grid : s.grids) {
                for (long long row_id : grid.rows) {
                    std::vector<long long> members;
                    for (long long col_id : grid.cols) members.push_back(grid.cell.at({row_id, col_id}));
                    check_balance(members, "in level " + std::to_string(row_id) + " of '" +
                                               d.bases[s.row_base].name + "'");
                }
                for (long long col_id : grid.cols) {
                    std::vector<long long> members;
                    for (long long row_id : grid.rows) members.push_back(grid.cell.at({row_id, col_id}));
                    check_balance(members, "in level " + std::to_string(col_id) + " of '" +
                                               d.bases[s.col_base].name + "'");
                }
            }
        } else {
            std::size_t index = 0;
            for (const auto& group : s.groups)
                check_balance(group, "in restriction group " + std::to_string(index++) + " of '" +
                                         d.bases[s.unit_base].name + "'");
        }
    }
    return report;
}

std::string to_csv(const Plan& plan) {
    std::ostringstream os;
    for (std::size_t i = 0; i < plan.columns.size(); ++i) os << (i ? "," : "") << plan.columns[i];
    os << "\n";
    for (const auto& row : plan.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
    return os.str();
}

Plan plan_from_csv(std::istream& in, const Diagram& d) {
    Plan plan;
    std::string line;
    if (!std::getline(in, line)) throw PlanError("empty plan file");
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
        int b = d.base_index(cell);
        if (b < 0) throw PlanError("plan column '" + cell + "' is not a declared factor");
        plan.columns.push_back(cell);
        plan.column_ids.push_back(b);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<long long> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stoll(cell));
        if (row.size() != plan.columns.size()) throw PlanError("ragged plan row");
        plan.rows.push_back(std::move(row));
    }
    return plan;
}

}  // namespace doe
