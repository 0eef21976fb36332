#include "doe/diagram.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace doe {

namespace {

constexpr long long kMaxUnits = 2'000'000;

// An address pins a level to local indices of the base unit factors that
// determine it: sorted (declaration index, local index) pairs.
using Address = std::vector<std::pair<int, int>>;

bool merge_address(Address& into, const Address& from) {
    for (auto [k, v] : from) {
        auto it = std::find_if(into.begin(), into.end(), [&](auto& p) { return p.first == k; });
        if (it != into.end()) {
            if (it->second != v) return false;
        } else {
            into.push_back({k, v});
        }
    }
    std::sort(into.begin(), into.end());
    return true;
}

Address restrict_address(const Address& a, const std::set<int>& coords) {
    Address out;
    for (auto& p : a)
        if (coords.count(p.first)) out.push_back(p);
    return out;
}

struct UnitEnumeration {
    std::vector<std::vector<Address>> levels;  // per declaration index
    std::vector<std::set<int>> coords;         // declaration indices determined
};

UnitEnumeration enumerate_units(const DesignSpec& spec) {
    UnitEnumeration out;
    const auto& units = spec.units;
    out.levels.resize(units.size());
    out.coords.resize(units.size());
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < units.size(); ++i) {
        const FactorDecl& d = units[i];
        index[d.name] = static_cast<int>(i);
        std::vector<Address> combos;
        out.coords[i].insert(static_cast<int>(i));
        if (d.parents.empty()) {
            combos.push_back({});
        } else {
            combos.push_back({});
            for (const auto& pname : d.parents) {
                int p = index.at(pname);
                out.coords[i].insert(out.coords[p].begin(), out.coords[p].end());
                std::vector<Address> next;
                for (const auto& c : combos)
                    for (const auto& pa : out.levels[p]) {
                        Address merged = c;
                        if (merge_address(merged, pa)) next.push_back(std::move(merged));
                    }
                combos = std::move(next);
            }
        }
        if (static_cast<long long>(combos.size()) * d.levels > kMaxUnits)
            throw BuildError("unit structure too large (factor '" + d.name + "')");
        for (const auto& c : combos)
            for (long long j = 0; j < d.levels; ++j) {
                Address a = c;
                a.push_back({static_cast<int>(i), static_cast<int>(j)});
                std::sort(a.begin(), a.end());
                out.levels[i].push_back(std::move(a));
            }
    }
    return out;
}

std::string join_names(const Diagram& d, const std::vector<int>& base_indices) {
    std::string out;
    for (std::size_t i = 0; i < base_indices.size(); ++i) {
        if (i) out += ":";
        out += d.bases[base_indices[i]].name;
    }
    return out;
}

// Display order of interaction constituents: unit bases first, then treatment
// bases, each in declaration order (base indices preserve declaration order
// within a role).
std::vector<int> display_order(const Diagram& d, std::vector<int> c) {
    std::stable_sort(c.begin(), c.end(), [&](int a, int b) {
        bool ua = d.bases[a].decl_role == DeclRole::unit;
        bool ub = d.bases[b].decl_role == DeclRole::unit;
        if (ua != ub) return ua;
        return a < b;
    });
    return c;
}

// Distinct joint level combinations of a set of unit bases, counted from the
// response-unit enumeration. Falls back to the plain product when no
// enumeration is available.
long long joint_unit_levels(const Diagram& d, const std::vector<int>& unit_bases) {
    if (d.unit_rows.empty()) {
        long long p = 1;
        for (int b : unit_bases) p *= d.bases[b].levels;
        return p;
    }
    std::vector<int> cols;
    for (int b : unit_bases) {
        auto it = std::find(d.unit_columns.begin(), d.unit_columns.end(), b);
        if (it == d.unit_columns.end()) throw BuildError("unit factor missing from enumeration");
        cols.push_back(static_cast<int>(it - d.unit_columns.begin()));
    }
    std::set<std::vector<long long>> combos;
    for (const auto& row : d.unit_rows) {
        std::vector<long long> key;
        key.reserve(cols.size());
        for (int c : cols) key.push_back(row[c]);
        combos.insert(std::move(key));
    }
    return static_cast<long long>(combos.size());
}

long long interaction_levels(const Diagram& d, const std::vector<int>& constituents) {
    std::vector<int> unit_part;
    long long treatment_product = 1;
    for (int b : constituents) {
        if (d.bases[b].decl_role == DeclRole::unit)
            unit_part.push_back(b);
        else
            treatment_product *= d.bases[b].levels;
    }
    long long unit_levels = unit_part.empty() ? 1 : joint_unit_levels(d, unit_part);
    return unit_levels * treatment_product;
}

Role interaction_role(const Diagram& d, const std::vector<int>& constituents) {
    bool has_unit = false, has_treatment = false;
    for (int b : constituents) {
        if (d.bases[b].decl_role == DeclRole::unit)
            has_unit = true;
        else
            has_treatment = true;
    }
    if (has_unit && has_treatment) return Role::unit_by_treatment;
    return has_unit ? Role::unit : Role::treatment;
}

Variability interaction_variability(const Diagram& d, const std::vector<int>& constituents) {
    for (int b : constituents)
        if (d.bases[b].variability == Variability::random) return Variability::random;
    return Variability::fixed;
}

}  // namespace

FactorId Diagram::find(std::string_view name) const {
    for (int i = 0; i < size(); ++i)
        if (factors[i].name == name) return i;
    return -1;
}

FactorId Diagram::find_constituents(const std::vector<int>& c) const {
    for (int i = 0; i < size(); ++i)
        if (factors[i].constituents == c && i != kMean) return i;
    return -1;
}

int Diagram::base_index(std::string_view name) const {
    for (std::size_t i = 0; i < bases.size(); ++i)
        if (bases[i].name == name) return static_cast<int>(i);
    return -1;
}

std::vector<FactorId> Diagram::ancestors(FactorId f) const {
    std::vector<FactorId> out;
    for (int i = 0; i < size(); ++i)
        if (below_[f][i]) out.push_back(i);
    return out;
}

std::vector<FactorId> Diagram::descendants(FactorId f) const {
    std::vector<FactorId> out;
    for (int i = 0; i < size(); ++i)
        if (below_[i][f]) out.push_back(i);
    return out;
}

std::vector<FactorId> Diagram::cover_parents(FactorId f) const {
    std::vector<FactorId> out;
    for (auto& [upper, lower] : covers_)
        if (lower == f) out.push_back(upper);
    return out;
}

std::vector<FactorId> Diagram::cover_children(FactorId f) const {
    std::vector<FactorId> out;
    for (auto& [upper, lower] : covers_)
        if (upper == f) out.push_back(lower);
    return out;
}

int Diagram::height(FactorId f) const {
    int h = 0;
    for (FactorId p : cover_parents(f)) h = std::max(h, height(p) + 1);
    return h;
}

std::vector<FactorId> Diagram::topological_order() const {
    std::vector<FactorId> ids(size());
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<int> depth(size());
    for (int i = 0; i < size(); ++i) depth[i] = static_cast<int>(ancestors(i).size());
    std::sort(ids.begin(), ids.end(), [&](FactorId a, FactorId b) {
        if (depth[a] != depth[b]) return depth[a] < depth[b];
        return factors[a].name < factors[b].name;
    });
    return ids;
}

std::set<int> Diagram::determined(const std::vector<int>& base_set) const {
    std::set<int> out(base_set.begin(), base_set.end());
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<int> snapshot(out.begin(), out.end());
        for (int b : snapshot) {
            auto it = unit_nesting.find(b);
            if (it != unit_nesting.end())
                for (int p : it->second.parents)
                    if (out.insert(p).second) changed = true;
            for (auto& [t, u] : randomization)
                if (u == b && out.insert(t).second) changed = true;
        }
    }
    return out;
}

FactorId Diagram::add_factor(Factor f) {
    factors.push_back(std::move(f));
    for (auto& row : below_) row.push_back(false);
    below_.push_back(std::vector<bool>(factors.size(), false));
    return static_cast<FactorId>(factors.size() - 1);
}

void Diagram::set_below(FactorId x, FactorId y) { below_[x][y] = true; }

void Diagram::recompute_order() {
    const int n = size();
    std::vector<std::set<int>> det(n);
    for (int i = 0; i < n; ++i) det[i] = determined(factors[i].constituents);
    auto contains = [](const std::set<int>& s, const std::vector<int>& c) {
        for (int b : c)
            if (!s.count(b)) return false;
        return true;
    };
    below_.assign(n, std::vector<bool>(n, false));
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            if (x == y) continue;
            if (contains(det[x], factors[y].constituents)) {
                if (contains(det[y], factors[x].constituents))
                    throw BuildError("factors '" + factors[x].name + "' and '" + factors[y].name +
                                     "' induce the same partition");
                below_[x][y] = true;
            }
        }
    close_and_reduce();
}

void Diagram::close_and_reduce() {
    const int n = size();
    // Floyd-Warshall style transitive closure.
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            if (below_[i][k])
                for (int j = 0; j < n; ++j)
                    if (below_[k][j]) below_[i][j] = true;
    for (int i = 0; i < n; ++i)
        if (below_[i][i]) throw BuildError("cycle detected in nesting order at '" + factors[i].name + "'");
    covers_.clear();
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            if (!below_[x][y]) continue;
            bool direct = true;
            for (int z = 0; z < n && direct; ++z)
                if (below_[x][z] && below_[z][y]) direct = false;
            if (direct) covers_.push_back({y, x});
        }
}

Diagram build_treatment_poset(const DesignSpec& spec) {
    Diagram d;
    d.add_factor({"M", {}, Variability::fixed, Role::mean, 1});

    std::map<std::string, int> base_of;
    for (const auto& decl : spec.treatments) {
        base_of[decl.name] = static_cast<int>(d.bases.size());
        d.bases.push_back({decl.name, decl.variability, DeclRole::treatment, decl.levels, -1});
    }

    auto terms = expand_terms(spec.structure);
    for (const auto& t : terms)
        for (const auto& n : t)
            if (!base_of.count(n))
                throw BuildError("structure references undeclared factor '" + n + "'");

    // Main effects in declaration order, then interactions by size and
    // constituent declaration order.
    std::vector<std::vector<int>> term_bases;
    for (const auto& t : terms) {
        std::vector<int> c;
        for (const auto& n : t) c.push_back(base_of.at(n));
        std::sort(c.begin(), c.end());
        term_bases.push_back(std::move(c));
    }
    std::sort(term_bases.begin(), term_bases.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    term_bases.erase(std::unique(term_bases.begin(), term_bases.end()), term_bases.end());

    for (const auto& c : term_bases) {
        Factor f;
        f.constituents = c;
        f.role = Role::treatment;
        if (c.size() == 1) {
            const BaseFactor& b = d.bases[c[0]];
            f.name = b.name;
            f.variability = b.variability;
            f.levels = b.levels;
        } else {
            f.name = join_names(d, display_order(d, c));
            f.variability = interaction_variability(d, c);
            f.levels = 1;
            for (int b : c) f.levels *= d.bases[b].levels;
        }
        FactorId id = d.add_factor(std::move(f));
        if (c.size() == 1) d.bases[c[0]].node = id;
    }
    d.recompute_order();
    return d;
}

Diagram build_unit_poset(const DesignSpec& spec) {
    Diagram d;
    d.add_factor({"M", {}, Variability::fixed, Role::mean, 1});

    UnitEnumeration en = enumerate_units(spec);

    std::map<std::string, int> base_of;
    for (std::size_t i = 0; i < spec.units.size(); ++i) {
        const FactorDecl& decl = spec.units[i];
        int b = static_cast<int>(d.bases.size());
        base_of[decl.name] = b;
        d.bases.push_back({decl.name, decl.variability, DeclRole::unit,
                           static_cast<long long>(en.levels[i].size()), -1});
        Factor f;
        f.name = decl.name;
        f.constituents = {b};
        f.variability = decl.variability;
        f.role = Role::unit;
        f.levels = static_cast<long long>(en.levels[i].size());
        d.bases[b].node = d.add_factor(std::move(f));
        UnitNesting nest;
        nest.per_parent = decl.levels;
        for (const auto& p : decl.parents) nest.parents.push_back(base_of.at(p));
        d.unit_nesting[b] = nest;
    }

    int response_base = d.base_index(spec.response);
    if (response_base < 0) throw BuildError("response '" + spec.response + "' is not a unit factor");
    d.response = d.bases[response_base].node;

    // The response must be nested in (or equal to) every unit factor.
    int response_decl = -1;
    for (std::size_t i = 0; i < spec.units.size(); ++i)
        if (spec.units[i].name == spec.response) response_decl = static_cast<int>(i);
    for (std::size_t i = 0; i < spec.units.size(); ++i) {
        if (static_cast<int>(i) == response_decl) continue;
        if (!en.coords[response_decl].count(static_cast<int>(i)))
            throw BuildError("response '" + spec.response + "' is not nested in unit factor '" +
                             spec.units[i].name + "'");
    }

    // Response-unit table: level of every unit factor per response unit.
    std::vector<std::map<Address, long long>> lookup(spec.units.size());
    for (std::size_t i = 0; i < spec.units.size(); ++i)
        for (std::size_t l = 0; l < en.levels[i].size(); ++l)
            lookup[i][en.levels[i][l]] = static_cast<long long>(l + 1);
    for (std::size_t i = 0; i < spec.units.size(); ++i)
        d.unit_columns.push_back(d.base_index(spec.units[i].name));
    for (const Address& ra : en.levels[response_decl]) {
        std::vector<long long> row;
        for (std::size_t i = 0; i < spec.units.size(); ++i)
            row.push_back(lookup[i].at(restrict_address(ra, en.coords[i])));
        d.unit_rows.push_back(std::move(row));
    }

    d.recompute_order();

    // A joint nesting term with more than one unit per combination makes the
    // combination a real grouping level: materialize the interaction factor.
    // With one unit per combination the nested factor is that grouping.
    for (std::size_t i = 0; i < spec.units.size(); ++i) {
        const FactorDecl& decl = spec.units[i];
        if (decl.parents.size() >= 2 && decl.levels > 1) {
            std::vector<FactorId> parents;
            for (const auto& p : decl.parents) parents.push_back(d.bases[d.base_index(p)].node);
            canonicalize_interaction(parents, d);
        }
    }
    return d;
}

FactorId canonicalize_interaction(const std::vector<FactorId>& constituents, Diagram& d) {
    if (constituents.empty()) throw BuildError("interaction needs at least one constituent");
    std::set<int> base_set;
    for (FactorId f : constituents) {
        if (f == kMean) continue;
        const auto& c = d.factors[f].constituents;
        base_set.insert(c.begin(), c.end());
    }
    if (base_set.empty()) return kMean;

    // Absorb: drop any base determined by another ({Plot, Block} -> {Plot}).
    std::vector<int> kept;
    for (int b : base_set) {
        bool absorbed = false;
        for (int other : base_set) {
            if (other == b) continue;
            auto det = d.determined({other});
            if (det.count(b) && !d.determined({b}).count(other)) {
                absorbed = true;
                break;
            }
        }
        if (!absorbed) kept.push_back(b);
    }
    std::sort(kept.begin(), kept.end());

    if (kept.size() == 1) {
        FactorId node = d.bases[kept[0]].node;
        if (node < 0) throw BuildError("interaction collapses to absent factor '" +
                                       d.bases[kept[0]].name + "'");
        return node;
    }
    FactorId existing = d.find_constituents(kept);
    if (existing >= 0) return existing;

    Factor f;
    f.constituents = kept;
    f.name = join_names(d, display_order(d, kept));
    f.variability = interaction_variability(d, kept);
    f.role = interaction_role(d, kept);
    f.levels = interaction_levels(d, kept);
    FactorId id = d.add_factor(std::move(f));
    d.recompute_order();
    return id;
}

Diagram compose_experiment(const Diagram& treatment, const Diagram& unit,
                           const std::vector<std::pair<std::string, std::string>>& randomize,
                           const InteractionPolicy& policy) {
    Diagram d;
    d.add_factor({"M", {}, Variability::fixed, Role::mean, 1});

    // Bases: treatment first, then unit (declaration order preserved).
    std::vector<int> tbase(treatment.bases.size()), ubase(unit.bases.size());
    for (std::size_t i = 0; i < treatment.bases.size(); ++i) {
        tbase[i] = static_cast<int>(d.bases.size());
        d.bases.push_back(treatment.bases[i]);
        d.bases.back().node = -1;
    }
    for (std::size_t i = 0; i < unit.bases.size(); ++i) {
        ubase[i] = static_cast<int>(d.bases.size());
        d.bases.push_back(unit.bases[i]);
        d.bases.back().node = -1;
    }

    auto remap = [&](const Diagram& src, const std::vector<int>& base_map) {
        std::map<FactorId, FactorId> node_map;
        for (int i = 0; i < src.size(); ++i) {
            if (i == kMean) continue;
            Factor f = src.factors[i];
            std::vector<int> c;
            for (int b : f.constituents) c.push_back(base_map[b]);
            std::sort(c.begin(), c.end());
            f.constituents = std::move(c);
            FactorId id = d.add_factor(std::move(f));
            node_map[i] = id;
            if (src.factors[i].is_base()) d.bases[d.factors[id].constituents[0]].node = id;
        }
        return node_map;
    };
    remap(treatment, tbase);
    auto unit_nodes = remap(unit, ubase);

    for (const auto& [b, nest] : unit.unit_nesting) {
        UnitNesting n = nest;
        for (int& p : n.parents) p = ubase[p];
        d.unit_nesting[ubase[b]] = n;
    }
    d.unit_columns.clear();
    for (int b : unit.unit_columns) d.unit_columns.push_back(ubase[b]);
    d.unit_rows = unit.unit_rows;
    if (unit.response >= 0) d.response = unit_nodes.at(unit.response);

    for (const auto& [tname, uname] : randomize) {
        int tb = d.base_index(tname);
        int ub = d.base_index(uname);
        if (tb < 0 || d.bases[tb].decl_role != DeclRole::treatment)
            throw BuildError("randomize source '" + tname + "' is not a treatment factor");
        if (ub < 0 || d.bases[ub].decl_role != DeclRole::unit)
            throw BuildError("randomize target '" + uname + "' is not a unit factor");
        if (d.randomization.count(tb))
            throw BuildError("treatment factor '" + tname + "' randomized twice");
        d.randomization[tb] = ub;
    }

    d.recompute_order();

    // Unit-by-treatment interactions, per policy.
    auto crossed_mixed_pairs = [&]() {
        std::vector<std::vector<FactorId>> pairs;
        for (int x = 1; x < d.size(); ++x)
            for (int y = x + 1; y < d.size(); ++y) {
                if (d.below(x, y) || d.below(y, x)) continue;
                bool unit_side = d.factors[x].role != Role::treatment ||
                                 d.factors[y].role != Role::treatment;
                bool treatment_side = d.factors[x].role != Role::unit ||
                                      d.factors[y].role != Role::unit;
                bool same_side = (d.factors[x].role == Role::treatment &&
                                  d.factors[y].role == Role::treatment) ||
                                 (d.factors[x].role == Role::unit && d.factors[y].role == Role::unit);
                if (unit_side && treatment_side && !same_side) pairs.push_back({x, y});
            }
        return pairs;
    };

    if (policy.kind == InteractionPolicy::Kind::all) {
        bool inserted = true;
        while (inserted) {
            inserted = false;
            for (const auto& pair : crossed_mixed_pairs()) {
                std::vector<int> bases_union;
                for (FactorId f : pair)
                    for (int b : d.factors[f].constituents) bases_union.push_back(b);
                std::sort(bases_union.begin(), bases_union.end());
                bases_union.erase(std::unique(bases_union.begin(), bases_union.end()),
                                  bases_union.end());
                if (d.find_constituents(bases_union) >= 0) continue;
                canonicalize_interaction(pair, d);
                inserted = true;
                break;
            }
        }
    } else if (policy.kind == InteractionPolicy::Kind::explicit_list) {
        for (const auto& term : policy.keep) {
            std::vector<int> bases;
            for (const auto& n : term) {
                int b = d.base_index(n);
                if (b < 0) throw BuildError("kept interaction names unknown factor '" + n + "'");
                bases.push_back(b);
            }
            // All constituents must be mutually crossed in the merged poset.
            for (std::size_t i = 0; i < bases.size(); ++i)
                for (std::size_t j = i + 1; j < bases.size(); ++j) {
                    auto di = d.determined({bases[i]});
                    auto dj = d.determined({bases[j]});
                    if (di.count(bases[j]) || dj.count(bases[i]))
                        throw BuildError("kept interaction " + join_names(d, bases) +
                                         ": '" + d.bases[bases[i]].name + "' and '" +
                                         d.bases[bases[j]].name + "' are nested, not crossed");
                }
            std::vector<FactorId> nodes;
            for (int b : bases) {
                if (d.bases[b].node < 0)
                    throw BuildError("kept interaction names factor '" + d.bases[b].name +
                                     "' which is not in the diagram");
                nodes.push_back(d.bases[b].node);
            }
            canonicalize_interaction(nodes, d);
        }
    }

    // Treatments sharing an experimental unit without a joint term: reported,
    // not silently fixed (the additive model may well be intended).
    std::map<int, std::vector<int>> by_unit;
    for (auto& [t, u] : d.randomization) by_unit[u].push_back(t);
    for (auto& [u, ts] : by_unit) {
        if (ts.size() < 2) continue;
        std::vector<int> all = ts;
        std::sort(all.begin(), all.end());
        if (d.find_constituents(all) < 0)
            d.notes.push_back("'" + d.bases[u].name + "' is the experimental unit for " +
                              join_names(d, all) +
                              " but no joint interaction term is present (assumed absent)");
    }

    d.recompute_order();
    return d;
}

Diagram transitive_reduction(Diagram diagram) {
    diagram.close_and_reduce();
    return diagram;
}

std::map<FactorId, long long> degrees_of_freedom(Diagram& d) {
    std::map<FactorId, long long> out;
    d.df.assign(d.size(), 0);
    for (FactorId f : d.topological_order()) {
        long long v = d.factors[f].levels;
        for (FactorId g : d.ancestors(f)) v -= d.df[g];
        if (v < 0)
            throw DegreesOfFreedomError("negative degrees of freedom for '" + d.factors[f].name +
                                            "' (inconsistent or unbalanced structure)",
                                        f);
        d.df[f] = v;
        out[f] = v;
    }
    return out;
}

Diagram merge_zero_df(const Diagram& d) {
    if (!d.has_df()) throw BuildError("merge_zero_df requires degrees of freedom");
    std::vector<bool> removed(d.size(), false);
    Diagram out;
    out.bases = d.bases;
    for (auto& b : out.bases) b.node = -1;
    out.randomization = d.randomization;
    out.unit_nesting = d.unit_nesting;
    out.notes = d.notes;
    out.merge_log = d.merge_log;

    std::vector<FactorId> new_id(d.size(), -1);
    for (int f = 0; f < d.size(); ++f)
        if (f != kMean && d.df[f] == 0) removed[f] = true;

    for (int f = 0; f < d.size(); ++f) {
        if (removed[f]) continue;
        new_id[f] = out.add_factor(d.factors[f]);
        if (d.factors[f].is_base()) out.bases[d.factors[f].constituents[0]].node = new_id[f];
    }
    out.df.assign(out.size(), 0);
    for (int f = 0; f < d.size(); ++f)
        if (!removed[f]) out.df[new_id[f]] = d.df[f];

    // Order restricted to survivors is still the right order.
    for (int x = 0; x < d.size(); ++x)
        for (int y = 0; y < d.size(); ++y)
            if (!removed[x] && !removed[y] && d.below(x, y)) out.set_below(new_id[x], new_id[y]);
    out.close_and_reduce();

    for (int f = 0; f < d.size(); ++f) {
        if (!removed[f]) continue;
        auto parents = d.cover_parents(f);
        // Attribute the confounded factor to its surviving cover parents.
        std::vector<FactorId> targets;
        for (FactorId p : parents)
            if (!removed[p]) targets.push_back(p);
        std::string names;
        for (std::size_t i = 0; i < targets.size(); ++i)
            names += (i ? ", " : "") + d.factors[targets[i]].name;
        out.merge_log.push_back("'" + d.factors[f].name + "' has zero df; merged into " +
                                (targets.empty() ? "its ancestors" : names) +
                                " (complete confounding)");
        for (FactorId p : targets) out.absorbed[new_id[p]].push_back(d.factors[f].name);
        if (d.response == f) out.response = targets.size() == 1 ? new_id[targets[0]] : -1;
    }
    if (d.response >= 0 && !removed[d.response]) out.response = new_id[d.response];

    out.unit_columns.clear();
    std::vector<std::size_t> kept_cols;
    for (std::size_t i = 0; i < d.unit_columns.size(); ++i) {
        int b = d.unit_columns[i];
        if (out.bases[b].node >= 0) {
            out.unit_columns.push_back(b);
            kept_cols.push_back(i);
        }
    }
    for (const auto& row : d.unit_rows) {
        std::vector<long long> r;
        for (std::size_t i : kept_cols) r.push_back(row[i]);
        out.unit_rows.push_back(std::move(r));
    }
    return out;
}

Diagram compose(const DesignSpec& spec) {
    Diagram t = build_treatment_poset(spec);
    Diagram u = build_unit_poset(spec);
    Diagram e = compose_experiment(t, u, spec.randomize, spec.policy);
    degrees_of_freedom(e);
    return e;
}

}  // namespace doe
