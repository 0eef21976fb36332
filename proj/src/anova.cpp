#include "doe/anova.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>

#include "doe/rng.hpp"

namespace doe {

namespace {

int data_column(const DataTable& data, int base) {
    for (std::size_t i = 0; i < data.column_ids.size(); ++i)
        if (data.column_ids[i] == base) return static_cast<int>(i);
    return -1;
}

FactorId minimum_factor(const Diagram& d) {
    for (int f = 0; f < d.size(); ++f)
        if (d.descendants(f).empty()) return f;
    return -1;
}

}  // namespace

std::vector<long long> factor_classes(const Diagram& d, const DataTable& data, FactorId f) {
    const std::size_t n = data.rows.size();
    if (f == kMean) return std::vector<long long>(n, 0);
    // Raw key: mixed-radix over constituent base levels (sorted base order,
    // first base slowest), then densified in key order.
    std::vector<int> cols;
    std::vector<long long> radix;
    for (int b : d.factors[f].constituents) {
        int c = data_column(data, b);
        if (c < 0)
            throw AnovaError("data misses a column for factor '" + d.bases[b].name + "'");
        cols.push_back(c);
        radix.push_back(d.bases[b].levels);
    }
    std::vector<long long> keys(n);
    for (std::size_t r = 0; r < n; ++r) {
        long long key = 0;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            long long v = data.rows[r][cols[i]];
            if (v < 1 || v > radix[i])
                throw AnovaError("level out of range for '" + d.factors[f].name + "'");
            key = key * radix[i] + (v - 1);
        }
        keys[r] = key;
    }
    std::map<long long, long long> dense;
    for (long long k : keys) dense.emplace(k, 0);
    long long next = 0;
    for (auto& [k, id] : dense) id = next++;
    std::vector<long long> out(n);
    for (std::size_t r = 0; r < n; ++r) out[r] = dense.at(keys[r]);
    return out;
}

std::map<FactorId, std::vector<double>> effect_decomposition(const Diagram& d,
                                                             const DataTable& data) {
    FactorId min = minimum_factor(d);
    if (min < 0) throw AnovaError("diagram has no unique minimum factor");
    if (static_cast<long long>(data.rows.size()) != d.factors[min].levels)
        throw AnovaError("row count " + std::to_string(data.rows.size()) +
                         " does not equal the response level count " +
                         std::to_string(d.factors[min].levels));
    if (data.response.size() != data.rows.size())
        throw AnovaError("response vector length mismatch");

    std::map<FactorId, std::vector<long long>> classes;
    for (int f = 0; f < d.size(); ++f) {
        auto cls = factor_classes(d, data, f);
        long long count = cls.empty() ? 0 : *std::max_element(cls.begin(), cls.end()) + 1;
        if (count != d.factors[f].levels)
            throw AnovaError("data shows " + std::to_string(count) + " level combinations for '" +
                             d.factors[f].name + "', expected " +
                             std::to_string(d.factors[f].levels));
        std::vector<long long> sizes(count, 0);
        for (long long c : cls) sizes[c] += 1;
        for (long long s : sizes)
            if (s != sizes[0])
                throw AnovaError("unbalanced data: unequal class sizes for '" +
                                 d.factors[f].name + "'");
        classes[f] = std::move(cls);
    }

    std::map<FactorId, std::vector<double>> effects;
    for (FactorId f : d.topological_order()) {
        const auto& cls = classes.at(f);
        std::vector<double> mean(d.factors[f].levels, 0.0);
        std::vector<long long> count(d.factors[f].levels, 0);
        for (std::size_t r = 0; r < data.rows.size(); ++r) {
            mean[cls[r]] += data.response[r];
            count[cls[r]] += 1;
        }
        for (std::size_t c = 0; c < mean.size(); ++c) mean[c] /= static_cast<double>(count[c]);
        // Subtract ancestor effects; any row of the class identifies them.
        std::vector<double> eff = mean;
        std::vector<long long> witness(d.factors[f].levels, -1);
        for (std::size_t r = 0; r < data.rows.size(); ++r)
            if (witness[cls[r]] < 0) witness[cls[r]] = static_cast<long long>(r);
        for (FactorId g : d.ancestors(f)) {
            const auto& gcls = classes.at(g);
            const auto& geff = effects.at(g);
            for (std::size_t c = 0; c < eff.size(); ++c) eff[c] -= geff[gcls[witness[c]]];
        }
        effects[f] = std::move(eff);
    }
    return effects;
}

AnovaTable compute_anova(const Diagram& d, const DataTable& data) {
    if (!d.has_df()) throw AnovaError("ANOVA requires degrees of freedom on the diagram");
    auto effects = effect_decomposition(d, data);
    std::map<FactorId, std::vector<long long>> classes;
    for (int f = 0; f < d.size(); ++f) classes[f] = factor_classes(d, data, f);

    std::map<FactorId, double> ss;
    for (int f = 0; f < d.size(); ++f) {
        double v = 0.0;
        const auto& cls = classes.at(f);
        const auto& eff = effects.at(f);
        for (std::size_t r = 0; r < data.rows.size(); ++r) v += eff[cls[r]] * eff[cls[r]];
        ss[f] = v;
    }

    AnovaTable table;
    table.mean_ss = ss.at(kMean);
    for (double y : data.response) table.total_ss += y * y;

    SkeletonTable skeleton = skeleton_table(d);
    std::map<FactorId, double> ms;
    for (const auto& row : skeleton.rows)
        if (row.df > 0) ms[row.factor] = ss.at(row.factor) / static_cast<double>(row.df);
    for (const auto& srow : skeleton.rows) {
        AnovaRow row;
        row.factor = srow.factor;
        row.label = srow.label;
        row.df = srow.df;
        row.ss = ss.at(srow.factor);
        row.stratum = srow.stratum;
        row.denominator = srow.denominator;
        if (srow.df > 0) {
            row.has_ms = true;
            row.ms = ms.at(srow.factor);
            if (srow.denominator.kind == Denominator::Kind::factor) {
                auto it = ms.find(srow.denominator.id);
                if (it != ms.end() && it->second != 0.0) {
                    row.has_f = true;
                    row.f_ratio = row.ms / it->second;
                }
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

DataTable simulate_response(const Diagram& d, const FixedEffects& effects,
                            const VarianceComponents& components, std::uint64_t seed) {
    for (const auto& [f, sigma2] : components) {
        if (sigma2 < 0) throw AnovaError("negative variance component for '" + d.factors[f].name + "'");
        if (d.factors[f].variability != Variability::random)
            throw AnovaError("variance component given for fixed factor '" + d.factors[f].name + "'");
    }
    for (int f = 1; f < d.size(); ++f)
        if (d.factors[f].variability == Variability::random && !components.count(f))
            throw AnovaError("missing variance component for random factor '" + d.factors[f].name + "'");

    Rng rng(seed);
    Plan plan = generate_plan(d, rng.next());
    DataTable data;
    data.columns = plan.columns;
    data.column_ids = plan.column_ids;
    data.rows = plan.rows;

    std::map<FactorId, std::vector<long long>> classes;
    for (int f = 0; f < d.size(); ++f) classes[f] = factor_classes(d, data, f);

    std::map<FactorId, std::vector<double>> draw;
    for (int f = 0; f < d.size(); ++f) {
        if (d.factors[f].variability != Variability::random) continue;
        double sigma = std::sqrt(components.at(f));
        std::vector<double> values(d.factors[f].levels);
        for (auto& v : values) v = sigma * rng.normal();
        draw[f] = std::move(values);
    }
    for (const auto& [f, values] : effects) {
        if (f < 0 || f >= d.size()) throw AnovaError("fixed effect for unknown factor");
        if (static_cast<long long>(values.size()) != d.factors[f].levels)
            throw AnovaError("fixed effect vector for '" + d.factors[f].name +
                             "' must have one value per level");
    }

    data.response.assign(data.rows.size(), 0.0);
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
        double y = 0.0;
        for (const auto& [f, values] : effects) y += values[classes.at(f)[r]];
        for (const auto& [f, values] : draw) y += values[classes.at(f)[r]];
        data.response[r] = y;
    }
    return data;
}

double ems_value(const EmsExpression& ems, const VarianceComponents& components) {
    double out = 0.0;
    for (const auto& t : ems.variance) {
        auto it = components.find(t.factor);
        if (it == components.end()) throw AnovaError("missing variance component in ems_value");
        out += static_cast<double>(t.coeff) * it->second;
    }
    return out;
}

DataTable data_from_csv(std::istream& in, const Diagram& d) {
    DataTable data;
    std::string line;
    if (!std::getline(in, line)) throw AnovaError("empty data file");
    std::stringstream header(line);
    std::string cell;
    std::vector<std::string> names;
    while (std::getline(header, cell, ',')) names.push_back(cell);
    if (names.empty() || names.back() != "response")
        throw AnovaError("data file must end with a 'response' column");
    for (std::size_t i = 0; i + 1 < names.size(); ++i) {
        int b = d.base_index(names[i]);
        if (b < 0) throw AnovaError("data column '" + names[i] + "' is not a declared factor");
        data.columns.push_back(names[i]);
        data.column_ids.push_back(b);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<long long> row;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != names.size()) throw AnovaError("ragged data row");
        for (std::size_t i = 0; i + 1 < cells.size(); ++i) row.push_back(std::stoll(cells[i]));
        data.rows.push_back(std::move(row));
        data.response.push_back(std::stod(cells.back()));
    }
    return data;
}

std::string to_text(const AnovaTable& table, const Diagram& d) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"factor", "df", "SS", "MS", "F", "denominator"});
    auto fmt = [](double v) {
        std::ostringstream os;
        os.precision(6);
        os << v;
        return os.str();
    };
    for (const auto& row : table.rows) {
        std::string den = "-";
        if (row.denominator.kind == Denominator::Kind::factor)
            den = d.factors[row.denominator.id].name;
        else if (row.denominator.kind == Denominator::Kind::no_exact_test)
            den = "no exact test";
        cells.push_back({row.label, std::to_string(row.df), fmt(row.ss),
                         row.has_ms ? fmt(row.ms) : "-", row.has_f ? fmt(row.f_ratio) : "-", den});
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

}  // namespace doe
