#include <doctest.h>

#include <cmath>
#include <map>

#include "designs.hpp"
#include "oracle.hpp"
#include "doe/anova.hpp"

using namespace doe;

namespace {

FactorId id_of(const Diagram& d, const std::string& name) {
    FactorId f = d.find(name);
    REQUIRE(f >= 0);
    return f;
}

// 2x2 single-replicate factorial with cell means 1..4.
DataTable four_cells(const Diagram& d) {
    DataTable data;
    data.columns = {"Unit", "A", "B"};
    data.column_ids = {d.base_index("Unit"), d.base_index("A"), d.base_index("B")};
    data.rows = {{1, 1, 1}, {2, 1, 2}, {3, 2, 1}, {4, 2, 2}};
    data.response = {1.0, 2.0, 3.0, 4.0};
    return data;
}

}  // namespace

TEST_SUITE_BEGIN("anova");

TEST_CASE("constant response: only the mean effect survives") {
    Diagram d = golden::compose(golden::crd(3, 2, 2));
    DataTable data = oracle::random_data(d, 1);
    for (auto& y : data.response) y = 7.25;
    auto effects = effect_decomposition(d, data);
    CHECK(effects.at(kMean)[0] == doctest::Approx(7.25));
    for (int f = 1; f < d.size(); ++f)
        for (double e : effects.at(f)) CHECK(e == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("hand-computed 2x2 cell means decompose into +-1 and +-0.5") {
    // Least squares on the four-cell table gives the frozen effects below.
    Diagram d = golden::compose(golden::crd(2, 2, 1));
    DataTable data = four_cells(d);
    auto effects = effect_decomposition(d, data);
    CHECK(effects.at(kMean)[0] == doctest::Approx(2.5));
    CHECK(effects.at(id_of(d, "A"))[0] == doctest::Approx(-1.0));
    CHECK(effects.at(id_of(d, "A"))[1] == doctest::Approx(1.0));
    CHECK(effects.at(id_of(d, "B"))[0] == doctest::Approx(-0.5));
    CHECK(effects.at(id_of(d, "B"))[1] == doctest::Approx(0.5));
    for (double e : effects.at(id_of(d, "A:B"))) CHECK(e == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("all-zero data yields all-zero sums of squares") {
    Diagram d = golden::compose(golden::crd(3, 2, 2));
    DataTable data = oracle::random_data(d, 2);
    for (auto& y : data.response) y = 0.0;
    AnovaTable t = compute_anova(d, data);
    CHECK(t.total_ss == doctest::Approx(0.0));
    for (const auto& row : t.rows) CHECK(row.ss == doctest::Approx(0.0));
}

TEST_CASE("sum of squares decomposition and effect orthogonality") {
    for (const std::string& text :
         {golden::crd(3, 2, 2), golden::rcbd(4, 5, false), golden::oats(), golden::latin(4),
          golden::subsampling(2, 3, 2), golden::grcbd(2, 3, 2, 1, true)}) {
        Diagram d = golden::compose(text);
        DataTable data = oracle::random_data(d, 99);
        AnovaTable t = compute_anova(d, data);
        double sum = t.mean_ss;
        for (const auto& row : t.rows) sum += row.ss;
        CHECK(sum == doctest::Approx(t.total_ss).epsilon(1e-9));

        auto effects = effect_decomposition(d, data);
        std::map<FactorId, std::vector<long long>> classes;
        for (int f = 0; f < d.size(); ++f) classes[f] = factor_classes(d, data, f);
        for (int f = 0; f < d.size(); ++f)
            for (int g = f + 1; g < d.size(); ++g) {
                double dot = 0.0, scale = 0.0;
                for (std::size_t r = 0; r < data.rows.size(); ++r) {
                    dot += effects.at(f)[classes.at(f)[r]] * effects.at(g)[classes.at(g)[r]];
                    scale += std::abs(effects.at(f)[classes.at(f)[r]]) *
                             std::abs(effects.at(g)[classes.at(g)[r]]);
                }
                CHECK(std::abs(dot) <= 1e-9 * std::max(1.0, scale));
            }
    }
}

TEST_CASE("per-factor SS matches the orthogonal-projection oracle") {
    for (const std::string& text : {golden::crd(2, 2, 2), golden::rcbd(3, 4, false),
                                    golden::oats(), golden::latin(3), golden::subsampling(2, 3, 2)}) {
        Diagram d = golden::compose(text);
        DataTable data = oracle::random_data(d, 7);
        AnovaTable t = compute_anova(d, data);
        for (const auto& row : t.rows)
            CHECK(std::abs(row.ss - oracle::projection_ss(d, data, row.factor)) <= 1e-10);
    }
}

TEST_CASE("CRD F-ratio equals the projection oracle's F") {
    Diagram d = golden::compose(golden::crd(3, 2, 2));
    DataTable data = oracle::random_data(d, 31);
    AnovaTable t = compute_anova(d, data);
    FactorId a = id_of(d, "A"), unit = id_of(d, "Unit");
    double ss_a = oracle::projection_ss(d, data, a);
    double ss_e = oracle::projection_ss(d, data, unit);
    double f_oracle = (ss_a / 2.0) / (ss_e / 6.0);
    for (const auto& row : t.rows)
        if (row.factor == a) {
            REQUIRE(row.has_f);
            CHECK(row.f_ratio == doctest::Approx(f_oracle).epsilon(1e-10));
        }
}

TEST_CASE("unbalanced data is refused") {
    Diagram d = golden::compose(golden::crd(2, 2, 2));
    DataTable data = oracle::random_data(d, 5);
    // Flip one observation's A level: the class counts become 3 and 5.
    auto& a_level = data.rows[0][1];
    a_level = a_level == 1 ? 2 : 1;
    CHECK_THROWS_AS(compute_anova(d, data), AnovaError);
}

TEST_CASE("simulate: zero components and zero effects give zero response") {
    Diagram d = golden::compose(golden::crd(2, 2, 2));
    VarianceComponents comps;
    for (int f = 1; f < d.size(); ++f)
        if (d.factors[f].variability == Variability::random) comps[f] = 0.0;
    DataTable data = simulate_response(d, {}, comps, 3);
    for (double y : data.response) CHECK(y == 0.0);
}

TEST_CASE("simulate is deterministic and rejects negative components") {
    Diagram d = golden::compose(golden::crd(2, 2, 2));
    VarianceComponents comps{{id_of(d, "Unit"), 1.0}};
    DataTable a = simulate_response(d, {}, comps, 11);
    DataTable b = simulate_response(d, {}, comps, 11);
    CHECK(a.response == b.response);
    comps[id_of(d, "Unit")] = -0.5;
    CHECK_THROWS_AS(simulate_response(d, {}, comps, 11), AnovaError);
}

TEST_CASE("simulate: injected fixed effects are recovered by the sweep") {
    Diagram d = golden::compose(golden::oats());
    FixedEffects effects;
    effects[id_of(d, "Variety")] = {1.0, 0.0, -1.0};
    effects[id_of(d, "Nitrogen")] = {0.6, 0.2, -0.2, -0.6};
    VarianceComponents comps;
    comps[id_of(d, "Block")] = 0.0;
    comps[id_of(d, "Plot")] = 0.0;
    comps[id_of(d, "Subplot")] = 0.0;
    DataTable data = simulate_response(d, effects, comps, 17);
    auto decomposed = effect_decomposition(d, data);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(decomposed.at(id_of(d, "Variety"))[i] ==
              doctest::Approx(effects.at(id_of(d, "Variety"))[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(decomposed.at(id_of(d, "Nitrogen"))[i] ==
              doctest::Approx(effects.at(id_of(d, "Nitrogen"))[i]).epsilon(1e-12));
}

TEST_CASE("Monte-Carlo smoke: mean MS tracks the symbolic EMS") {
    // Small-count version of the acceptance run.
    Diagram d = golden::compose(golden::crd(3, 2, 2));
    FactorId unit = id_of(d, "Unit");
    VarianceComponents comps{{unit, 1.0}};
    const int n_sim = 400;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < n_sim; ++s) {
        DataTable data = simulate_response(d, {}, comps, 1000 + s);
        AnovaTable t = compute_anova(d, data);
        for (const auto& row : t.rows)
            if (row.factor == unit) {
                sum += row.ms;
                sum_sq += row.ms * row.ms;
            }
    }
    double mean = sum / n_sim;
    double sd = std::sqrt((sum_sq / n_sim - mean * mean) / n_sim);
    double expected = ems_value(expected_mean_squares(d, unit), comps);
    CHECK(expected == 1.0);
    CHECK(std::abs(mean - expected) <= 3.0 * sd);
}

TEST_CASE("data CSV round-trips through the reader") {
    Diagram d = golden::compose(golden::crd(2, 2, 2));
    DataTable data = oracle::random_data(d, 23);
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < data.columns.size(); ++i) os << data.columns[i] << ",";
    os << "response\n";
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
        for (long long v : data.rows[r]) os << v << ",";
        os << data.response[r] << "\n";
    }
    std::istringstream in(os.str());
    DataTable back = data_from_csv(in, d);
    CHECK(back.rows == data.rows);
    REQUIRE(back.response.size() == data.response.size());
    for (std::size_t i = 0; i < back.response.size(); ++i)
        CHECK(back.response[i] == doctest::Approx(data.response[i]).epsilon(1e-9));
}

TEST_SUITE_END();
