#include <doctest.h>

#include <set>

#include "designs.hpp"
#include "doe/formula.hpp"

using namespace doe;

namespace {

using TermSet = std::set<std::set<std::string>>;

// Base-name term set of the diagram's treatment factors.
TermSet treatment_terms(const Diagram& d) {
    TermSet out;
    for (int f = 1; f < d.size(); ++f) {
        if (d.factors[f].role != Role::treatment) continue;
        std::set<std::string> term;
        for (int b : d.factors[f].constituents) term.insert(d.bases[b].name);
        out.insert(std::move(term));
    }
    return out;
}

std::string fixed_part_of(const std::string& formula) {
    auto pos = formula.find("+Error(");
    return pos == std::string::npos ? formula : formula.substr(0, pos);
}

std::string error_arg_of(const std::string& formula) {
    auto pos = formula.find("+Error(");
    if (pos == std::string::npos) return "";
    return formula.substr(pos + 7, formula.size() - pos - 8);
}

std::vector<std::string> pipe_groups(const std::string& formula) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = formula.find("(1|", pos)) != std::string::npos) {
        std::size_t end = formula.find(')', pos);
        out.push_back(formula.substr(pos + 3, end - pos - 3));
        pos = end;
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("formula");

TEST_CASE("expand_formula matches the symbolic shorthands") {
    CHECK(expand_formula("A*B") == TermSet{{"A"}, {"B"}, {"A", "B"}});
    CHECK(expand_formula("A/B") == TermSet{{"A"}, {"A", "B"}});
    CHECK(expand_formula("(A+B)/(A:B)") == TermSet{{"A"}, {"B"}, {"A", "B"}});
    CHECK(expand_formula("A+B+A:B") == expand_formula("A*B"));
    CHECK(expand_formula("A/(A:B)+B/(A:B)") == expand_formula("(A+B)/(A:B)"));
    CHECK_THROWS_AS(expand_formula("A+*B"), ParseError);
}

TEST_CASE("oats emits the split-unit strings verbatim") {
    Diagram d = golden::compose(golden::oats());
    CHECK(emit_error_stratum_formula(d) == "Variety*Nitrogen+Error(Block/Plot)");
    CHECK(emit_pipe_random_term_formula(d) == "Variety*Nitrogen+(1|Block/Plot)");
}

TEST_CASE("sub-sampling emits A+Error(B)") {
    Diagram d = golden::compose(golden::subsampling(2, 3, 2));
    CHECK(emit_error_stratum_formula(d) == "A+Error(B)");
    CHECK(emit_pipe_random_term_formula(d) == "A+(1|B)");
}

TEST_CASE("GRCBD with kept interaction needs the mixed-model dialect") {
    Diagram d = golden::compose(golden::grcbd(3, 4, 2, 1, true));
    CHECK_THROWS_AS(emit_error_stratum_formula(d), FormulaError);
    CHECK(emit_pipe_random_term_formula(d) == "A+(1|Block)+(1|A:Block)");
    // Sub-sampling below the units keeps them in the random part.
    Diagram sampled = golden::compose(golden::grcbd(3, 4, 2, 2, true));
    CHECK(emit_pipe_random_term_formula(sampled) == "A+(1|Block/Unit)+(1|A:Block)");
}

TEST_CASE("paper-named GRCBD and replicated square strings match verbatim") {
    Diagram grcbd = golden::compose(
        "design g { treatment { A: fixed 3; structure: A; } "
        "unit { B: random 4; E: random 6 in B; response: E; } "
        "randomize { A -> E; } interactions: all; }");
    CHECK(emit_pipe_random_term_formula(grcbd) == "A+(1|B)+(1|A:B)");

    Diagram lsrep = golden::compose(
        "design ls { treatment { A: fixed 3; structure: A; } "
        "unit { Rep: random 2; R: random 3 in Rep; C: random 3; "
        "E: random 1 in R:C; response: E; } randomize { A -> E; } }");
    CHECK(emit_pipe_random_term_formula(lsrep) == "A+(1|Rep/R)+(1|C)");
    CHECK(emit_error_stratum_formula(lsrep) == "A+Error(Rep/R+C)");
}

TEST_CASE("plain RCBD emits the block stratum") {
    Diagram d = golden::compose(golden::rcbd(4, 5, false));
    CHECK(emit_error_stratum_formula(d) == "A+Error(Block)");
    CHECK(emit_pipe_random_term_formula(d) == "A+(1|Block)");
}

TEST_CASE("replicated Latin square with nested rows compacts the chain") {
    Diagram d = golden::compose(golden::lsrep_nested_rows(3, 2));
    CHECK(emit_error_stratum_formula(d) == "A+Error(Rep/Row+Col)");
    CHECK(emit_pipe_random_term_formula(d) == "A+(1|Rep/Row)+(1|Col)");
}

TEST_CASE("replicated Latin square with nested rows and columns expands") {
    Diagram d = golden::compose(golden::lsrep_nested_both(3, 2));
    CHECK(emit_error_stratum_formula(d) == "A+Error(Rep+Rep:Row+Rep:Col)");
    CHECK(emit_pipe_random_term_formula(d) == "A+(1|Rep)+(1|Rep:Row)+(1|Rep:Col)");
}

TEST_CASE("crossed replicates list three random terms") {
    Diagram d = golden::compose(golden::lsrep_crossed(3, 2));
    CHECK(emit_error_stratum_formula(d) == "A+Error(Rep+Row+Col)");
    CHECK(emit_pipe_random_term_formula(d) == "A+(1|Rep)+(1|Row)+(1|Col)");
}

TEST_CASE("Latin rectangle emits crossed blocking factors") {
    Diagram d = golden::compose(golden::latin_rectangle(3, 2));
    CHECK(emit_error_stratum_formula(d) == "A+Error(Row+Col)");
    CHECK(emit_pipe_random_term_formula(d) == "A+(1|Row)+(1|Col)");
}

TEST_CASE("all treatments per cell keeps the cell grouping term") {
    Diagram d = golden::compose(golden::row_col_cells(3, 3, 3, 1));
    CHECK(emit_error_stratum_formula(d) == "A+Error(Row+Col+Row:Col)");
    CHECK(emit_pipe_random_term_formula(d) == "A+(1|Row)+(1|Col)+(1|Row:Col)");
    CHECK(expand_formula(error_arg_of("A+Error(Row+Col+Row:Col)")) == expand_formula("Row*Col"));
}

TEST_CASE("fixed blocks move into the fixed part") {
    Diagram d = golden::compose(golden::fixed_blocks(3, 2, 2, true));
    CHECK(emit_error_stratum_formula(d) == "A*Block");
    CHECK(emit_pipe_random_term_formula(d) == "A*Block");
    Diagram additive = golden::compose(golden::fixed_blocks(3, 2, 2, false));
    CHECK(emit_error_stratum_formula(additive) == "A+Block");
}

TEST_CASE("CRD emits no Error part at all") {
    Diagram d = golden::compose(golden::crd(3, 2, 4));
    CHECK(emit_error_stratum_formula(d) == "A*B");
    CHECK(emit_pipe_random_term_formula(d) == "A*B");
}

TEST_CASE("marginality-violating structure falls back to explicit terms") {
    Diagram d = golden::compose(golden::keep_interaction_drop_main(2, 3, 2));
    CHECK(fixed_part_of(emit_error_stratum_formula(d)) == "A+A:B");
}

TEST_CASE("round-trip: the fixed part expands to the treatment factor set") {
    for (const std::string& text :
         {golden::oats(), golden::crd(3, 2, 4), golden::rcbd(4, 5, false),
          golden::subsampling(2, 3, 2), golden::latin(4), golden::lsrep_nested_rows(3, 2),
          golden::keep_interaction_drop_main(2, 3, 2)}) {
        Diagram d = golden::compose(text);
        std::string fixed = fixed_part_of(emit_error_stratum_formula(d));
        CHECK(expand_formula(fixed) == treatment_terms(d));
    }
}

TEST_CASE("random part lists every non-minimum random factor") {
    for (const std::string& text :
         {golden::oats(), golden::rcbd(4, 5, false), golden::grcbd(3, 4, 2, 1, true),
          golden::lsrep_nested_both(3, 2), golden::row_col_cells(3, 3, 3, 1)}) {
        Diagram d = golden::compose(text);
        FactorId min = d.response;
        std::size_t expected = 0;
        for (int f = 1; f < d.size(); ++f)
            if (f != min && d.factors[f].variability == Variability::random) ++expected;
        std::size_t groups = 0;
        for (const auto& g : pipe_groups(emit_pipe_random_term_formula(d)))
            groups += expand_formula(g).size();
        CHECK(groups == expected);
    }
}

TEST_CASE("dialect agreement: Error argument and pipe groups expand identically") {
    for (const std::string& text :
         {golden::oats(), golden::rcbd(4, 5, false), golden::subsampling(2, 3, 2),
          golden::lsrep_nested_rows(3, 2), golden::lsrep_nested_both(3, 2),
          golden::row_col_cells(3, 3, 3, 1)}) {
        Diagram d = golden::compose(text);
        std::string error_arg = error_arg_of(emit_error_stratum_formula(d));
        if (error_arg.empty()) continue;
        TermSet error_terms = expand_formula(error_arg);
        TermSet pipe_terms;
        for (const auto& g : pipe_groups(emit_pipe_random_term_formula(d)))
            for (const auto& term : expand_formula(g)) pipe_terms.insert(term);
        CHECK(error_terms == pipe_terms);
    }
}

TEST_SUITE_END();
