#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace doe {

enum class Variability { fixed, random };
enum class DeclRole { treatment, unit };

/// One factor declaration from a design file.
///
/// For unit factors declared with "in", `levels` is the replicate count per
/// parent combination; total levels are derived by chain product when the
/// unit structure is built.
struct FactorDecl {
    std::string name;
    Variability variability = Variability::fixed;
    DeclRole role = DeclRole::treatment;
    long long levels = 1;
    std::vector<std::string> parents;  // unit factors only; joint parents allowed ("in R:C")

    bool operator==(const FactorDecl&) const = default;
};

/// Expression tree over factor names with operators
/// ":" (interaction) > "/" (nest) > "*" (cross) > "+" (sum), left-associative.
struct StructureExpr {
    enum class Op { leaf, sum, cross, nest, interact };
    Op op = Op::leaf;
    std::string name;                    // leaves only
    std::vector<StructureExpr> children; // size 2 for operators

    bool operator==(const StructureExpr&) const = default;

    static StructureExpr leaf(std::string n) {
        StructureExpr e;
        e.name = std::move(n);
        return e;
    }
    static StructureExpr node(Op op, StructureExpr lhs, StructureExpr rhs) {
        StructureExpr e;
        e.op = op;
        e.children.push_back(std::move(lhs));
        e.children.push_back(std::move(rhs));
        return e;
    }
};

struct InteractionPolicy {
    enum class Kind { none, all, explicit_list };
    Kind kind = Kind::none;
    // Explicit interactions to keep, each a list of base factor names.
    std::vector<std::vector<std::string>> keep;

    bool operator==(const InteractionPolicy&) const = default;
};

/// Parsed design specification.
struct DesignSpec {
    std::string name;
    std::vector<FactorDecl> treatments;
    StructureExpr structure;
    std::vector<FactorDecl> units;
    std::string response;
    std::vector<std::pair<std::string, std::string>> randomize;  // treatment -> unit
    InteractionPolicy policy;

    bool operator==(const DesignSpec&) const = default;

    const FactorDecl* find_decl(std::string_view n) const;
};

/// Parse failure; carries 1-based position and the tokens that were expected.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::string msg, int line, int column, std::vector<std::string> expected = {});
    int line() const { return line_; }
    int column() const { return column_; }
    const std::vector<std::string>& expected() const { return expected_; }

  private:
    int line_;
    int column_;
    std::vector<std::string> expected_;
};

enum class Severity { info, warning, error };

struct ValidationEntry {
    Severity severity = Severity::error;
    std::string code;     // stable identifier, e.g. "balance", "unreachable-factor"
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;

    bool ok() const;  // no error-severity entries
    std::size_t error_count() const;
};

DesignSpec parse_design(std::string_view text);
std::string pretty_print(const DesignSpec& spec);
ValidationReport validate_spec(const DesignSpec& spec);

/// Parse a bare structure expression (shared with formula expansion).
StructureExpr parse_structure_expr(std::string_view text);
std::string to_string(const StructureExpr& expr);

/// Wilkinson-Rogers expansion into the term list: "A*B" -> {A}, {B}, {A,B};
/// "A/B" -> {A}, {A,B}. Terms appear in first-use order, deduplicated.
std::vector<std::set<std::string>> expand_terms(const StructureExpr& expr);

}  // namespace doe
