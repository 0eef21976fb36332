#include "doe/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "doe/anova.hpp"
#include "doe/diagram.hpp"
#include "doe/dsl.hpp"
#include "doe/formula.hpp"
#include "doe/plan.hpp"
#include "doe/render.hpp"
#include "doe/skeleton.hpp"

namespace doe::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiagnostics = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string severity_name(Severity s) {
    switch (s) {
        case Severity::info: return "info";
        case Severity::warning: return "warning";
        case Severity::error: return "error";
    }
    return "?";
}

struct Loaded {
    DesignSpec spec;
    ValidationReport report;
    Diagram diagram;
};

// Parse, validate, compose. Throws on parse failure; validation errors leave
// the diagram empty and are reported by the caller.
Loaded load(const std::string& path, const std::string& interactions_override) {
    Loaded out;
    out.spec = parse_design(read_file(path));
    if (interactions_override == "none")
        out.spec.policy = {InteractionPolicy::Kind::none, {}};
    else if (interactions_override == "all")
        out.spec.policy = {InteractionPolicy::Kind::all, {}};
    out.report = validate_spec(out.spec);
    if (out.report.ok()) out.diagram = compose(out.spec);
    return out;
}

int report_failure(const ValidationReport& report, std::ostream& err) {
    for (const auto& e : report.entries)
        err << severity_name(e.severity) << " [" << e.code << "] " << e.message << "\n";
    return kExitDiagnostics;
}

std::ostream& sink(const std::string& path, std::ofstream& file, std::ostream& fallback) {
    if (path.empty()) return fallback;
    file.open(path);
    if (!file) throw std::runtime_error("cannot write '" + path + "'");
    return file;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"design-of-experiments compiler: Hasse diagrams, skeleton ANOVA tables, "
                 "model formulas, randomization plans, and balanced ANOVA"};
    app.require_subcommand(1);

    std::string input, output, data_path, interactions;
    std::string dialect = "both", format = "ascii";
    std::uint64_t seed = 0;
    bool merge = false, csv = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("input", input, "design file")->required();
        cmd->add_option("-o,--output", output, "write output to a file instead of stdout");
        cmd->add_option("--interactions", interactions,
                        "override the design's interaction policy")
            ->check(CLI::IsMember({"none", "all"}));
    };

    CLI::App* check = app.add_subcommand("check", "validate a design and print diagnostics");
    add_common(check);
    CLI::App* table = app.add_subcommand("table", "print the skeleton ANOVA table");
    add_common(table);
    table->add_flag("--csv", csv, "machine-readable output");
    table->add_flag("--merge-zero-df", merge, "merge completely confounded factors");
    CLI::App* formula = app.add_subcommand("formula", "print linear-model formulas");
    add_common(formula);
    formula->add_option("--dialect", dialect, "formula dialect")
        ->check(CLI::IsMember({"error", "pipe", "both"}));
    CLI::App* render_cmd = app.add_subcommand("render", "render the experiment diagram");
    add_common(render_cmd);
    render_cmd->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"dot", "ascii", "tikz"}));
    render_cmd->add_flag("--merge-zero-df", merge, "merge completely confounded factors");
    CLI::App* plan_cmd = app.add_subcommand("plan", "generate a randomized layout plan");
    add_common(plan_cmd);
    plan_cmd->add_option("--seed", seed, "randomization seed")->required();
    CLI::App* anova_cmd = app.add_subcommand("anova", "compute the ANOVA table from data");
    add_common(anova_cmd);
    anova_cmd->add_option("--data", data_path, "CSV data file (plan columns plus response)")
        ->required();

    try {
        std::vector<const char*> argv;
        argv.push_back("doe");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help and friends print through CLI11's machinery.
            int code = app.exit(e, out, err);
            return code == 0 ? kExitOk : kExitUsage;
        }
        err << e.what() << "\n";
        return kExitUsage;
    }

    try {
        Loaded loaded = load(input, interactions);
        std::ofstream file;
        std::ostream& os = sink(output, file, out);

        if (check->parsed()) {
            for (const auto& e : loaded.report.entries)
                os << severity_name(e.severity) << " [" << e.code << "] " << e.message << "\n";
            if (!loaded.report.ok()) return kExitDiagnostics;
            auto eu = experimental_units(loaded.diagram);
            os << "design '" << loaded.spec.name << "': " << loaded.diagram.size()
               << " factors, " << loaded.diagram.factors[loaded.diagram.response].levels
               << " response units\n";
            for (const auto& [t, u] : eu)
                os << "experimental unit of " << loaded.diagram.factors[t].name << ": "
                   << loaded.diagram.factors[u].name << "\n";
            for (const auto& diag : design_diagnostics(loaded.diagram))
                os << "note [" << to_string(diag.kind) << "] " << diag.message << "\n";
            for (const auto& note : loaded.diagram.notes) os << "note " << note << "\n";
            return kExitOk;
        }
        if (!loaded.report.ok()) return report_failure(loaded.report, err);
        Diagram diagram = merge ? merge_zero_df(loaded.diagram) : loaded.diagram;

        if (table->parsed()) {
            SkeletonTable t = skeleton_table(diagram);
            os << (csv ? to_csv(t, diagram) : to_text(t, diagram));
        } else if (formula->parsed()) {
            if (dialect == "error" || dialect == "both") {
                try {
                    os << emit_error_stratum_formula(diagram) << "\n";
                } catch (const FormulaError& e) {
                    os << "error-stratum dialect unavailable: " << e.what() << "\n";
                }
            }
            if (dialect == "pipe" || dialect == "both")
                os << emit_pipe_random_term_formula(diagram) << "\n";
        } else if (render_cmd->parsed()) {
            RenderOptions opts;
            opts.format = format == "dot"    ? RenderFormat::graph_dot
                          : format == "tikz" ? RenderFormat::tikz
                                             : RenderFormat::ascii;
            opts.merge_annotations = merge;
            os << render(diagram, opts);
        } else if (plan_cmd->parsed()) {
            Plan plan = generate_plan(diagram, seed);
            for (const auto& w : plan.warnings) err << "warning: " << w << "\n";
            os << to_csv(plan);
        } else if (anova_cmd->parsed()) {
            std::ifstream data_file(data_path);
            if (!data_file) throw std::runtime_error("cannot open '" + data_path + "'");
            DataTable data = data_from_csv(data_file, diagram);
            AnovaTable t = compute_anova(diagram, data);
            os << to_text(t, diagram);
        }
        return kExitOk;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        if (!e.expected().empty()) {
            err << "expected:";
            for (const auto& t : e.expected()) err << " " << t;
            err << "\n";
        }
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDiagnostics;
    }
}

}  // namespace doe::cli
