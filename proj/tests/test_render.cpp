#include <doctest.h>

#include <set>

#include "designs.hpp"
#include "doe/render.hpp"

using namespace doe;

namespace {

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t n = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

}  // namespace

TEST_SUITE_BEGIN("render");

TEST_CASE("dot output lists the CRD vertices and cover edges") {
    Diagram d = golden::compose(golden::crd(3, 2, 4));
    RenderOptions opts;
    opts.format = RenderFormat::graph_dot;
    std::string dot = render(d, opts);
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("rankdir=TB") != std::string::npos);
    CHECK(count_occurrences(dot, "[label=") == 5);
    for (const char* edge : {"\"M\" -> \"A\"", "\"M\" -> \"B\"", "\"A\" -> \"A:B\"",
                             "\"B\" -> \"A:B\"", "\"A:B\" -> \"Unit\""})
        CHECK(dot.find(edge) != std::string::npos);
    CHECK(count_occurrences(dot, " -> ") == 5);
    // Superscript levels and subscript df on the vertices.
    CHECK(dot.find("(Unit)^24_18") != std::string::npos);
    CHECK(dot.find("style=bold") != std::string::npos);
    CHECK(dot.find("peripheries=2") != std::string::npos);
}

TEST_CASE("oats: the response has exactly two incoming cover edges") {
    Diagram d = golden::compose(golden::oats());
    RenderOptions opts;
    opts.format = RenderFormat::graph_dot;
    std::string dot = render(d, opts);
    CHECK(count_occurrences(dot, "-> \"Subplot\"") == 2);
    CHECK(dot.find("\"Plot\" -> \"Subplot\"") != std::string::npos);
    CHECK(dot.find("\"Variety:Nitrogen\" -> \"Subplot\"") != std::string::npos);
}

TEST_CASE("mean-only diagram renders a single vertex and no edges") {
    Diagram d;
    d.add_factor({"M", {}, Variability::fixed, Role::mean, 1});
    d.close_and_reduce();
    RenderOptions opts;
    opts.format = RenderFormat::graph_dot;
    std::string dot = render(d, opts);
    CHECK(dot.find("\"M\"") != std::string::npos);
    CHECK(count_occurrences(dot, " -> ") == 0);

    opts.format = RenderFormat::ascii;
    std::string ascii = render(d, opts);
    CHECK(ascii.find("edges:") == std::string::npos);
}

TEST_CASE("rendered edges equal the cover edges in every format") {
    Diagram d = golden::compose(golden::oats());
    for (RenderFormat format : {RenderFormat::graph_dot, RenderFormat::ascii, RenderFormat::tikz}) {
        RenderOptions opts;
        opts.format = format;
        std::string text = render(d, opts);
        std::size_t edges =
            count_occurrences(text, format == RenderFormat::tikz ? "\\draw" : " -> ");
        CHECK(edges == d.cover_edges().size());
    }
}

TEST_CASE("ascii marks notation: parentheses, bold stars, response underline") {
    Diagram d = golden::compose(golden::oats());
    RenderOptions opts;
    std::string ascii = render(d, opts);
    CHECK(ascii.find("(_Subplot_)^72_45") != std::string::npos);
    CHECK(ascii.find("*Variety*^3_2") != std::string::npos);
    CHECK(ascii.find("(Block)^6_5") != std::string::npos);
    CHECK(ascii.find("M^1_1") != std::string::npos);
}

TEST_CASE("tikz output wraps the notation in math commands") {
    Diagram d = golden::compose(golden::oats());
    RenderOptions opts;
    opts.format = RenderFormat::tikz;
    std::string tikz = render(d, opts);
    CHECK(tikz.find("\\mathbf{Variety}^{3}_{2}") != std::string::npos);
    CHECK(tikz.find("(\\underline{\\mathit{Subplot}})^{72}_{45}") != std::string::npos);
    CHECK(tikz.find("\\node") != std::string::npos);
    CHECK(tikz.find("\\draw") != std::string::npos);
}

TEST_CASE("df display can be disabled and merges annotated") {
    Diagram d = golden::compose(golden::rcbd(4, 5, true));
    Diagram merged = merge_zero_df(d);
    RenderOptions opts;
    opts.show_df = false;
    std::string plain = render(merged, opts);
    CHECK(plain.find("_0") == std::string::npos);
    opts.merge_annotations = true;
    std::string annotated = render(merged, opts);
    CHECK(annotated.find("[+Unit]") != std::string::npos);
}

TEST_CASE("rendering is deterministic") {
    Diagram d = golden::compose(golden::oats());
    for (RenderFormat format : {RenderFormat::graph_dot, RenderFormat::ascii, RenderFormat::tikz}) {
        RenderOptions opts;
        opts.format = format;
        CHECK(render(d, opts) == render(d, opts));
    }
}

TEST_SUITE_END();
