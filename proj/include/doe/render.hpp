#pragma once

#include <string>

#include "doe/diagram.hpp"

namespace doe {

enum class RenderFormat { graph_dot, ascii, tikz };

struct RenderOptions {
    RenderFormat format = RenderFormat::ascii;
    bool show_levels = true;
    bool show_df = true;            // ignored when df is not computed
    bool merge_annotations = false; // annotate factors produced by zero-df merges
};

/// Render a diagram. Vertices carry the paper notation (levels superscript,
/// df subscript, parentheses for random factors, response underlined); edges
/// are exactly the cover edges, ranked by poset height with M on top.
std::string render(const Diagram& diagram, const RenderOptions& opts);

}  // namespace doe
