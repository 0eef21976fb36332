#include "doe/render.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace doe {

namespace {

struct NodeInfo {
    FactorId id;
    int height;
};

std::vector<NodeInfo> layout(const Diagram& d) {
    std::vector<NodeInfo> nodes;
    for (int f = 0; f < d.size(); ++f) nodes.push_back({f, d.height(f)});
    std::stable_sort(nodes.begin(), nodes.end(), [](const NodeInfo& a, const NodeInfo& b) {
        if (a.height != b.height) return a.height < b.height;
        return a.id < b.id;
    });
    return nodes;
}

std::string annotate(const Diagram& d, FactorId f, const RenderOptions& opts) {
    std::string out;
    if (opts.merge_annotations) {
        auto it = d.absorbed.find(f);
        if (it != d.absorbed.end()) {
            out += " [+";
            for (std::size_t i = 0; i < it->second.size(); ++i)
                out += (i ? "," : "") + it->second[i];
            out += "]";
        }
    }
    return out;
}

std::string ascii_label(const Diagram& d, FactorId f, const RenderOptions& opts) {
    const Factor& fac = d.factors[f];
    std::string name = fac.name;
    if (f == d.response) name = "_" + name + "_";
    if (fac.role == Role::treatment) name = "*" + name + "*";
    if (fac.variability == Variability::random) name = "(" + name + ")";
    if (opts.show_levels) name += "^" + std::to_string(fac.levels);
    if (opts.show_df && d.has_df()) name += "_" + std::to_string(d.df[f]);
    return name + annotate(d, f, opts);
}

std::string render_ascii(const Diagram& d, const RenderOptions& opts) {
    std::ostringstream os;
    for (const auto& n : layout(d))
        os << std::string(static_cast<std::size_t>(n.height) * 2, ' ') << ascii_label(d, n.id, opts)
           << "\n";
    auto edges = d.cover_edges();
    std::sort(edges.begin(), edges.end());
    if (!edges.empty()) os << "edges:\n";
    for (const auto& [upper, lower] : edges)
        os << "  " << d.factors[upper].name << " -> " << d.factors[lower].name << "\n";
    return os.str();
}

std::string render_dot(const Diagram& d, const RenderOptions& opts) {
    std::ostringstream os;
    os << "digraph design {\n  rankdir=TB;\n  node [shape=plaintext];\n";
    auto nodes = layout(d);
    for (const auto& n : nodes) {
        const Factor& fac = d.factors[n.id];
        std::string label = fac.name;
        if (fac.variability == Variability::random) label = "(" + label + ")";
        if (opts.show_levels) label += "^" + std::to_string(fac.levels);
        if (opts.show_df && d.has_df()) label += "_" + std::to_string(d.df[n.id]);
        label += annotate(d, n.id, opts);
        os << "  \"" << fac.name << "\" [label=\"" << label << "\"";
        if (fac.role == Role::treatment) os << ", style=bold";
        if (n.id == d.response) os << ", peripheries=2";
        os << "];\n";
    }
    // One rank per poset height keeps M on top and the response at the bottom.
    std::map<int, std::vector<FactorId>> ranks;
    for (const auto& n : nodes) ranks[n.height].push_back(n.id);
    for (const auto& [h, ids] : ranks) {
        if (ids.size() < 2) continue;
        os << "  { rank=same;";
        for (FactorId f : ids) os << " \"" << d.factors[f].name << "\";";
        os << " }\n";
    }
    auto edges = d.cover_edges();
    std::sort(edges.begin(), edges.end());
    for (const auto& [upper, lower] : edges)
        os << "  \"" << d.factors[upper].name << "\" -> \"" << d.factors[lower].name << "\";\n";
    os << "}\n";
    return os.str();
}

std::string tikz_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == ':')
            out += "\\!:\\!";
        else
            out += c;
    }
    return out;
}

std::string render_tikz(const Diagram& d, const RenderOptions& opts) {
    std::ostringstream os;
    auto nodes = layout(d);
    std::map<int, int> column;  // next x slot per height
    std::map<FactorId, std::string> tag;
    for (const auto& n : nodes) {
        const Factor& fac = d.factors[n.id];
        tag[n.id] = "n" + std::to_string(n.id);
        std::string body = tikz_escape(fac.name);
        body = fac.role == Role::treatment ? "\\mathbf{" + body + "}" : "\\mathit{" + body + "}";
        if (n.id == d.response) body = "\\underline{" + body + "}";
        if (fac.variability == Variability::random) body = "(" + body + ")";
        if (opts.show_levels) body += "^{" + std::to_string(fac.levels) + "}";
        if (opts.show_df && d.has_df()) body += "_{" + std::to_string(d.df[n.id]) + "}";
        int x = column[n.height]++;
        os << "\\node (" << tag[n.id] << ") at (" << x * 3 << ", " << -2 * n.height << ") {$"
           << body << "$};\n";
    }
    auto edges = d.cover_edges();
    std::sort(edges.begin(), edges.end());
    for (const auto& [upper, lower] : edges)
        os << "\\draw (" << tag[upper] << ".south) -- (" << tag[lower] << ".north);\n";
    return os.str();
}

}  // namespace

std::string render(const Diagram& d, const RenderOptions& opts) {
    switch (opts.format) {
        case RenderFormat::ascii: return render_ascii(d, opts);
        case RenderFormat::graph_dot: return render_dot(d, opts);
        case RenderFormat::tikz: return render_tikz(d, opts);
    }
    throw BuildError("unknown render format");
}

}  // namespace doe
