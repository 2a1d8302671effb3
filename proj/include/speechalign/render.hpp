#pragma once

// Static SVG heat maps of token- or word-level contribution matrices, with
// gold Sure/Possible points outlined and hard-alignment points marked.
// Rows are targets (top to bottom), columns sources (left to right). Output
// depends only on the inputs.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "speechalign/core.hpp"

namespace speechalign {

struct RenderOptions {
    std::vector<std::string> source_labels;  // column labels; indices when empty
    std::vector<std::string> target_labels;  // row labels; indices when empty
    std::string title;
    int cell_px = 24;
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

// White to dark blue.
inline std::string heat_colour(double t) {
    t = std::clamp(t, 0.0, 1.0);
    auto channel = [t](int lo, int hi) {
        const double v = static_cast<double>(hi) + (static_cast<double>(lo) - static_cast<double>(hi)) * t;
        return static_cast<int>(v + 0.5);
    };
    static constexpr char hex[] = "0123456789abcdef";
    std::string out = "#";
    for (const int v : {channel(8, 255), channel(48, 255), channel(107, 255)}) {
        out += hex[(v >> 4) & 0xF];
        out += hex[v & 0xF];
    }
    return out;
}

}  // namespace detail

template <class Tag>
std::string render_svg(const DenseMatrix<Tag>& m, const GoldAlignment* gold, const AlignmentSet* hard,
                       const RenderOptions& opts = {}) {
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    auto check_points = [&](const AlignmentSet& pts, const char* what) {
        for (const auto& p : pts) {
            if (p.src_word >= cols || p.tgt_word >= rows) {
                throw ValidationError(std::string(what) + " point (" + std::to_string(p.src_word) + ", " +
                                      std::to_string(p.tgt_word) + ") lies outside the " + std::to_string(rows) +
                                      "x" + std::to_string(cols) + " map");
            }
        }
    };
    if (gold) check_points(gold->possible(), "gold");
    if (hard) check_points(*hard, "hard alignment");
    if (!opts.source_labels.empty() && opts.source_labels.size() != cols) {
        throw ValidationError("got " + std::to_string(opts.source_labels.size()) + " source labels for " +
                              std::to_string(cols) + " columns");
    }
    if (!opts.target_labels.empty() && opts.target_labels.size() != rows) {
        throw ValidationError("got " + std::to_string(opts.target_labels.size()) + " target labels for " +
                              std::to_string(rows) + " rows");
    }

    auto label = [](const std::vector<std::string>& labels, std::size_t k) {
        return labels.empty() ? std::to_string(k) : labels[k];
    };
    std::size_t longest_row = 1;
    std::size_t longest_col = 1;
    for (std::size_t i = 0; i < rows; ++i) longest_row = std::max(longest_row, detail::utf8_length(label(opts.target_labels, i)));
    for (std::size_t j = 0; j < cols; ++j) longest_col = std::max(longest_col, detail::utf8_length(label(opts.source_labels, j)));

    const long cell = opts.cell_px;
    const long title_h = opts.title.empty() ? 0 : 24;
    const long left = 10 + 7 * static_cast<long>(longest_row);
    const long top = title_h + 10 + 7 * static_cast<long>(longest_col);
    const long width = left + cell * static_cast<long>(cols) + 10;
    const long height = top + cell * static_cast<long>(rows) + 10;

    double peak = 0.0;
    for (const double v : m.values()) peak = std::max(peak, v);

    auto num = [](long v) { return std::to_string(v); };
    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
           "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) + "\" fill=\"#ffffff\"/>\n";
    if (!opts.title.empty()) {
        svg += "<text class=\"title\" x=\"" + num(width / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" +
               detail::xml_escape(opts.title) + "</text>\n";
    }

    svg += "<g class=\"cells\">\n";
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = m(i, j);
            const long x = left + cell * static_cast<long>(j);
            const long y = top + cell * static_cast<long>(i);
            svg += "<rect class=\"cell\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell) + "\" height=\"" +
                   num(cell) + "\" fill=\"" + detail::heat_colour(peak > 0.0 ? v / peak : 0.0) + "\"><title>" +
                   std::to_string(i) + "," + std::to_string(j) + ": " + detail::format_fixed(v, 4) + "</title></rect>\n";
        }
    }
    svg += "</g>\n";

    svg += "<g class=\"labels\">\n";
    for (std::size_t i = 0; i < rows; ++i) {
        svg += "<text class=\"row-label\" x=\"" + num(left - 4) + "\" y=\"" + num(top + cell * static_cast<long>(i) + cell / 2 + 4) +
               "\" text-anchor=\"end\">" + detail::xml_escape(label(opts.target_labels, i)) + "</text>\n";
    }
    for (std::size_t j = 0; j < cols; ++j) {
        const long x = left + cell * static_cast<long>(j) + cell / 2 + 4;
        const long y = top - 4;
        svg += "<text class=\"col-label\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" transform=\"rotate(-90 " + num(x) + " " +
               num(y) + ")\">" + detail::xml_escape(label(opts.source_labels, j)) + "</text>\n";
    }
    svg += "</g>\n";

    if (gold) {
        svg += "<g class=\"gold\">\n";
        for (const auto& p : gold->possible()) {
            const bool sure = gold->sure().contains(p);
            const long x = left + cell * static_cast<long>(p.src_word) + 1;
            const long y = top + cell * static_cast<long>(p.tgt_word) + 1;
            svg += std::string("<rect class=\"") + (sure ? "gold-sure" : "gold-possible") + "\" x=\"" + num(x) + "\" y=\"" +
                   num(y) + "\" width=\"" + num(cell - 2) + "\" height=\"" + num(cell - 2) + "\" fill=\"none\" stroke=\"" +
                   (sure ? "#d62728\" stroke-width=\"2\"" : "#ff7f0e\" stroke-width=\"1.5\" stroke-dasharray=\"3,2\"") +
                   "/>\n";
        }
        svg += "</g>\n";
    }
    if (hard) {
        svg += "<g class=\"hard\">\n";
        for (const auto& p : *hard) {
            svg += "<circle class=\"hard\" cx=\"" + num(left + cell * static_cast<long>(p.src_word) + cell / 2) + "\" cy=\"" +
                   num(top + cell * static_cast<long>(p.tgt_word) + cell / 2) + "\" r=\"" + num(cell / 4) +
                   "\" fill=\"#2ca02c\"/>\n";
        }
        svg += "</g>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace speechalign
