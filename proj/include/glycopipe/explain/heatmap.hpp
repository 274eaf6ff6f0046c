// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <ostream>
#include <string>
#include <vector>

#include "glycopipe/common.hpp"
#include "glycopipe/model/fusion.hpp"

namespace glycopipe::explain {

struct HeatmapExport {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Eigen::MatrixXd values;  // rows x cols

  void write_csv(std::ostream& os) const {
    os << "quantity";
    for (const auto& c : col_labels) os << ',' << c;
    os << '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      os << row_labels[static_cast<std::size_t>(r)];
      for (Eigen::Index c = 0; c < values.cols(); ++c) os << ',' << format_double(values(r, c));
      os << '\n';
    }
  }

  // Grey-scale grid, darker cells for larger values within each row.
  void write_svg(std::ostream& os) const {
    const int cell = 48, left = 110, top = 30;
    const auto w = left + cell * static_cast<int>(values.cols()) + 10;
    const auto h = top + cell * static_cast<int>(values.rows()) + 10;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      os << "<text x=\"" << left + cell * c + cell / 2 << "\" y=\"" << top - 8 << "\" text-anchor=\"middle\">"
         << col_labels[static_cast<std::size_t>(c)] << "</text>\n";
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      const double lo = values.row(r).minCoeff(), hi = values.row(r).maxCoeff();
      os << "<text x=\"" << left - 6 << "\" y=\"" << top + cell * r + cell / 2 + 4 << "\" text-anchor=\"end\">"
         << row_labels[static_cast<std::size_t>(r)] << "</text>\n";
      for (Eigen::Index c = 0; c < values.cols(); ++c) {
        const double u = hi > lo ? (values(r, c) - lo) / (hi - lo) : 0.5;
        const int shade = 235 - static_cast<int>(std::lround(200.0 * u));
        os << "<rect x=\"" << left + cell * c << "\" y=\"" << top + cell * r << "\" width=\"" << cell
           << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ',' << shade << ',' << shade << ")\"/>\n";
        os << "<text x=\"" << left + cell * c + cell / 2 << "\" y=\"" << top + cell * r + cell / 2 + 4
           << "\" text-anchor=\"middle\" fill=\"" << (u > 0.5 ? "white" : "black") << "\">"
           << format_double(std::round(values(r, c) * 1000.0) / 1000.0) << "</text>\n";
      }
    }
    os << "</svg>\n";
  }
};

// Attention weights over the T days of one record's series.
inline HeatmapExport export_heatmap(const model::FusionModel& m, const model::Example& x) {
  const model::ForwardTrace tr = model::forward_trace(m, x);
  HeatmapExport h;
  h.row_labels = {"attention"};
  const auto T = tr.attn.weights.size();
  for (Eigen::Index t = 0; t < T; ++t) h.col_labels.push_back("day-" + std::to_string(t + 1));
  h.values = tr.attn.weights.transpose();
  return h;
}

}  // namespace glycopipe::explain
