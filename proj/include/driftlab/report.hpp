#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/evaluate.hpp"
#include "driftlab/serialize.hpp"

namespace driftlab {

struct ReportFiles {
  std::vector<std::string> figures;
  std::string tables;
};

namespace report_detail {

inline std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

inline int repr_rank(const std::string& r) {
  if (r == "raw") return 0;
  if (r == "pca") return 1;
  if (r == "concept_span") return 2;
  if (r == "aggregate") return 3;
  if (r == "demographics") return 4;
  return 5;
}

inline int regime_rank(const std::string& r) {
  if (r == "year_agnostic") return 0;
  if (r == "fixed_window") return 1;
  if (r == "prior_year") return 2;
  if (r == "full_history") return 3;
  return 4;
}

inline int model_rank(const std::string& m) {
  if (m == "lr") return 0;
  if (m == "rf") return 1;
  return 2;
}

inline const char* model_color(const std::string& m) {
  if (m == "lr") return "#2166ac";
  if (m == "rf") return "#d95f02";
  return "#555555";
}

template <class Rank>
inline std::vector<std::string> ordered_distinct(const std::set<std::string>& values, Rank rank) {
  std::vector<std::string> out(values.begin(), values.end());
  std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    const int ra = rank(a), rb = rank(b);
    return ra != rb ? ra < rb : a < b;
  });
  return out;
}

// One model's data inside one panel.
struct Series {
  std::string model;
  std::vector<SeriesPoint> points;          // temporal, sorted by year
  std::vector<double> point_se;             // aligned with points
  std::optional<std::pair<double, double>> flat;  // year-agnostic mean/std
};

struct TableLine {
  std::string representation;
  std::string model;
  std::string regime;
  std::string avg;
  std::string drop;
};

}  // namespace report_detail

// Renders the figure grid (one SVG per task: regimes as rows,
// representations as columns, one series per model, error bars =
// ±stderr, shaded band at the vocabulary switch year) and a text table
// of average AUROC ± std and max drop per grid group. Everything is
// recomputed from the metrics rows alone.
inline ReportFiles render_report(const std::vector<MetricsRow>& metrics, int switch_year,
                                 const std::string& out_dir) {
  namespace rd = report_detail;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw_io("cannot create directory " + out_dir + ": " + ec.message());

  // Overall rows only: no subgroup, not skipped.
  std::vector<const MetricsRow*> rows;
  std::set<std::string> task_set;
  for (const auto& r : metrics) {
    if (!r.subgroup.empty()) continue;
    task_set.insert(r.task);
    rows.push_back(&r);
  }

  ReportFiles files;
  std::ostringstream tables;

  for (const auto& task : rd::ordered_distinct(task_set, [](const std::string&) { return 0; })) {
    std::set<std::string> repr_set, regime_set, model_set;
    std::set<int> year_set;
    for (const auto* r : rows) {
      if (r->task != task) continue;
      repr_set.insert(r->representation);
      regime_set.insert(r->regime);
      model_set.insert(r->model);
      if (r->test_year) year_set.insert(*r->test_year);
    }
    const auto reprs = rd::ordered_distinct(repr_set, rd::repr_rank);
    const auto regimes = rd::ordered_distinct(regime_set, rd::regime_rank);
    const auto models = rd::ordered_distinct(model_set, rd::model_rank);

    // Assemble per-panel series and the global y range.
    double y_lo = 1.0, y_hi = 0.0;
    std::map<std::pair<std::string, std::string>, std::vector<rd::Series>> panels;
    for (const auto& regime : regimes) {
      for (const auto& repr : reprs) {
        std::vector<rd::Series> series_list;
        for (const auto& model : models) {
          rd::Series s;
          s.model = model;
          for (const auto* r : rows) {
            if (r->task != task || r->representation != repr || r->regime != regime ||
                r->model != model || !r->auroc) {
              continue;
            }
            const double se = r->se.value_or(0.0);
            y_lo = std::min(y_lo, *r->auroc - 2 * se);
            y_hi = std::max(y_hi, *r->auroc + 2 * se);
            if (r->test_year) {
              s.points.push_back({*r->test_year, *r->auroc});
              s.point_se.push_back(se);
            } else {
              s.flat = {*r->auroc, se};
            }
          }
          // Sort temporal points by year, carrying the errors along.
          std::vector<std::size_t> order(s.points.size());
          for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
          std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return s.points[a].test_year < s.points[b].test_year;
          });
          rd::Series sorted = s;
          for (std::size_t i = 0; i < order.size(); ++i) {
            sorted.points[i] = s.points[order[i]];
            sorted.point_se[i] = s.point_se[order[i]];
          }
          if (!sorted.points.empty() || sorted.flat) series_list.push_back(std::move(sorted));
        }
        panels[{regime, repr}] = std::move(series_list);
      }
    }
    if (y_lo > y_hi) {
      y_lo = 0.4;
      y_hi = 1.0;
    }
    y_lo = std::max(0.0, y_lo - 0.02);
    y_hi = std::min(1.0, y_hi + 0.02);
    if (y_hi - y_lo < 0.1) {
      const double mid = (y_lo + y_hi) / 2;
      y_lo = std::max(0.0, mid - 0.05);
      y_hi = std::min(1.0, mid + 0.05);
    }

    const bool has_years = !year_set.empty();
    const int year_min = has_years ? *year_set.begin() : 0;
    const int year_max = has_years ? *year_set.rbegin() : 1;

    // Layout.
    const double pw = 230, ph = 160, gap_x = 26, gap_y = 40;
    const double ml = 60, mt = 58, mr = 20, mb = 46;
    const double width = ml + reprs.size() * pw + (reprs.size() - 1) * gap_x + mr;
    const double height = mt + regimes.size() * ph + (regimes.size() - 1) * gap_y + mb;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << ml << "\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" "
           "font-weight=\"bold\">AUROC by test year: "
        << rd::escape_xml(task) << "</text>\n";
    // Legend.
    double lx = ml;
    for (const auto& model : models) {
      svg << "<line x1=\"" << lx << "\" y1=\"36\" x2=\"" << lx + 22
          << "\" y2=\"36\" stroke=\"" << rd::model_color(model) << "\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << lx + 27 << "\" y=\"40\" font-family=\"sans-serif\" "
             "font-size=\"11\">"
          << rd::escape_xml(model) << "</text>\n";
      lx += 85;
    }

    auto sx = [&](double year, double x0) {
      const double lo = year_min - 0.5, hi = year_max + 0.5;
      return x0 + (year - lo) / (hi - lo) * pw;
    };
    auto sy = [&](double v, double y0) { return y0 + ph - (v - y_lo) / (y_hi - y_lo) * ph; };

    for (std::size_t gi = 0; gi < regimes.size(); ++gi) {
      for (std::size_t ri = 0; ri < reprs.size(); ++ri) {
        const double x0 = ml + ri * (pw + gap_x);
        const double y0 = mt + gi * (ph + gap_y);
        const auto& series_list = panels[{regimes[gi], reprs[ri]}];

        svg << "<g class=\"panel\">\n";
        svg << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << pw << "\" height=\""
            << ph << "\" fill=\"#fafafa\" stroke=\"#888\"/>\n";
        svg << "<text x=\"" << x0 + pw / 2 << "\" y=\"" << y0 - 6
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << rd::escape_xml(reprs[ri]) << " / " << rd::escape_xml(regimes[gi]) << "</text>\n";

        // Switch-year band, clipped to the x range.
        if (has_years && regimes[gi] != "year_agnostic" && switch_year >= year_min - 0 &&
            switch_year <= year_max) {
          const double bx0 = std::max(x0, sx(switch_year - 0.5, x0));
          const double bx1 = std::min(x0 + pw, sx(switch_year + 0.5, x0));
          if (bx1 > bx0) {
            svg << "<rect x=\"" << bx0 << "\" y=\"" << y0 << "\" width=\"" << bx1 - bx0
                << "\" height=\"" << ph << "\" fill=\"#d9d9d9\" opacity=\"0.6\"/>\n";
          }
        }

        // Y ticks (4 divisions) on the left column; x ticks on every panel.
        for (int t = 0; t <= 4; ++t) {
          const double v = y_lo + (y_hi - y_lo) * t / 4.0;
          const double y = sy(v, y0);
          svg << "<line x1=\"" << x0 << "\" y1=\"" << y << "\" x2=\"" << x0 + pw << "\" y2=\""
              << y << "\" stroke=\"#e0e0e0\"/>\n";
          if (ri == 0) {
            svg << "<text x=\"" << x0 - 6 << "\" y=\"" << y + 3
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"9\">"
                << rd::fmt2(v) << "</text>\n";
          }
        }
        if (has_years && regimes[gi] != "year_agnostic") {
          const int step = std::max(1, (year_max - year_min) / 4);
          for (int yr = year_min; yr <= year_max; yr += step) {
            const double x = sx(yr, x0);
            svg << "<line x1=\"" << x << "\" y1=\"" << y0 + ph << "\" x2=\"" << x << "\" y2=\""
                << y0 + ph + 4 << "\" stroke=\"#888\"/>\n";
            svg << "<text x=\"" << x << "\" y=\"" << y0 + ph + 14
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">" << yr
                << "</text>\n";
          }
        }

        bool drew_any = false;
        for (const auto& s : series_list) {
          const char* color = rd::model_color(s.model);
          svg << "<g class=\"series\">\n";
          if (s.flat) {
            const auto [mean, sd] = *s.flat;
            const double yb0 = sy(std::min(y_hi, mean + sd), y0);
            const double yb1 = sy(std::max(y_lo, mean - sd), y0);
            svg << "<rect x=\"" << x0 << "\" y=\"" << yb0 << "\" width=\"" << pw
                << "\" height=\"" << std::max(0.0, yb1 - yb0) << "\" fill=\"" << color
                << "\" opacity=\"0.12\"/>\n";
            svg << "<line x1=\"" << x0 << "\" y1=\"" << sy(mean, y0) << "\" x2=\"" << x0 + pw
                << "\" y2=\"" << sy(mean, y0) << "\" stroke=\"" << color
                << "\" stroke-width=\"2\" stroke-dasharray=\"6,3\"/>\n";
            drew_any = true;
          }
          if (!s.points.empty()) {
            std::ostringstream pts;
            for (std::size_t i = 0; i < s.points.size(); ++i) {
              if (i) pts << " ";
              pts << sx(s.points[i].test_year, x0) << "," << sy(s.points[i].auroc, y0);
            }
            svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.5\"/>\n";
            for (std::size_t i = 0; i < s.points.size(); ++i) {
              const double x = sx(s.points[i].test_year, x0);
              const double yv = s.points[i].auroc;
              const double se = s.point_se[i];
              svg << "<line x1=\"" << x << "\" y1=\"" << sy(std::min(y_hi, yv + se), y0)
                  << "\" x2=\"" << x << "\" y2=\"" << sy(std::max(y_lo, yv - se), y0)
                  << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
              svg << "<circle cx=\"" << x << "\" cy=\"" << sy(yv, y0) << "\" r=\"2.4\" fill=\""
                  << color << "\"/>\n";
            }
            drew_any = true;
          }
          svg << "</g>\n";
        }
        if (!drew_any) {
          svg << "<text x=\"" << x0 + pw / 2 << "\" y=\"" << y0 + ph / 2
              << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\" "
                 "fill=\"#999\">no data</text>\n";
        }
        svg << "</g>\n";
      }
    }
    svg << "</svg>\n";

    const std::string fig_path =
        (std::filesystem::path(out_dir) / ("fig_" + task + ".svg")).string();
    write_text_file(fig_path, svg.str());
    files.figures.push_back(fig_path);

    // ---- Text table for this task (recomputed from the rows). ----
    struct Agg {
      std::vector<SeriesPoint> series;
      std::optional<std::pair<double, double>> ya;
      std::optional<int> first_seen_year;
    };
    std::map<std::array<std::string, 3>, Agg> groups;
    for (const auto& r : metrics) {
      if (r.task != task || !r.subgroup.empty()) continue;
      auto& g = groups[{r.representation, r.model, r.regime}];
      if (r.test_year) {
        if (!g.first_seen_year || *r.test_year < *g.first_seen_year) {
          g.first_seen_year = *r.test_year;
        }
        if (r.auroc) g.series.push_back({*r.test_year, *r.auroc});
      } else if (r.auroc) {
        g.ya = {*r.auroc, r.se.value_or(0.0)};
      }
    }
    std::vector<rd::TableLine> lines;
    for (const auto& [key, g] : groups) {
      rd::TableLine line;
      line.representation = key[0];
      line.model = key[1];
      line.regime = key[2];
      if (g.ya) {
        line.avg = rd::fmt3(g.ya->first) + " +/- " + rd::fmt3(g.ya->second);
        line.drop = "-";
      } else if (!g.series.empty()) {
        std::vector<double> aurocs;
        for (const auto& p : g.series) aurocs.push_back(p.auroc);
        const auto [mean, sd] = mean_and_sample_std(aurocs);
        line.avg = rd::fmt3(mean) + " +/- " + rd::fmt3(sd);
        const auto drop = g.first_seen_year
                              ? max_drop_from_series(g.series, *g.first_seen_year)
                              : std::nullopt;
        if (!drop) {
          line.drop = "-";
        } else if (*drop < 0) {
          line.drop = "*(+" + rd::fmt3(-*drop) + ")";
        } else {
          line.drop = rd::fmt3(*drop);
        }
      } else {
        line.avg = "-";
        line.drop = "-";
      }
      lines.push_back(std::move(line));
    }
    std::sort(lines.begin(), lines.end(), [](const rd::TableLine& a, const rd::TableLine& b) {
      const auto ka = std::array<int, 3>{rd::regime_rank(a.regime), rd::repr_rank(a.representation),
                                         rd::model_rank(a.model)};
      const auto kb = std::array<int, 3>{rd::regime_rank(b.regime), rd::repr_rank(b.representation),
                                         rd::model_rank(b.model)};
      return ka != kb ? ka < kb
                      : std::tie(a.regime, a.representation, a.model) <
                            std::tie(b.regime, b.representation, b.model);
    });

    tables << "== task: " << task << " ==\n";
    std::array<std::size_t, 5> w{14, 5, 13, 18, 10};
    for (const auto& l : lines) {
      w[0] = std::max(w[0], l.representation.size());
      w[1] = std::max(w[1], l.model.size());
      w[2] = std::max(w[2], l.regime.size());
      w[3] = std::max(w[3], l.avg.size());
      w[4] = std::max(w[4], l.drop.size());
    }
    auto pad = [](const std::string& s, std::size_t width) {
      return s + std::string(width > s.size() ? width - s.size() : 0, ' ');
    };
    tables << pad("representation", w[0]) << "  " << pad("model", w[1]) << "  "
           << pad("regime", w[2]) << "  " << pad("avg auroc", w[3]) << "  "
           << pad("max drop", w[4]) << "\n";
    for (const auto& l : lines) {
      tables << pad(l.representation, w[0]) << "  " << pad(l.model, w[1]) << "  "
             << pad(l.regime, w[2]) << "  " << pad(l.avg, w[3]) << "  " << pad(l.drop, w[4])
             << "\n";
    }
    tables << "\n";
  }

  if (task_set.empty()) tables << "no results\n";
  files.tables = (std::filesystem::path(out_dir) / "tables.txt").string();
  write_text_file(files.tables, tables.str());
  return files;
}

}  // namespace driftlab
