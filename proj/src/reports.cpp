#include <algorithm>
#include <cstdio>
#include <fstream>

#include "pairtask/error.hpp"
#include "pairtask/evaluation.hpp"

namespace pairtask {

namespace {

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_heatmap(const std::filesystem::path& path, const std::vector<std::string>& classes, const Matrix& m) {
  const int cell = 48, left = 260, top = 40;
  const int n = static_cast<int>(classes.size());
  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + n * cell + 20 << "\" height=\""
      << top + n * cell + 220 << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i < n; ++i) {
    out << "<text x=\"" << left - 6 << "\" y=\"" << top + i * cell + cell / 2 + 4 << "\" text-anchor=\"end\">"
        << xml_escape(classes[i]) << "</text>\n";
    const int x = left + i * cell + cell / 2, y = top + n * cell + 8;
    out << "<text x=\"" << x << "\" y=\"" << y << "\" transform=\"rotate(60 " << x << ' ' << y << ")\">"
        << xml_escape(classes[i]) << "</text>\n";
    for (int j = 0; j < n; ++j) {
      const double v = m[i][j];
      const int shade = static_cast<int>(255.0 * (1.0 - v));
      out << "<rect x=\"" << left + j * cell << "\" y=\"" << top + i * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ',' << shade << ",255)\" stroke=\"#ccc\"/>\n";
      out << "<text x=\"" << left + j * cell + cell / 2 << "\" y=\"" << top + i * cell + cell / 2 + 4
          << "\" text-anchor=\"middle\" fill=\"" << (v > 0.5 ? "white" : "black") << "\">" << fmt(v, 2)
          << "</text>\n";
    }
  }
  out << "<text x=\"" << left << "\" y=\"20\">rows: gold, columns: predicted</text>\n</svg>\n";
}

}  // namespace

std::vector<std::filesystem::path> emit_reports(std::span<const AblationRow> rows,
                                                const std::filesystem::path& out_dir) {
  if (rows.empty()) throw DataError("emit_reports: empty ledger");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::string> tasks;
  for (const auto& r : rows)
    for (const auto& t : r.tasks)
      if (std::find(tasks.begin(), tasks.end(), t) == tasks.end()) tasks.push_back(t);

  std::vector<std::filesystem::path> written;

  auto csv_path = out_dir / "ablation.csv";
  {
    auto out = open_out(csv_path);
    out << "setting";
    for (const auto& t : tasks) out << ',' << csv_field(t);
    out << ",avg\n";
    for (const auto& r : rows) {
      out << csv_field(r.setting);
      for (const auto& t : tasks) {
        out << ',';
        if (auto it = r.mean_macro_f1.find(t); it != r.mean_macro_f1.end()) out << fmt(it->second, 6);
      }
      out << ',' << fmt(r.average, 6) << '\n';
    }
  }
  written.push_back(csv_path);

  auto md_path = out_dir / "ablation.md";
  {
    auto out = open_out(md_path);
    out << "| setting |";
    for (const auto& t : tasks) out << ' ' << t << " |";
    out << " AVG |\n|---|";
    for (std::size_t i = 0; i < tasks.size(); ++i) out << "---:|";
    out << "---:|\n";
    for (const auto& r : rows) {
      out << "| " << r.setting << " |";
      for (const auto& t : tasks) {
        auto it = r.mean_macro_f1.find(t);
        out << ' ' << (it == r.mean_macro_f1.end() ? std::string("-") : fmt(it->second, 3)) << " |";
      }
      out << ' ' << fmt(r.average, 3) << " |\n";
    }
  }
  written.push_back(md_path);

  for (const auto& t : tasks) {
    const AblationRow* last = nullptr;
    for (const auto& r : rows)
      if (r.mean_confusion.count(t)) last = &r;
    const auto& classes = last->classes.at(t);
    const auto& m = last->mean_confusion.at(t);
    auto path = out_dir / ("confusion_" + t + ".csv");
    {
      auto out = open_out(path);
      out << "gold\\predicted";
      for (const auto& c : classes) out << ',' << csv_field(c);
      out << '\n';
      for (std::size_t i = 0; i < classes.size(); ++i) {
        out << csv_field(classes[i]);
        for (double v : m[i]) out << ',' << fmt(v, 6);
        out << '\n';
      }
    }
    written.push_back(path);
    auto svg = out_dir / ("confusion_" + t + ".svg");
    try {
      write_heatmap(svg, classes, m);
      written.push_back(svg);
    } catch (const DataError&) {
      // plots are best effort
    }
  }
  return written;
}

}  // namespace pairtask
