#include "pwb/panel_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "pwb/dgp.hpp"
#include "pwb/errors.hpp"

namespace pwb {

namespace {

struct RawRow {
  int i = 0, t = 0;
  double y = 0.0;
  std::vector<double> x;
  double loc_x = 0.0, loc_y = 0.0;
  int line = 0;  // 1-based source line / element index
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    // trim surrounding whitespace
    size_t a = tok.find_first_not_of(" \t\r");
    size_t b = tok.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : tok.substr(a, b - a + 1));
  }
  return out;
}

PanelData assemble(std::vector<RawRow> rows, int k, bool have_locations) {
  if (rows.empty()) throw ParseError("panel file has no data rows");
  int n = 0, t = 0;
  for (const RawRow& r : rows) {
    if (r.i < 1 || r.t < 1)
      throw ParseError("line " + std::to_string(r.line) +
                       ": unit and period indices must be >= 1");
    n = std::max(n, r.i);
    t = std::max(t, r.t);
  }
  if (static_cast<long long>(n) * t != static_cast<long long>(rows.size()))
    throw ParseError("panel is not balanced: expected " +
                     std::to_string(static_cast<long long>(n) * t) +
                     " cells for N=" + std::to_string(n) +
                     ", T=" + std::to_string(t) + ", found " +
                     std::to_string(rows.size()));

  PanelData panel;
  panel.n_units = n;
  panel.n_periods = t;
  panel.n_regressors = k;
  panel.y.resize(n, t);
  panel.x.assign(k, MatrixXd(n, t));
  panel.locations = MatrixXd::Zero(n, 2);

  std::vector<char> seen(static_cast<size_t>(n) * t, 0);
  for (const RawRow& r : rows) {
    size_t cell = static_cast<size_t>(r.i - 1) * t + (r.t - 1);
    if (seen[cell])
      throw ParseError("line " + std::to_string(r.line) + ": duplicate cell (i=" +
                       std::to_string(r.i) + ", t=" + std::to_string(r.t) + ")");
    seen[cell] = 1;
    panel.y(r.i - 1, r.t - 1) = r.y;
    for (int a = 0; a < k; ++a) panel.x[a](r.i - 1, r.t - 1) = r.x[a];
    if (have_locations) {
      panel.locations(r.i - 1, 0) = r.loc_x;
      panel.locations(r.i - 1, 1) = r.loc_y;
    }
  }
  if (!have_locations) panel.locations = lattice_locations(n);
  panel.validate();
  return panel;
}

}  // namespace

PanelData load_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  std::vector<std::string> header = split_csv_line(line);

  bool have_locations = false;
  int cols = static_cast<int>(header.size());
  if (cols >= 2 && header[cols - 2] == "loc_x" && header[cols - 1] == "loc_y") {
    have_locations = true;
    cols -= 2;
  }
  if (cols < 4 || header[0] != "i" || header[1] != "t" || header[2] != "y")
    throw ParseError(path + ": header must be i,t,y,x1,...[,loc_x,loc_y]");
  int k = cols - 3;
  for (int a = 0; a < k; ++a)
    if (header[3 + a] != "x" + std::to_string(a + 1))
      throw ParseError(path + ": expected column x" + std::to_string(a + 1));

  std::vector<RawRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> tok = split_csv_line(line);
    if (static_cast<int>(tok.size()) != cols + (have_locations ? 2 : 0))
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(cols + (have_locations ? 2 : 0)) +
                       " fields, found " + std::to_string(tok.size()));
    RawRow r;
    r.line = lineno;
    try {
      r.i = std::stoi(tok[0]);
      r.t = std::stoi(tok[1]);
      r.y = std::stod(tok[2]);
      r.x.resize(k);
      for (int a = 0; a < k; ++a) r.x[a] = std::stod(tok[3 + a]);
      if (have_locations) {
        r.loc_x = std::stod(tok[cols]);
        r.loc_y = std::stod(tok[cols + 1]);
      }
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(lineno) + ": malformed number");
    }
    rows.push_back(std::move(r));
  }
  return assemble(std::move(rows), k, have_locations);
}

PanelData load_panel_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw ParseError(path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_array()) throw ParseError(path + ": expected an array of rows");
  if (doc.empty()) throw ParseError(path + ": empty panel");

  bool have_locations = doc[0].contains("loc_x");
  int k = 0;
  while (doc[0].contains("x" + std::to_string(k + 1))) ++k;
  if (k == 0) throw ParseError(path + ": no regressor fields x1,...");

  std::vector<RawRow> rows;
  int idx = 0;
  for (const auto& item : doc) {
    ++idx;
    RawRow r;
    r.line = idx;
    try {
      r.i = item.at("i").get<int>();
      r.t = item.at("t").get<int>();
      r.y = item.at("y").get<double>();
      r.x.resize(k);
      for (int a = 0; a < k; ++a)
        r.x[a] = item.at("x" + std::to_string(a + 1)).get<double>();
      if (have_locations) {
        r.loc_x = item.at("loc_x").get<double>();
        r.loc_y = item.at("loc_y").get<double>();
      }
    } catch (const std::exception& e) {
      throw ParseError("row " + std::to_string(idx) + ": " + e.what());
    }
    rows.push_back(std::move(r));
  }
  return assemble(std::move(rows), k, have_locations);
}

PanelData load_panel(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    return load_panel_json(path);
  return load_panel_csv(path);
}

void write_panel_csv(const PanelData& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "i,t,y";
  for (int a = 0; a < panel.n_regressors; ++a) out << ",x" << a + 1;
  out << ",loc_x,loc_y\n";
  char buf[64];
  for (int i = 0; i < panel.n_units; ++i)
    for (int t = 0; t < panel.n_periods; ++t) {
      out << i + 1 << ',' << t + 1;
      std::snprintf(buf, sizeof buf, ",%.17g", panel.y(i, t));
      out << buf;
      for (int a = 0; a < panel.n_regressors; ++a) {
        std::snprintf(buf, sizeof buf, ",%.17g", panel.x[a](i, t));
        out << buf;
      }
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g", panel.locations(i, 0),
                    panel.locations(i, 1));
      out << buf << '\n';
    }
}

}  // namespace pwb
