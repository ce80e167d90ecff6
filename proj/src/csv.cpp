#include "hetfx/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hetfx {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  std::string out(s.substr(begin, end - begin + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

std::string where(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row) + ", column '" + column + "'";
}

double parse_value(const std::string& text, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::invalid_input, where(row, column) + ": '" + text + "' is not a number");
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::invalid_input, where(row, column) + ": value is not finite");
  }
  return value;
}

int parse_binary(const std::string& text, std::size_t row, const std::string& column) {
  const double v = parse_value(text, row, column);
  if (v != 0.0 && v != 1.0) {
    throw Error(ErrorCode::invalid_input, where(row, column) + ": value " + text + " is not 0 or 1");
  }
  return static_cast<int>(v);
}

enum class Role { y, t, d, x, w, ignored };

}  // namespace

std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

CsvLoad read_csv(std::istream& in) {
  std::string line;
  while (std::getline(in, line) && blank(line)) {}
  if (blank(line)) throw Error(ErrorCode::invalid_input, "CSV input has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::vector<std::string> header = split(line);

  CsvLoad out;
  std::vector<Role> roles;
  std::vector<std::string> x_names, w_names;
  int y_col = -1, t_col = -1, d_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string& h = header[j];
    Role role = Role::ignored;
    auto claim = [&](int& slot, Role r) {
      if (slot >= 0) throw Error(ErrorCode::invalid_input, "duplicate column '" + h + "'");
      slot = static_cast<int>(j);
      role = r;
    };
    if (h == "y") {
      claim(y_col, Role::y);
    } else if (h == "t") {
      claim(t_col, Role::t);
    } else if (h == "d") {
      claim(d_col, Role::d);
    } else if (h.rfind("x_", 0) == 0 && h.size() > 2) {
      if (h == "x_intercept") {
        throw Error(ErrorCode::invalid_input,
                    "column 'x_intercept' is reserved; the intercept is added automatically");
      }
      role = Role::x;
      x_names.push_back(h.substr(2));
    } else if (h.rfind("w_", 0) == 0 && h.size() > 2) {
      role = Role::w;
      w_names.push_back(h.substr(2));
    } else {
      out.ignored_columns.push_back(h);
    }
    roles.push_back(role);
  }
  if (y_col < 0) throw Error(ErrorCode::invalid_input, "CSV input has no 'y' column");
  if (t_col < 0) throw Error(ErrorCode::invalid_input, "CSV input has no 't' column");

  std::vector<double> y;
  std::vector<int> t, d;
  std::vector<double> x, w;  // row-major
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    ++row;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::invalid_input, "row " + std::to_string(row) + " has " +
                                                std::to_string(cells.size()) + " fields, expected " +
                                                std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      switch (roles[j]) {
        case Role::y: y.push_back(parse_value(cells[j], row, header[j])); break;
        case Role::t: t.push_back(parse_binary(cells[j], row, header[j])); break;
        case Role::d: d.push_back(parse_binary(cells[j], row, header[j])); break;
        case Role::x: x.push_back(parse_value(cells[j], row, header[j])); break;
        case Role::w: w.push_back(parse_value(cells[j], row, header[j])); break;
        case Role::ignored: break;
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(row);
  if (n == 0) throw Error(ErrorCode::insufficient_data, "CSV input has no data rows");

  const auto kx = static_cast<Eigen::Index>(x_names.size());
  const auto kw = static_cast<Eigen::Index>(w_names.size());
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Matrix xm = kx > 0 ? Matrix(Eigen::Map<const RowMajor>(x.data(), n, kx)) : Matrix(n, 0);
  std::optional<Matrix> wm;
  if (kw > 0) wm = Matrix(Eigen::Map<const RowMajor>(w.data(), n, kw));
  std::optional<IndexVector> dv;
  if (d_col >= 0) dv = IndexVector(Eigen::Map<const IndexVector>(d.data(), n));
  IndexVector tv = Eigen::Map<const IndexVector>(t.data(), n);
  Vector yv = Eigen::Map<const Vector>(y.data(), n);

  out.data = Dataset::with_intercept(xm, std::move(tv), std::move(yv), x_names, std::move(wm),
                                     std::move(dv), w_names);
  return out;
}

CsvLoad load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "' for reading");
  return read_csv(in);
}

void write_csv(std::ostream& out, const Dataset& data) {
  out << "y,t";
  if (data.d) out << ",d";
  for (std::size_t j = 1; j < data.x_names.size(); ++j) out << ",x_" << data.x_names[j];
  if (data.w) {
    for (const auto& name : data.w_names) out << ",w_" << name;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_number(data.y[i]) << ',' << data.t[i];
    if (data.d) out << ',' << (*data.d)[i];
    for (Eigen::Index j = 1; j < data.k(); ++j) out << ',' << format_number(data.x(i, j));
    if (data.w) {
      for (Eigen::Index j = 0; j < data.w->cols(); ++j) out << ',' << format_number((*data.w)(i, j));
    }
    out << '\n';
  }
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
  write_csv(out, data);
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

}  // namespace hetfx
