#include "clonesim/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "clonesim/errors.hpp"

namespace clonesim {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line, const char* column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument("dataset line " + std::to_string(line) + ": bad " + column + " '" + text + "'");
  }
  return value;
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

fit::DataSet read_dataset(std::istream& in) {
  static const std::vector<std::string> required{"experiment", "arm", "kind", "time_h", "value"};
  static const std::vector<std::string> known{"experiment", "arm", "kind", "time_h", "division", "value", "weight"};

  fit::DataSet data;
  std::map<std::string, std::size_t> column;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = split(t);
    if (!have_header) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (std::find(known.begin(), known.end(), cells[i]) == known.end()) {
          throw InvalidArgument("dataset header: unknown column '" + cells[i] + "'");
        }
        if (!column.emplace(cells[i], i).second) {
          throw InvalidArgument("dataset header: duplicate column '" + cells[i] + "'");
        }
      }
      for (const auto& r : required) {
        if (!column.contains(r)) throw InvalidArgument("dataset header: missing column '" + r + "'");
      }
      have_header = true;
      continue;
    }
    if (cells.size() != column.size()) {
      throw InvalidArgument("dataset line " + std::to_string(lineno) + ": expected " +
                            std::to_string(column.size()) + " fields");
    }
    auto cell = [&](const char* name) -> const std::string& { return cells[column.at(name)]; };
    fit::Record r;
    r.experiment = parse_number<int>(cell("experiment"), lineno, "experiment");
    r.arm = cell("arm");
    try {
      r.kind = fit::parse_kind(cell("kind"));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
    r.time = parse_number<double>(cell("time_h"), lineno, "time_h");
    if (column.contains("division")) r.division = parse_number<int>(cell("division"), lineno, "division");
    r.value = parse_number<double>(cell("value"), lineno, "value");
    if (column.contains("weight")) r.weight = parse_number<double>(cell("weight"), lineno, "weight");
    data.records.push_back(std::move(r));
  }
  if (!have_header) throw InvalidArgument("dataset is empty (no header row)");
  return data;
}

fit::DataSet read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const fit::DataSet& data) {
  out << "experiment,arm,kind,time_h,division,value,weight\n";
  for (const auto& r : data.records) {
    out << r.experiment << ',' << r.arm << ',' << fit::to_string(r.kind) << ',' << format_number(r.time) << ','
        << r.division << ',' << format_number(r.value) << ',' << format_number(r.weight) << '\n';
  }
}

void write_dataset_file(const std::string& path, const fit::DataSet& data) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write dataset '" + path + "'");
  write_dataset(out, data);
}

}  // namespace clonesim
