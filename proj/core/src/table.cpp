#include "sgdlab/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace sgdlab {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

Table::Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) {
    throw std::invalid_argument("table: row width does not match header");
  }
  rows_.push_back(std::move(row));
}

const Table::Cell& Table::at(std::size_t row, const std::string& column) const {
  const auto it = std::find(columns_.begin(), columns_.end(), column);
  if (it == columns_.end()) throw std::out_of_range("table: no column " + column);
  return rows_.at(row)[static_cast<std::size_t>(it - columns_.begin())];
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_cell(const Table::Cell& cell) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(const std::string& s) const { return csv_escape(s); }
  };
  return std::visit(Visitor{}, cell);
}

nlohmann::ordered_json json_cell(const Table::Cell& cell) {
  struct Visitor {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(bool b) const { return b; }
    nlohmann::ordered_json operator()(std::int64_t i) const { return i; }
    nlohmann::ordered_json operator()(double d) const {
      if (std::isfinite(d)) return d;
      return format_double(d);
    }
    nlohmann::ordered_json operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, cell);
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) out += ',';
    out += csv_escape(columns_[c]);
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += csv_cell(row[c]);
    }
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json Table::to_json() const {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& row : rows_) {
    nlohmann::ordered_json entry = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) entry[columns_[c]] = json_cell(row[c]);
    out.push_back(std::move(entry));
  }
  return out;
}

void Table::write(const std::filesystem::path& dir, const std::string& stem) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (dir / (stem + ".csv")).string());
    csv << to_csv();
  }
  std::ofstream json(dir / (stem + ".json"), std::ios::binary);
  if (!json) throw std::runtime_error("cannot write " + (dir / (stem + ".json")).string());
  json << to_json().dump(2) << '\n';
}

}  // namespace sgdlab
