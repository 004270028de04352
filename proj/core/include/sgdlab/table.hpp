#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace sgdlab {

/// Column-stable result table written as `<stem>.csv` and `<stem>.json`
/// (an array of row objects with the same keys as the CSV header).
class Table {
 public:
  using Cell = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

  explicit Table(std::vector<std::string> columns);

  void add_row(std::vector<Cell> row);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
  const Cell& at(std::size_t row, const std::string& column) const;

  std::string to_csv() const;
  nlohmann::ordered_json to_json() const;

  /// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`, creating `dir`.
  void write(const std::filesystem::path& dir, const std::string& stem) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double value);

}  // namespace sgdlab
