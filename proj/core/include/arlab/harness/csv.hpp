#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace arlab::harness {

// Comma-separated rows under a fixed header. Doubles are written in shortest
// round-trip form, so identical values give identical bytes.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  template <class... Ts>
  void row(const Ts&... values) {
    if (sizeof...(Ts) != columns_) throw std::invalid_argument("CSV row has the wrong arity");
    std::string line;
    bool first = true;
    ((line += (first ? "" : ","), line += fmt::format("{}", values), first = false), ...);
    out_ << line << '\n';
  }

  void close();

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::filesystem::path path_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws if absent
  double number(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace arlab::harness
