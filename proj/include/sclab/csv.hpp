#pragma once

#include <string>
#include <vector>

#include "sclab/errors.hpp"

namespace sclab {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return int(i);
    }
    throw ParseError("CsvTable: missing column '" + name + "'");
  }

  bool has_column(const std::string& name) const {
    for (const auto& h : header) {
      if (h == name) return true;
    }
    return false;
  }
};

std::string fmt_g(double v);  // shortest round-trip-ish %.9g

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace sclab
