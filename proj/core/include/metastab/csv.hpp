#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace metastab {

/// Numeric table with named columns, written with 17 significant digits so
/// values round-trip exactly.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(const std::string& name) const;  // throws if absent
    std::vector<double> column(const std::string& name) const;
    void require_columns(const std::vector<std::string>& names) const;
};

std::string format_double(double v);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace metastab
