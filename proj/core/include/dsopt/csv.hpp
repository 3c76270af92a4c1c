#pragma once

// CSV ingestion with a role-based schema map. The schema assigns each
// internal column role to a CSV header; cells are typed by role, dates are
// parsed, rows are sorted chronologically, and duplicate timestamps are
// aggregated (quantities summed, other continuous roles averaged).

#include <map>
#include <string>
#include <vector>

#include "dsopt/preprocess.hpp"

namespace dsopt {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const;  // throws DataError
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<string>");

// Days since 1970-01-01 for ISO YYYY-MM-DD, DD-MM-YYYY or DD/MM/YYYY.
std::int64_t parse_date(const std::string& text);

struct ColumnRole {
  std::string role;   // internal name, becomes the RawTable column name
  ColumnKind kind = ColumnKind::continuous;
  bool sum_on_aggregate = false;  // duplicates summed instead of averaged
};

// Every role in `schema` must resolve to an existing header. Missing cells
// become missing markers; unparseable numeric or date cells report their
// row and column.
RawTable ingest_csv(const std::string& path,
                    const std::map<std::string, std::string>& schema,
                    const std::vector<ColumnRole>& roles);
RawTable ingest_csv_text(const std::string& text,
                         const std::map<std::string, std::string>& schema,
                         const std::vector<ColumnRole>& roles,
                         const std::string& origin = "<string>");

// Standard role sets for the two input tables.
std::vector<ColumnRole> sales_roles();   // date, product-id, quantity, value
std::vector<ColumnRole> supply_roles();  // the twelve state features + ids

}  // namespace dsopt
