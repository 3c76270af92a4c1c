#include "dsopt/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dsopt {

namespace {

bool is_missing_token(const std::string& s) {
  if (s.empty()) return true;
  std::string lower;
  for (char c : s) lower.push_back(char(std::tolower(static_cast<unsigned char>(c))));
  return lower == "na" || lower == "nan" || lower == "null" || lower == "none";
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Days since the epoch for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097LL + static_cast<std::int64_t>(doe) - 719468LL;
}

bool split_date(const std::string& s, char sep, int fields[3]) {
  std::stringstream ss(s);
  std::string part;
  int i = 0;
  while (std::getline(ss, part, sep)) {
    if (i >= 3) return false;
    part = trim(part);
    if (part.empty() ||
        !std::all_of(part.begin(), part.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      return false;
    }
    fields[i++] = std::atoi(part.c_str());
  }
  return i == 3;
}

}  // namespace

std::int64_t parse_date(const std::string& text) {
  const std::string s = trim(text);
  int f[3];
  if (split_date(s, '-', f)) {
    // YYYY-MM-DD when the first field is a year, else DD-MM-YYYY.
    if (f[0] > 31) return days_from_civil(f[0], unsigned(f[1]), unsigned(f[2]));
    return days_from_civil(f[2], unsigned(f[1]), unsigned(f[0]));
  }
  if (split_date(s, '/', f)) {
    if (f[0] > 31) return days_from_civil(f[0], unsigned(f[1]), unsigned(f[2]));
    return days_from_civil(f[2], unsigned(f[1]), unsigned(f[0]));
  }
  throw DataError("unparseable date '" + text + "'");
}

std::size_t CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("csv: no column named '" + name + "'");
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable table;
  std::vector<std::string> field_buf;
  std::string cell;
  bool in_quotes = false;
  bool any_char = false;

  auto end_field = [&]() {
    field_buf.push_back(trim(cell));
    cell.clear();
  };
  auto end_row = [&]() {
    end_field();
    if (table.header.empty()) {
      table.header = field_buf;
    } else {
      if (field_buf.size() != table.header.size()) {
        throw DataError(origin + ": row " + std::to_string(table.rows.size() + 1) +
                        " has " + std::to_string(field_buf.size()) + " fields, expected " +
                        std::to_string(table.header.size()));
      }
      table.rows.push_back(field_buf);
    }
    field_buf.clear();
    any_char = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    // Comment lines (leading '#') are skipped; our own artifacts carry the
    // config hash that way.
    if (!in_quotes && !any_char && cell.empty() && field_buf.empty() && c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
      any_char = true;
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        any_char = true;
        break;
      case ',':
        end_field();
        any_char = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any_char || !cell.empty() || !field_buf.empty()) end_row();
        break;
      default:
        cell.push_back(c);
        any_char = true;
        break;
    }
  }
  if (any_char || !cell.empty() || !field_buf.empty()) end_row();
  if (table.header.empty()) throw DataError(origin + ": empty file");
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("csv: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

std::vector<ColumnRole> sales_roles() {
  return {{"date", ColumnKind::date, false},
          {"product-id", ColumnKind::categorical, false},
          {"quantity", ColumnKind::continuous, true},
          {"value", ColumnKind::continuous, true}};
}

std::vector<ColumnRole> supply_roles() {
  return {{"date", ColumnKind::date, false},
          {"product-type", ColumnKind::categorical, false},
          {"sku", ColumnKind::categorical, false},
          {"shipping-carrier", ColumnKind::categorical, false},
          {"supplier-name", ColumnKind::categorical, false},
          {"stock-level", ColumnKind::continuous, false},
          {"lead-time", ColumnKind::continuous, false},
          {"lead-time-max", ColumnKind::continuous, false},
          {"reliability", ColumnKind::continuous, false},
          {"reliability-min", ColumnKind::continuous, false},
          {"defect-rate", ColumnKind::continuous, false},
          {"production-volume", ColumnKind::continuous, false},
          {"unit-cost-production", ColumnKind::continuous, false},
          {"unit-cost-holding", ColumnKind::continuous, false},
          {"unit-cost-transport-0", ColumnKind::continuous, false},
          {"unit-cost-transport-1", ColumnKind::continuous, false},
          {"unit-cost-transport-2", ColumnKind::continuous, false},
          {"unit-cost-shortage", ColumnKind::continuous, false}};
}

RawTable ingest_csv_text(const std::string& text,
                         const std::map<std::string, std::string>& schema,
                         const std::vector<ColumnRole>& roles,
                         const std::string& origin) {
  CsvTable csv = parse_csv(text, origin);
  if (csv.rows.empty()) throw DataError(origin + ": no data rows");

  struct Bound {
    ColumnRole role;
    std::size_t csv_col;
  };
  std::vector<Bound> bound;
  for (const auto& [role_name, header] : schema) {
    const ColumnRole* role = nullptr;
    for (const auto& r : roles) {
      if (r.role == role_name) role = &r;
    }
    if (role == nullptr) {
      throw DataError(origin + ": schema maps unknown role '" + role_name + "'");
    }
    std::size_t col;
    try {
      col = csv.column_index(header);
    } catch (const DataError&) {
      throw DataError(origin + ": role '" + role_name + "' maps to missing column '" +
                      header + "'");
    }
    bound.push_back({*role, col});
  }
  if (bound.empty()) throw DataError(origin + ": schema maps no roles");

  RawTable table;
  for (const auto& b : bound) {
    Column c;
    c.name = b.role.role;
    c.kind = b.role.kind;
    table.columns.push_back(std::move(c));
  }

  const std::size_t n = csv.rows.size();
  for (std::size_t ci = 0; ci < bound.size(); ++ci) {
    Column& col = table.columns[ci];
    col.missing.assign(n, false);
    if (col.kind == ColumnKind::categorical) {
      col.labels.resize(n);
    } else {
      col.reals.resize(n);
    }
    for (std::size_t r = 0; r < n; ++r) {
      const std::string& cell = csv.rows[r][bound[ci].csv_col];
      if (is_missing_token(cell)) {
        col.missing[r] = true;
        continue;
      }
      switch (col.kind) {
        case ColumnKind::categorical:
          col.labels[r] = cell;
          break;
        case ColumnKind::date:
          try {
            col.reals[r] = double(parse_date(cell));
          } catch (const DataError&) {
            throw DataError(origin + ": unparseable date '" + cell + "' at row " +
                            std::to_string(r + 1) + " column '" + col.name + "'");
          }
          break;
        case ColumnKind::continuous: {
          char* end = nullptr;
          const double v = std::strtod(cell.c_str(), &end);
          if (end == cell.c_str() || *end != '\0') {
            throw DataError(origin + ": unparseable value '" + cell + "' at row " +
                            std::to_string(r + 1) + " column '" + col.name + "'");
          }
          col.reals[r] = v;
          break;
        }
      }
    }
  }

  // Chronological order, then duplicate-date aggregation.
  const Column* date_col = nullptr;
  std::size_t date_idx = 0;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (table.columns[i].kind == ColumnKind::date) {
      date_col = &table.columns[i];
      date_idx = i;
      break;
    }
  }
  if (date_col == nullptr) return table;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool ma = date_col->missing[a], mb = date_col->missing[b];
    if (ma != mb) return mb;  // missing dates sink to the end
    if (ma && mb) return false;
    return date_col->reals[a] < date_col->reals[b];
  });

  RawTable sorted;
  sorted.columns = table.columns;
  for (auto& c : sorted.columns) {
    if (c.kind == ColumnKind::categorical) {
      c.labels.clear();
    } else {
      c.reals.clear();
    }
    c.missing.clear();
  }

  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    const std::size_t ri = order[i];
    if (!date_col->missing[ri]) {
      while (j < n && !date_col->missing[order[j]] &&
             date_col->reals[order[j]] == date_col->reals[ri]) {
        ++j;
      }
    }
    // Aggregate rows [i, j): sum for flagged roles, mean otherwise, first
    // non-missing for labels and dates.
    for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
      const Column& src = table.columns[ci];
      Column& dst = sorted.columns[ci];
      if (src.kind == ColumnKind::categorical) {
        std::string label;
        bool found = false;
        for (std::size_t k = i; k < j && !found; ++k) {
          if (!src.missing[order[k]]) {
            label = src.labels[order[k]];
            found = true;
          }
        }
        dst.labels.push_back(label);
        dst.missing.push_back(!found);
      } else if (ci == date_idx) {
        dst.reals.push_back(src.reals[ri]);
        dst.missing.push_back(src.missing[ri]);
      } else {
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t k = i; k < j; ++k) {
          if (src.missing[order[k]]) continue;
          acc += src.reals[order[k]];
          ++count;
        }
        if (count == 0) {
          dst.reals.push_back(0.0);
          dst.missing.push_back(true);
        } else {
          const bool sum = bound[ci].role.sum_on_aggregate;
          dst.reals.push_back(sum ? acc : acc / double(count));
          dst.missing.push_back(false);
        }
      }
    }
    i = j;
  }
  return sorted;
}

RawTable ingest_csv(const std::string& path,
                    const std::map<std::string, std::string>& schema,
                    const std::vector<ColumnRole>& roles) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("ingest_csv: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_csv_text(buf.str(), schema, roles, path);
}

}  // namespace dsopt
