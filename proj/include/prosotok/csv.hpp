// Copyright 2026 The prosotok Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROSOTOK_CSV_HPP
#define PROSOTOK_CSV_HPP

#include <boost/tokenizer.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "prosotok/error.hpp"

namespace prosotok {

/// A header-keyed CSV table. Quoted fields follow the usual escaped-list
/// rules; blank lines are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw InputError("CSV lacks column '" + std::string(name) + "'");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  using Tok = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::vector<std::string> out;
  try {
    Tok tok(line, boost::escaped_list_separator<char>('\\', ',', '"'));
    for (const auto& field : tok) out.push_back(field);
  } catch (const boost::escaped_list_error& e) {
    throw InputError(std::string("malformed CSV line: ") + e.what());
  }
  return out;
}

inline CsvTable parse_csv(std::istream& in, const std::string& source = "CSV") {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw InputError(source + " line " + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw InputError(source + " is empty");
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return parse_csv(in, path.string());
}

}  // namespace prosotok

#endif  // PROSOTOK_CSV_HPP
