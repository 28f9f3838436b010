// Copyright 2026 The Cloudadapt Authors.
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

#include "cloudadapt/harness/delay_table.h"

#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "cloudadapt/common/error.h"

namespace cloudadapt::harness {

double PrintedValue::value() const {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  Require(!text.empty() && end == text.c_str() + text.size(), ErrorKind::kInput,
          "'{}' is not a number", text);
  return v;
}

int PrintedValue::decimals() const {
  const auto dot = text.find('.');
  return dot == std::string::npos ? 0 : static_cast<int>(text.size() - dot - 1);
}

bool PrintedValue::Matches(double x) const {
  const double half_ulp = 0.5 * std::pow(10.0, -decimals());
  return std::abs(x - value()) <= half_ulp * (1.0 + 1e-9);
}

std::size_t DelayTable::CheckedValues() const {
  std::size_t n = 0;
  for (const auto& row : cells) {
    for (const DelayCell& c : row) n += c.has_reference ? 2 : 0;
  }
  return n;
}

std::size_t DelayTable::Mismatches() const {
  std::size_t n = 0;
  for (const auto& row : cells) {
    for (const DelayCell& c : row) n += (c.up_matches ? 0 : 1) + (c.down_matches ? 0 : 1);
  }
  return n;
}

std::vector<PayloadRow> ReferencePayloads() {
  auto row = [](std::string name, double down_kb,
                std::vector<std::pair<const char*, const char*>> printed) {
    PayloadRow r{std::move(name), 0.75, down_kb, {}};
    for (auto [up, down] : printed) r.reference.push_back({{up}, {down}});
    return r;
  };
  return {
      row("MSRVTT", 568.5,
          {{"0.15", "111"}, {"0.05", "37.0"}, {"0.01", "11.1"}, {"0.007", "5.55"}}),
      row("MSVD", 379.4,
          {{"0.15", "74"}, {"0.05", "24.7"}, {"0.01", "7.41"}, {"0.007", "3.71"}}),
      row("TGIF", 583.8,
          {{"0.15", "114"}, {"0.05", "38.0"}, {"0.01", "11.4"}, {"0.007", "5.70"}}),
  };
}

DelayTable ComputeDelayTable(const std::vector<protocol::NetworkScenario>& scenarios,
                             const std::vector<PayloadRow>& rows) {
  DelayTable table{scenarios, rows, {}};
  for (const PayloadRow& r : rows) {
    Require(r.reference.empty() || r.reference.size() == scenarios.size(),
            ErrorKind::kInput, "row '{}' has {} reference cells for {} scenarios", r.name,
            r.reference.size(), scenarios.size());
    std::vector<DelayCell>& out = table.cells.emplace_back();
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      DelayCell c;
      c.up_ms = protocol::TransferDelayMs(r.up_kilobytes * protocol::kBytesPerKilobyte,
                                          scenarios[s]);
      c.down_ms = protocol::TransferDelayMs(
          r.down_kilobytes * protocol::kBytesPerKilobyte, scenarios[s]);
      if (!r.reference.empty()) {
        c.has_reference = true;
        c.up_matches = r.reference[s].up_ms.Matches(c.up_ms);
        c.down_matches = r.reference[s].down_ms.Matches(c.down_ms);
      }
      out.push_back(c);
    }
  }
  return table;
}

namespace {

// Printed at the reference precision when there is one.
std::string Cell(double ms, const PrintedValue* reference, bool matches) {
  std::string s = reference != nullptr ? fmt::format("{:.{}f}", ms, reference->decimals())
                                       : fmt::format("{:.4g}", ms);
  s += "ms";
  if (!matches) s += fmt::format("!({})", reference->text);
  return s;
}

}  // namespace

std::string FormatDelayTable(const DelayTable& table) {
  std::string out = fmt::format("{:<10}{:<22}", "dataset", "size");
  for (const auto& s : table.scenarios) out += fmt::format("{:<22}", s.name);
  out += "\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const PayloadRow& row = table.rows[r];
    std::string up = fmt::format("{:<10}{:<22}", row.name,
                                 fmt::format("up:{}KB", row.up_kilobytes));
    std::string down = fmt::format("{:<10}{:<22}", "",
                                   fmt::format("down:{}KB", row.down_kilobytes));
    for (std::size_t s = 0; s < table.scenarios.size(); ++s) {
      const DelayCell& c = table.cells[r][s];
      const ReferenceCell* ref = c.has_reference ? &row.reference[s] : nullptr;
      up += fmt::format("{:<22}", "up:" + Cell(c.up_ms, ref ? &ref->up_ms : nullptr,
                                               c.up_matches));
      down += fmt::format("{:<22}", "down:" + Cell(c.down_ms,
                                                   ref ? &ref->down_ms : nullptr,
                                                   c.down_matches));
    }
    out += up + "\n" + down + "\n";
  }
  if (table.CheckedValues() > 0) {
    out += fmt::format("{} of {} reference values reproduced\n",
                       table.CheckedValues() - table.Mismatches(), table.CheckedValues());
  }
  return out;
}

std::string DelayTableCsv(const DelayTable& table) {
  std::string out =
      "dataset,scenario,up_kb,down_kb,up_ms,down_ms,reference_up_ms,reference_down_ms,"
      "matches\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const PayloadRow& row = table.rows[r];
    for (std::size_t s = 0; s < table.scenarios.size(); ++s) {
      const DelayCell& c = table.cells[r][s];
      out += fmt::format("{},{},{},{},{:.6f},{:.6f},{},{},{}\n", row.name,
                         table.scenarios[s].name, row.up_kilobytes, row.down_kilobytes,
                         c.up_ms, c.down_ms,
                         c.has_reference ? row.reference[s].up_ms.text : "",
                         c.has_reference ? row.reference[s].down_ms.text : "",
                         !c.has_reference ? "" : (c.up_matches && c.down_matches ? "yes" : "no"));
    }
  }
  return out;
}

}  // namespace cloudadapt::harness
