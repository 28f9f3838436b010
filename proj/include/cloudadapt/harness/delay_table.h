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

// Up / down transfer delays for a set of payloads over a set of networks,
// optionally checked against reference values printed to limited precision.

#ifndef CLOUDADAPT_HARNESS_DELAY_TABLE_H_
#define CLOUDADAPT_HARNESS_DELAY_TABLE_H_

#include <string>
#include <vector>

#include "cloudadapt/protocol/delay.h"

namespace cloudadapt::harness {

// A value as printed, e.g. "37.0": the digits fix the precision.
struct PrintedValue {
  std::string text;

  double value() const;
  int decimals() const;
  // True when x rounds to the printed value at the printed precision.
  bool Matches(double x) const;
};

struct ReferenceCell {
  PrintedValue up_ms;
  PrintedValue down_ms;
};

struct PayloadRow {
  std::string name;
  double up_kilobytes = 0.0;
  double down_kilobytes = 0.0;
  // One per scenario, same order; empty when there is nothing to compare.
  std::vector<ReferenceCell> reference;
};

struct DelayCell {
  double up_ms = 0.0;
  double down_ms = 0.0;
  bool has_reference = false;
  bool up_matches = true;
  bool down_matches = true;
};

struct DelayTable {
  std::vector<protocol::NetworkScenario> scenarios;
  std::vector<PayloadRow> rows;
  std::vector<std::vector<DelayCell>> cells;  // [row][scenario]

  std::size_t CheckedValues() const;
  std::size_t Mismatches() const;
};

// Three video-QA workloads: 0.75 KB uploads and their published download
// sizes, with the published delays for the default scenarios.
std::vector<PayloadRow> ReferencePayloads();

DelayTable ComputeDelayTable(const std::vector<protocol::NetworkScenario>& scenarios,
                             const std::vector<PayloadRow>& rows);

// Aligned text grid; cells deviating from their reference are marked "!".
std::string FormatDelayTable(const DelayTable& table);
std::string DelayTableCsv(const DelayTable& table);

}  // namespace cloudadapt::harness

#endif  // CLOUDADAPT_HARNESS_DELAY_TABLE_H_
