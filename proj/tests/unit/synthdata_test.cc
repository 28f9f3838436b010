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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cloudadapt/common/bytes.h"
#include "cloudadapt/common/error.h"
#include "cloudadapt/synthdata/corpus.h"

namespace cloudadapt::synthdata {
namespace {

CorpusOptions Small(double shift = 3.0, std::uint64_t seed = 1) {
  CorpusOptions o;
  o.history_per_device = 10;
  o.realtime_per_device = 5;
  o.shift_strength = shift;
  o.seed = seed;
  return o;
}

// Mean over frames of one coordinate, the per-clip summary used below.
double FrameMean(const LabeledSample& s, std::size_t j) {
  double m = 0.0;
  for (std::size_t f = 0; f < s.video.num_frames; ++f) m += s.video.frame(f)[j];
  return m / s.video.num_frames;
}

// Largest |z| over all device pairs and coordinates for a difference of
// per-clip frame means.
double MaxPairwiseZ(const Corpus& corpus) {
  double worst = 0.0;
  const std::size_t dim = corpus.options.raw_dim;
  for (std::size_t a = 0; a < corpus.devices.size(); ++a) {
    for (std::size_t b = a + 1; b < corpus.devices.size(); ++b) {
      for (std::size_t j = 0; j < dim; ++j) {
        auto stats = [&](const DeviceCorpus& d) {
          double s = 0.0, ss = 0.0;
          for (const LabeledSample& x : d.history) {
            const double v = FrameMean(x, j);
            s += v;
            ss += v * v;
          }
          const double n = static_cast<double>(d.history.size());
          const double mean = s / n;
          return std::pair{mean, (ss / n - mean * mean) / n};
        };
        auto [ma, va] = stats(corpus.devices[a]);
        auto [mb, vb] = stats(corpus.devices[b]);
        worst = std::max(worst, std::abs(ma - mb) / std::sqrt(va + vb));
      }
    }
  }
  return worst;
}

TEST(CorpusTest, SameSeedIsBitIdentical) {
  EXPECT_EQ(SerializeCorpus(MakeCorpus(Small())), SerializeCorpus(MakeCorpus(Small())));
}

TEST(CorpusTest, DifferentSeedsDiffer) {
  EXPECT_NE(SerializeCorpus(MakeCorpus(Small(3.0, 1))),
            SerializeCorpus(MakeCorpus(Small(3.0, 2))));
}

TEST(CorpusTest, CountsAndShapes) {
  Corpus c = MakeCorpus(Small());
  ASSERT_EQ(c.devices.size(), 3u);
  for (std::size_t d = 0; d < 3; ++d) {
    const DeviceCorpus& dc = c.devices[d];
    EXPECT_EQ(dc.device_id, d);
    EXPECT_EQ(dc.history.size(), 10u);
    EXPECT_EQ(dc.realtime.size(), 5u);
    for (const auto* split : {&dc.history, &dc.realtime}) {
      for (const LabeledSample& s : *split) {
        EXPECT_EQ(s.device(), d);
        EXPECT_EQ(s.video.frames.size(), 8u * 32u);
        EXPECT_LT(s.label, 10u);
        EXPECT_FALSE(s.query.tokens.empty());
        EXPECT_LE(s.query.tokens.size(), 8u);
        for (std::uint32_t t : s.query.tokens) EXPECT_LT(t, 64u);
        for (float f : s.video.frames) EXPECT_TRUE(std::isfinite(f));
      }
    }
  }
}

TEST(CorpusTest, LabelsBalancedPerDevice) {
  Corpus c = MakeCorpus(CorpusOptions{});
  for (const DeviceCorpus& dc : c.devices) {
    std::vector<int> counts(10, 0);
    for (const LabeledSample& s : dc.history) ++counts[s.label];
    for (const LabeledSample& s : dc.realtime) ++counts[s.label];
    const double uniform = 2500.0 / 10.0;
    for (int n : counts) {
      EXPECT_GE(n, 0.8 * uniform);
      EXPECT_LE(n, 1.2 * uniform);
    }
  }
}

TEST(CorpusTest, RejectsInvalidOptions) {
  CorpusOptions o = Small();
  o.num_devices = 0;
  try {
    MakeCorpus(o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
  o = Small();
  o.shift_strength = -1.0;
  EXPECT_THROW(MakeCorpus(o), Error);
  o = Small();
  o.history_per_device = 0;
  EXPECT_THROW(MakeCorpus(o), Error);
}

TEST(CorpusTest, NoShiftLeavesDevicesIdenticallyDistributed) {
  CorpusOptions o;
  o.shift_strength = 0.0;
  // Bonferroni over 3 pairs x 32 coordinates at alpha 0.01, two-sided.
  EXPECT_LT(MaxPairwiseZ(MakeCorpus(o)), 3.88);
}

TEST(CorpusTest, ShiftSeparatesDevices) {
  CorpusOptions o;
  o.shift_strength = 3.0;
  EXPECT_GT(MaxPairwiseZ(MakeCorpus(o)), 10.0);
}

TEST(SplitTest, PoolsHistoryAndKeepsStreams) {
  Corpus c = MakeCorpus(Small());
  SplitCorpus split = SplitHistoryRealtime(c);
  EXPECT_EQ(split.history.size(), 30u);
  ASSERT_EQ(split.realtime.size(), 3u);
  for (std::size_t d = 0; d < 3; ++d) {
    EXPECT_EQ(split.realtime[d].size(), 5u);
    for (std::size_t i = 0; i < 10; ++i) {
      EXPECT_EQ(split.history[d * 10 + i].device(), d);
    }
  }
}

TEST(SplitTest, HistoryAndRealtimeAreDisjoint) {
  Corpus c = MakeCorpus(CorpusOptions{});
  for (const DeviceCorpus& dc : c.devices) {
    std::set<std::uint32_t> clips;
    std::set<std::vector<float>> frames;
    for (const LabeledSample& s : dc.history) {
      clips.insert(s.video.clip_id);
      frames.insert(s.video.frames);
    }
    for (const LabeledSample& s : dc.realtime) {
      EXPECT_FALSE(clips.contains(s.video.clip_id));
      EXPECT_FALSE(frames.contains(s.video.frames));
    }
  }
}

TEST(SplitTest, StreamOrderStableAcrossRuns) {
  SplitCorpus a = SplitHistoryRealtime(MakeCorpus(Small()));
  SplitCorpus b = SplitHistoryRealtime(MakeCorpus(Small()));
  for (std::size_t d = 0; d < 3; ++d) {
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(a.realtime[d][i].video.clip_id, b.realtime[d][i].video.clip_id);
      EXPECT_EQ(a.realtime[d][i].video.frames, b.realtime[d][i].video.frames);
    }
  }
}

TEST(SplitTest, EmptyCorpusIsContractError) {
  EXPECT_THROW(SplitHistoryRealtime(Corpus{}), Error);
}

TEST(SerializationTest, RoundTrip) {
  Corpus c = MakeCorpus(Small());
  Bytes bytes = SerializeCorpus(c);
  ASSERT_GE(bytes.size(), 4u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CDCD");
  Corpus back = DeserializeCorpus(bytes);
  EXPECT_EQ(SerializeCorpus(back), bytes);
  EXPECT_EQ(back.devices[1].realtime[2].video.frames,
            c.devices[1].realtime[2].video.frames);
}

TEST(SerializationTest, FileRoundTrip) {
  Corpus c = MakeCorpus(Small());
  const auto path = std::filesystem::temp_directory_path() /
                    ("corpus_test_" + std::to_string(::testing::UnitTest::GetInstance()
                                                          ->random_seed()) +
                     ".bin");
  WriteCorpus(c, path);
  EXPECT_EQ(SerializeCorpus(ReadCorpus(path)), SerializeCorpus(c));
  std::filesystem::remove(path);
}

TEST(SerializationTest, CorruptionIsFormatError) {
  Bytes bytes = SerializeCorpus(MakeCorpus(Small()));
  for (std::size_t pos : {std::size_t{0}, std::size_t{5}, bytes.size() / 2,
                          bytes.size() - 1}) {
    Bytes bad = bytes;
    bad[pos] ^= 0x40;
    try {
      DeserializeCorpus(bad);
      FAIL() << pos;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kFormat) << pos;
    }
  }
  Bytes truncated(bytes.begin(), bytes.end() - 9);
  EXPECT_THROW(DeserializeCorpus(truncated), Error);
}

TEST(SerializationTest, MissingFileIsIoError) {
  try {
    ReadCorpus("/nonexistent/dir/corpus.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

struct OracleRow {
  std::uint64_t seed;
  double shift;
  std::uint32_t crc;
  double gap_points;
};

std::vector<OracleRow> LoadOracle() {
  std::ifstream in(std::string(CLOUDADAPT_TEST_FIXTURES) + "/corpus_oracle.csv");
  EXPECT_TRUE(in.good());
  std::vector<OracleRow> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) continue;
    rows.push_back({std::stoull(cells[0]), std::stod(cells[1]),
                    static_cast<std::uint32_t>(std::stoul(cells[2], nullptr, 16)),
                    std::stod(cells[5])});
  }
  return rows;
}

// The fixture was produced by an external logistic-regression oracle on
// corpora exported from this generator; the checksum pins that the
// generator still emits the same data.
TEST(OracleFixtureTest, CorpusMatchesFixtureChecksums) {
  std::vector<OracleRow> rows = LoadOracle();
  ASSERT_EQ(rows.size(), 4u);
  for (const OracleRow& row : rows) {
    CorpusOptions o;
    o.seed = row.seed;
    o.shift_strength = row.shift;
    Bytes bytes = SerializeCorpus(MakeCorpus(o));
    const std::uint32_t crc =
        Crc32(std::span<const std::uint8_t>(bytes).first(bytes.size() - 4));
    EXPECT_EQ(crc, row.crc) << "shift " << row.shift;
  }
}

TEST(OracleFixtureTest, GapIsLargeAndMonotone) {
  std::vector<OracleRow> rows = LoadOracle();
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].gap_points, rows[i - 1].gap_points);
  }
  EXPECT_GE(rows.back().gap_points, 10.0);
  EXPECT_LT(rows.front().gap_points, 2.0);
}

}  // namespace
}  // namespace cloudadapt::synthdata
