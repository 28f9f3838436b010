# Copyright 2026 The Cloudadapt Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Per-device vs pooled logistic classifiers on exported corpora.

Usage: corpus_oracle.py CLOUDADAPT_BINARY OUTPUT_CSV

For each shift strength the corpus is exported as frame-mean raw features,
one multinomial logistic model is fitted on the pooled history and one per
device, and both are scored on the realtime streams. The gap is the
per-device accuracy minus the pooled accuracy, in points.
"""

import csv
import subprocess
import sys
import tempfile
import zlib
from pathlib import Path

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

SEED = 1
SHIFTS = (0.0, 1.0, 2.0, 3.0)


def export(binary, shift, directory):
    csv_path = Path(directory) / f"shift{shift:g}.csv"
    bin_path = Path(directory) / f"shift{shift:g}.bin"
    common = ["--seed", str(SEED), "--set", f"corpus.shift_strength={shift:g}"]
    subprocess.run([binary, "gen-corpus", *common, "--format", "csv",
                    "--out", str(csv_path)], check=True, capture_output=True)
    subprocess.run([binary, "gen-corpus", *common, "--out", str(bin_path)],
                   check=True, capture_output=True)
    # The trailing four bytes are the file's own CRC of everything before.
    crc = zlib.crc32(bin_path.read_bytes()[:-4]) & 0xFFFFFFFF
    return np.genfromtxt(csv_path, delimiter=",", names=True, dtype=None,
                         encoding="utf-8"), crc


def fit_score(x_train, y_train, x_test, y_test):
    model = make_pipeline(StandardScaler(),
                          LogisticRegression(max_iter=2000, C=1.0))
    model.fit(x_train, y_train)
    return float((model.predict(x_test) == y_test).mean())


def main():
    binary, output = sys.argv[1], sys.argv[2]
    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        for shift in SHIFTS:
            data, crc = export(binary, shift, tmp)
            features = np.stack([data[n] for n in data.dtype.names
                                 if n.startswith("x")], axis=1)
            labels = data["label"]
            device = data["device"]
            history = data["split"] == "history"
            realtime = ~history
            pooled = fit_score(features[history], labels[history],
                               features[realtime], labels[realtime])
            correct = 0
            for d in np.unique(device):
                train = history & (device == d)
                test = realtime & (device == d)
                correct += fit_score(features[train], labels[train],
                                     features[test], labels[test]) * test.sum()
            per_device = correct / realtime.sum()
            rows.append({
                "seed": SEED,
                "shift_strength": f"{shift:g}",
                "corpus_crc32": f"{crc:08x}",
                "pooled_accuracy": f"{pooled:.4f}",
                "per_device_accuracy": f"{per_device:.4f}",
                "gap_points": f"{100 * (per_device - pooled):.2f}",
            })
    with open(output, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    for r in rows:
        print(r)


if __name__ == "__main__":
    main()
