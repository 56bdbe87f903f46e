#!/usr/bin/env python3
#
# Copyright 2026 The FLoRA Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes heart-statlog.csv and sonar.csv from the KEEL copies shipped in
the keel-ds wheel. Usage: fetch_datasets.py [out_dir]"""

import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

WHEEL = "keel-ds==0.2.5"
RAW = "keel_ds/data/balanced/raw/"

HEART_COLUMNS = [
    "age", "sex", "chest", "resting_blood_pressure", "serum_cholestoral",
    "fasting_blood_sugar", "resting_electrocardiographic_results",
    "maximum_heart_rate_achieved", "exercise_induced_angina", "oldpeak",
    "slope", "number_of_major_vessels", "thal", "class",
]
HEART_CLASS = {"1": "absent", "2": "present"}
SONAR_COLUMNS = [f"attribute_{i}" for i in range(1, 61)] + ["Class"]
SONAR_CLASS = {"R": "Rock", "M": "Mine"}


def rows(text):
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("@"):
            yield [f.strip() for f in line.split(",")]


def write(path, header, records, labels):
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for r in records:
        if len(r) != len(header):
            raise SystemExit(f"{path}: expected {len(header)} fields, got {len(r)}")
        out.write(",".join(r[:-1] + [labels[r[-1]]]) + "\n")
    path.write_text(out.getvalue())
    print(f"{path}: {out.getvalue().count(chr(10)) - 1} rows")


def main():
    out_dir = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/openml")
    out_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps",
                        "--timeout", "90", "-d", tmp, WHEEL], check=True)
        wheel = next(pathlib.Path(tmp).glob("*.whl"))
        with zipfile.ZipFile(wheel) as z:
            heart = z.read(RAW + "heart.dat").decode()
            sonar = z.read(RAW + "sonar.dat").decode()
    write(out_dir / "heart-statlog.csv", HEART_COLUMNS, rows(heart), HEART_CLASS)
    write(out_dir / "sonar.csv", SONAR_COLUMNS, rows(sonar), SONAR_CLASS)


if __name__ == "__main__":
    main()
