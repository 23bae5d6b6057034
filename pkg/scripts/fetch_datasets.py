#!/usr/bin/env python3
"""Fetch and normalize the two public study datasets.

Writes:
  data/concrete.csv   concrete compressive strength samples (1030 rows)
  data/bike_day.csv   daily bike-share counts (731 rows) with the weather
                      columns de-normalized into natural units

Both come from the UCI Machine Learning Repository. The concrete table
ships as a legacy .xls workbook; reading it needs pandas with xlrd, so a
plain-CSV mirror is tried first. Run from anywhere; paths are resolved
relative to the repository root. Re-running overwrites the outputs.
"""

from __future__ import annotations

import csv
import io
import os
import sys
import urllib.request
import zipfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA_DIR = os.path.join(ROOT, "data")

CONCRETE_ZIP = "https://archive.ics.uci.edu/static/public/165/concrete+compressive+strength.zip"
CONCRETE_CSV_MIRRORS = [
    # Yeh's table as plain CSV (same 1030 rows, short headers)
    "https://raw.githubusercontent.com/stedy/Machine-Learning-with-R-datasets/master/concrete.csv",
]
BIKE_ZIP = "https://archive.ics.uci.edu/static/public/275/bike+sharing+dataset.zip"

CONCRETE_COLUMNS = [
    "cement",
    "blast_furnace_slag",
    "fly_ash",
    "water",
    "superplasticizer",
    "coarse_aggregate",
    "fine_aggregate",
    "age",
    "strength",
]

# day.csv normalization factors documented by the dataset authors
BIKE_SCALES = {"temp_c": ("temp", 41.0), "hum_pct": ("hum", 100.0),
               "windspeed_denorm": ("windspeed", 67.0)}


def _download(url: str) -> bytes:
    print(f"fetching {url}")
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read()


def _write_rows(path: str, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def fetch_concrete() -> None:
    out_path = os.path.join(DATA_DIR, "concrete.csv")
    for url in CONCRETE_CSV_MIRRORS:
        try:
            raw = _download(url).decode("utf-8-sig")
        except Exception as exc:  # noqa: BLE001 - fall through to next source
            print(f"  mirror failed: {exc}")
            continue
        reader = csv.reader(io.StringIO(raw))
        header = next(reader)
        if len(header) != len(CONCRETE_COLUMNS):
            print(f"  unexpected column count {len(header)}, skipping mirror")
            continue
        _write_rows(out_path, CONCRETE_COLUMNS, [row for row in reader if row])
        return
    # fall back to the official workbook (needs pandas + xlrd)
    try:
        import pandas as pd
    except ImportError:
        sys.exit("no CSV mirror reachable and pandas is unavailable for the .xls route")
    payload = _download(CONCRETE_ZIP)
    with zipfile.ZipFile(io.BytesIO(payload)) as zf:
        name = next(n for n in zf.namelist() if n.lower().endswith(".xls"))
        frame = pd.read_excel(io.BytesIO(zf.read(name)))
    frame.columns = CONCRETE_COLUMNS
    frame.to_csv(out_path, index=False)
    print(f"wrote {out_path} ({len(frame)} rows)")


def fetch_bike() -> None:
    out_path = os.path.join(DATA_DIR, "bike_day.csv")
    payload = _download(BIKE_ZIP)
    with zipfile.ZipFile(io.BytesIO(payload)) as zf:
        raw = zf.read("day.csv").decode("utf-8")
    reader = csv.reader(io.StringIO(raw))
    header = next(reader)
    index = {name: k for k, name in enumerate(header)}
    extra = list(BIKE_SCALES)
    rows = []
    for row in reader:
        if not row:
            continue
        for name in extra:
            source, scale = BIKE_SCALES[name]
            row = row + [repr(float(row[index[source]]) * scale)]
        rows.append(row)
    _write_rows(out_path, header + extra, rows)


def main() -> None:
    os.makedirs(DATA_DIR, exist_ok=True)
    fetch_concrete()
    fetch_bike()


if __name__ == "__main__":
    main()
