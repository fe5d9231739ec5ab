#!/usr/bin/env python3
"""Regenerate the committed data fixtures under data/.

wti_daily_2010_2023.csv
    2010-01-04 .. 2019-01-03: FRED DCOILWTICO daily closes (public domain), as
    redistributed in the `arch` Python package (arch/data/wti/wti.csv.gz).
    2019-01-04 .. 2023-05-31: reconstruction. A seeded Brownian bridge runs
    through approximate month-end WTI levels plus a handful of well-known daily
    closes (including the -37.63 settlement of 2020-04-20). It reproduces the
    shape of that period, not the actual tick history.

synthetic_300.csv
    300 business days of a trending, seasonal, noisy series.

Only Date and Close are meaningful; Open/High/Low/Adj Close repeat Close and
Volume is 0.

usage: make_wti_fixture.py PATH/TO/wti.csv.gz OUT_DIR
"""
import csv
import datetime as dt
import gzip
import math
import random
import sys

from dateutil.easter import easter

END = dt.date(2023, 5, 31)

# (date, close) anchors for the reconstructed segment.
ANCHORS = [
    ("2019-01-31", 53.79), ("2019-02-28", 57.22), ("2019-03-29", 60.14),
    ("2019-04-30", 63.91), ("2019-05-31", 53.50), ("2019-06-28", 58.47),
    ("2019-07-31", 58.58), ("2019-08-30", 55.10), ("2019-09-30", 54.07),
    ("2019-10-31", 54.18), ("2019-11-29", 55.17), ("2019-12-31", 61.06),
    ("2020-01-31", 51.56), ("2020-02-28", 44.76), ("2020-03-31", 20.48),
    ("2020-04-17", 18.27), ("2020-04-20", -37.63), ("2020-04-21", 10.01),
    ("2020-04-22", 13.78), ("2020-04-30", 18.84), ("2020-05-29", 35.49),
    ("2020-06-30", 39.27), ("2020-07-31", 40.27), ("2020-08-31", 42.61),
    ("2020-09-30", 40.22), ("2020-10-30", 35.79), ("2020-11-30", 45.34),
    ("2020-12-31", 48.52), ("2021-01-29", 52.20), ("2021-02-26", 61.50),
    ("2021-03-31", 59.16), ("2021-04-30", 63.58), ("2021-05-28", 66.32),
    ("2021-06-30", 73.47), ("2021-07-30", 73.95), ("2021-08-31", 68.50),
    ("2021-09-30", 75.03), ("2021-10-29", 83.57), ("2021-11-30", 66.18),
    ("2021-12-31", 75.21), ("2022-01-31", 88.15), ("2022-02-28", 95.72),
    ("2022-03-08", 123.70), ("2022-03-31", 100.28), ("2022-04-29", 104.69),
    ("2022-05-31", 114.67), ("2022-06-30", 105.76), ("2022-07-29", 98.62),
    ("2022-08-31", 89.55), ("2022-09-30", 79.49), ("2022-10-31", 86.53),
    ("2022-11-30", 80.55), ("2022-12-30", 80.26), ("2023-01-31", 78.87),
    ("2023-02-28", 77.05), ("2023-03-31", 75.67), ("2023-04-28", 76.78),
    ("2023-05-31", 68.09),
]


def exchange_holidays(year):
    def observed(d):
        if d.weekday() == 5:
            return d - dt.timedelta(days=1)
        if d.weekday() == 6:
            return d + dt.timedelta(days=1)
        return d

    def nth_weekday(month, weekday, n):
        d = dt.date(year, month, 1)
        while d.weekday() != weekday:
            d += dt.timedelta(days=1)
        return d + dt.timedelta(weeks=n - 1)

    def last_weekday(month, weekday):
        d = dt.date(year, month + 1, 1) - dt.timedelta(days=1)
        while d.weekday() != weekday:
            d -= dt.timedelta(days=1)
        return d

    new_year = dt.date(year, 1, 1)
    days = {
        # a Saturday New Year's Day is not observed on the preceding Friday
        new_year if new_year.weekday() == 5 else observed(new_year),
        nth_weekday(1, 0, 3),
        nth_weekday(2, 0, 3),
        last_weekday(5, 0),
        observed(dt.date(year, 7, 4)),
        nth_weekday(9, 0, 1),
        nth_weekday(11, 3, 4),
        observed(dt.date(year, 12, 25)),
        easter(year) - dt.timedelta(days=2),
    }
    return days


def trading_days(start, end):
    holidays = set()
    for y in range(start.year, end.year + 1):
        holidays |= exchange_holidays(y)
    d = start
    while d <= end:
        if d.weekday() < 5 and d not in holidays:
            yield d
        d += dt.timedelta(days=1)


def load_fred(path):
    rows = []
    with gzip.open(path, "rt") as fh:
        for rec in csv.DictReader(fh):
            d = dt.datetime.strptime(rec["Date"], "%m/%d/%Y").date()
            if d < dt.date(2010, 1, 1) or rec["DCOILWTICO"] == ".":
                continue
            rows.append((d, float(rec["DCOILWTICO"])))
    return rows


def bridge(rng, start_value, end_value, steps, vol):
    """Brownian bridge of `steps` increments from start_value to end_value."""
    walk = [0.0]
    for _ in range(steps):
        walk.append(walk[-1] + rng.gauss(0.0, vol))
    out = []
    for k in range(1, steps + 1):
        frac = k / steps
        out.append(start_value + frac * (end_value - start_value)
                   + walk[k] - frac * walk[steps])
    return out


def reconstruct(last_real, rng):
    days = list(trading_days(last_real[0] + dt.timedelta(days=1), END))
    index = {d: i for i, d in enumerate(days)}
    values = [None] * len(days)
    prev_i, prev_v = -1, last_real[1]
    for ds, v in ANCHORS:
        i = index[dt.date.fromisoformat(ds)]
        steps = i - prev_i
        vol = 0.022 * max(abs(prev_v), abs(v), 20.0)
        values[prev_i + 1:i + 1] = bridge(rng, prev_v, v, steps, vol)
        values[i] = v
        prev_i, prev_v = i, v
    return list(zip(days, values))


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"])
        for d, v in rows:
            s = f"{v:.2f}"
            w.writerow([d.isoformat(), s, s, s, s, s, 0])


def main():
    fred_path, out_dir = sys.argv[1], sys.argv[2]
    rng = random.Random(20230531)
    real = load_fred(fred_path)
    rows = real + reconstruct(real[-1], rng)
    assert len(rows) == 3375, len(rows)
    write_csv(f"{out_dir}/wti_daily_2010_2023.csv", rows)

    days = list(trading_days(dt.date(2021, 1, 4), dt.date(2022, 6, 30)))[:300]
    synth = [(d, 60.0 + 0.03 * t + 6.0 * math.sin(2 * math.pi * t / 40.0)
              + rng.gauss(0.0, 0.8)) for t, d in enumerate(days)]
    write_csv(f"{out_dir}/synthetic_300.csv", synth)


if __name__ == "__main__":
    main()
