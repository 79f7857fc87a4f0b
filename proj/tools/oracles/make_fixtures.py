"""Writes the reference fixtures under tests/fixtures from stdlib/numpy computations."""
import calendar
import datetime as dt
import json
import math
import pathlib
import random
import sys

import numpy as np
from scipy import stats

OUT = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures")
OUT.mkdir(parents=True, exist_ok=True)
rng = random.Random(20240611)
ref = {}


def write_csv(name, header, rows):
    with open(OUT / name, "w") as f:
        f.write(",".join(header) + "\n")
        for r in rows:
            f.write(",".join(str(c) for c in r) + "\n")


# hourly -> daily max
hourly = []
for day in (dt.date(2021, 3, 1), dt.date(2021, 3, 2)):
    for h in range(24):
        demand = 1000 + 10 * h if h <= 18 else 1180 - 15 * (h - 18)
        demand += rng.random()
        temp = round(rng.uniform(-5, 25), 3)
        hourly.append((f"{day.isoformat()}T{h:02d}:00:00", temp, round(demand, 4)))
write_csv("hourly_two_days.csv", ["timestamp", "temp", "demand"], hourly)
daily = []
for d in sorted({r[0][:10] for r in hourly}):
    rows = [r for r in hourly if r[0].startswith(d)]
    peak = max(rows, key=lambda r: r[2])
    daily.append({"date": d, "temp": max(r[1] for r in rows), "demand": peak[2], "peak_hour": int(peak[0][11:13])})
ref["daily_max"] = daily

# shuffled rows
base = dt.date(2020, 1, 1)
sorted_rows = [((base + dt.timedelta(days=i)).isoformat(), round(rng.gauss(10, 3), 4), round(rng.gauss(500, 50), 4))
               for i in range(12)]
shuffled = sorted_rows[:]
rng.shuffle(shuffled)
write_csv("shuffled.csv", ["timestamp", "temp", "demand"], shuffled)
ref["shuffled_sorted"] = [{"timestamp": t, "temp": a, "demand": b} for t, a, b in sorted_rows]

# calendar codes
cal = []
for d in [dt.date(2021, 1, 1), dt.date(2021, 12, 31)] + [dt.date(2000, 1, 1) + dt.timedelta(days=rng.randrange(12000))
                                                       for _ in range(40)]:
    cal.append({"date": d.isoformat(), "month": d.month - 1, "day_of_month": d.day - 1, "day_of_week": d.weekday()})
ref["calendar"] = cal

# monthly broadcast over March-April
days = [dt.date(2021, 3, 1) + dt.timedelta(days=i) for i in range(61)]
write_csv("march_april.csv", ["timestamp", "departures"], [(d.isoformat(), 100 + i) for i, d in enumerate(days)])
write_csv("fuel_monthly.csv", ["month", "value"], [("2021-03", 3.0), ("2021-04", 3.5)])
ref["monthly_broadcast"] = {
    "march_days": calendar.monthrange(2021, 3)[1],
    "april_days": calendar.monthrange(2021, 4)[1],
    "values": [3.0 if d.month == 3 else 3.5 for d in days],
}

# chronological split
ref["chrono_split"] = [
    {"rows": 100, "fraction": 0.8, "train_end": math.floor(0.8 * 100)},
    {"rows": 10, "fraction": 0.5, "train_end": math.floor(0.5 * 10)},
    {"rows": 50, "fraction": 0.8, "train_end": math.floor(0.8 * 50), "window": 30 + 59 + 1,
     "insufficient": math.floor(0.8 * 50) < 90},
]

# normalizer
normal = np.random.default_rng(5).standard_normal(400)
ref["normalizer"] = {
    "minmax_values": [0.0, 10.0], "minmax_shift": 0.0, "minmax_scale": 10.0,
    "zscore_values": normal.tolist(), "zscore_shift": float(normal.mean()), "zscore_scale": float(normal.std(ddof=0)),
}

# windows
ref["windows"] = {"rows": 10, "T": 3, "k": 1, "stride": 1,
                  "count": len([s for s in range(10) if s + 5 <= 10]), "length": 5,
                  "starts": [s for s in range(10) if s + 5 <= 10]}
ref["default_window_length"] = 30 + 59 + 1

# mask-length uniformity bound for k=59, 10000 draws
n, c = 10000, 60
p = 1.0 / c
ref["mask_length_uniformity"] = {"draws": n, "values": c, "expected": n * p, "three_sigma": 3 * math.sqrt(n * p * (1 - p)),
                                  "chi2_critical_999": float(stats.chi2.ppf(0.999, c - 1))}

# masked loss: masked squared errors {1, 4}
ref["masked_loss"] = {"predictions": [1.0, 2.0], "targets": [0.0, 0.0], "mask_length": 2, "value": (1 + 4) / 2}

ref["encode_width"] = {"continuous": 2, "categorical": 3, "embedding": 5, "width": 2 + 3 * 5}
ref["tcn_receptive_field"] = 1 + (3 - 1) * sum(2 ** i for i in range(2))
ref["attention_head_width"] = 128 // 8
ref["mape"] = {"pred": [110.0, 180.0], "truth": [100.0, 200.0],
               "value": 100 * sum(abs(a - b) / abs(b) for a, b in zip([110.0, 180.0], [100.0, 200.0])) / 2}
ref["mse"] = {"pred": [1.0, 3.0], "truth": [0.0, 0.0], "value": (1 + 9) / 2}


def adam_oracle(p, g, steps, lr=0.001, b1=0.9, b2=0.999, eps=1e-8):
    m = v = 0.0
    out = []
    for t in range(1, steps + 1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
        out.append(p)
    return out


ref["adam"] = [{"start": 1.5, "gradient": g, "trajectory": adam_oracle(1.5, g, 100)} for g in (0.3, -2.0, 1e-3)]

# validation: swap rows 4 and 5 of a 10-row sorted series
ts = [(base + dt.timedelta(days=i)).isoformat() for i in range(10)]
ts[4], ts[5] = ts[5], ts[4]
ref["out_of_order"] = {"timestamps": ts,
                       "violations": [r for r in range(1, 10) if not ts[r - 1] < ts[r]]}

with open(OUT / "reference.json", "w") as f:
    json.dump(ref, f, indent=1)
print(f"wrote {OUT}")
