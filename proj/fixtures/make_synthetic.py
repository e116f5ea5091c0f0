"""Writes the synthetic error-correction fixtures in the long CSV layout.

The target follows
    dy_t = dx_t' pi + gamma * (y_{t-1} - x_{t-1}' beta) + sigma * e_t
on the days-since-threshold scale, with three peers that are random walks with
drift in log counts. PeerC does not enter the model. Peers reach 100 cases
LEAD days before the target.

    python3 make_synthetic.py
"""

import csv
import datetime as dt
import math
import random

BETA = (0.6, 0.45, 0.0)
PI = (0.3, 0.2, 0.0)
GAMMA = -0.4
DRIFT = 0.08
STEP_SD = 0.03
X0 = 5.0
TARGET_DAYS = 40
LEAD = 20
TARGET_START = dt.date(2020, 3, 10)


def simulate(sigma, pi, seed):
    rng = random.Random(seed)
    total = TARGET_DAYS + LEAD
    x = [[X0 + 0.5 * j for j in range(3)]]
    for _ in range(1, total):
        x.append([v + DRIFT + STEP_SD * rng.gauss(0.0, 1.0) for v in x[-1]])
    y = [sum(b * v for b, v in zip(BETA, x[0]))]
    for t in range(1, TARGET_DAYS):
        z = y[-1] - sum(b * v for b, v in zip(BETA, x[t - 1]))
        dx = [a - b for a, b in zip(x[t], x[t - 1])]
        y.append(y[-1] + sum(p * d for p, d in zip(pi, dx)) + GAMMA * z + sigma * rng.gauss(0.0, 1.0))
    return y, x


def rows_for(name, start, logs):
    out = []
    for i, frac in enumerate((20, 40, 60)):
        out.append((name, start - dt.timedelta(days=3 - i), frac))
    for i, v in enumerate(logs):
        out.append((name, start + dt.timedelta(days=i), round(math.exp(v))))
    return out


def write(path, sigma, pi, seed):
    y, x = simulate(sigma, pi, seed)
    rows = rows_for("Target", TARGET_START, y)
    peer_start = TARGET_START - dt.timedelta(days=LEAD)
    for j, name in enumerate(("PeerA", "PeerB", "PeerC")):
        rows += rows_for(name, peer_start, [r[j] for r in x])
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(("country", "date", "cumulative"))
        for name, day, count in rows:
            w.writerow((name, day.isoformat(), count))


if __name__ == "__main__":
    write("synthetic_ecm_long.csv", 0.01, PI, 2020)
    write("synthetic_ecm_noiseless_long.csv", 0.0, BETA, 2021)
