"""CSV writers.  Every float is written with 17 significant digits."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

PARTICLE_HEADER = ("ring", "id", "z", "r", "weight", "omega")
TRAJECTORY_HEADER = ("t", "z_B", "r_B", "I", "m_R", "mu_Rh", "R_t", "M0", "M2", "E", "qz", "qr")
LIMIT_HEADER = ("t", "i", "z1", "z2")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _write(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def particle_rows(state):
    for k, ring in enumerate(state.rings):
        omega = ring.omega
        for j in range(len(ring)):
            yield (k, j, ring.pos[j, 0], ring.pos[j, 1], ring.weight[j], omega[j])


def write_particles(path, state):
    return _write(path, PARTICLE_HEADER, particle_rows(state))


def trajectory_rows(records):
    for rec in records:
        m_R = next(iter(rec.m_of_R.values())) if rec.m_of_R else float("nan")
        mu = next(iter(rec.mu_of_Rh.values())) if rec.mu_of_Rh else float("nan")
        yield (
            rec.time, rec.B[0], rec.B[1], rec.I, m_R, mu, rec.R_t,
            rec.M0, rec.M2, rec.E, rec.q[0], rec.q[1],
        )


def write_trajectory(path, records):
    return _write(path, TRAJECTORY_HEADER, trajectory_rows(records))


def write_limit(path, traj):
    def rows():
        for t, s in traj:
            for i, p in enumerate(s.positions):
                yield (t, i, p[0], p[1])

    return _write(path, LIMIT_HEADER, rows())


def write_table(path, header, rows):
    return _write(path, header, rows)


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
