"""
Half-life statistics of nuclear isomers and their energy dissipation power.

Input is a CSV with header ``Z,N,E_gamma_keV,half_life_s,label`` (an optional
``A`` column is cross-checked against Z + N). Nuclides are grouped into regions
bounded by the magic numbers 20, 50, 82 and 126, using max(Z, N) by default.
Units are keV and seconds throughout this module.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

MAGIC_EDGES = (20, 50, 82, 126)
MIN_E_GAMMA_KEV = 1.0
QUANTILE_METHOD = "linear"  # interpolation between order statistics, type 7


@dataclass(frozen=True)
class IsomerRecord:
    Z: int
    N: int
    E_gamma: float  # keV
    half_life: float  # s
    label: str = ""

    @property
    def A(self) -> int:
        return self.Z + self.N


class TableError(ValueError):
    """Malformed rows, reported with their line numbers."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(f"line {n}: {msg}" for n, msg in self.problems))


def dissipation_power(E_gamma: float, half_life: float) -> float:
    """``E_gamma ln 2 / T_half`` in keV/s."""
    if half_life == 0:
        raise ZeroDivisionError("half-life must be non-zero")
    if E_gamma <= 0 or half_life < 0:
        raise ValueError("energy and half-life must be positive")
    return E_gamma * math.log(2) / half_life


def parse_isomer_table(path) -> list[IsomerRecord]:
    """Read and validate an isomer table; duplicate nuclides keep the longest half-life."""
    required = ["Z", "N", "E_gamma_keV", "half_life_s", "label"]
    with open(path, newline="") as fh:
        text = fh.read()
    if not text.strip():
        return []
    reader = csv.DictReader(text.splitlines())
    missing = [c for c in required if c not in (reader.fieldnames or [])]
    if missing:
        raise TableError([(1, f"missing columns {missing}")])
    problems = []
    best: dict[tuple[int, int], IsomerRecord] = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            z, n = int(row["Z"]), int(row["N"])
            e, t = float(row["E_gamma_keV"]), float(row["half_life_s"])
        except (TypeError, ValueError):
            problems.append((lineno, "non-numeric Z, N, energy or half-life"))
            continue
        if z < 0 or n < 0:
            problems.append((lineno, "negative nucleon number"))
            continue
        if row.get("A") not in (None, "") and int(float(row["A"])) != z + n:
            problems.append((lineno, f"A = {row['A']} differs from Z + N = {z + n}"))
            continue
        if not t > 0 or not math.isfinite(t):
            problems.append((lineno, f"half-life must be positive, got {row['half_life_s']}"))
            continue
        if not e >= MIN_E_GAMMA_KEV:
            problems.append((lineno, f"photon energy below {MIN_E_GAMMA_KEV} keV"))
            continue
        rec = IsomerRecord(z, n, e, t, (row.get("label") or "").strip())
        key = (z, n)
        if key not in best or rec.half_life > best[key].half_life:
            best[key] = rec
    if problems:
        raise TableError(problems)
    return sorted(best.values(), key=lambda r: (r.A, r.Z))


# --- regions --------------------------------------------------------------------


@dataclass(frozen=True)
class RegionMap:
    """Shell intervals ``(edges[i-1], edges[i]]`` applied to ``coordinate`` in {max, Z, N, A}."""

    edges: tuple = MAGIC_EDGES
    coordinate: str = "max"

    def __post_init__(self):
        if list(self.edges) != sorted(self.edges) or len(set(self.edges)) != len(self.edges):
            raise ValueError("region edges must be strictly increasing")
        if self.coordinate not in ("max", "Z", "N", "A"):
            raise ValueError(f"unknown region coordinate {self.coordinate!r}")

    @classmethod
    def from_file(cls, path) -> "RegionMap":
        with open(path) as fh:
            doc = json.load(fh)
        return cls(tuple(int(e) for e in doc.get("edges", MAGIC_EDGES)), doc.get("coordinate", "max"))

    @property
    def labels(self) -> list[str]:
        e = self.edges
        out = [f"<={e[0]}"] + [f"{e[i - 1] + 1}-{e[i]}" for i in range(1, len(e))] + [f">{e[-1]}"]
        return out

    def value(self, rec: IsomerRecord) -> int:
        return {"max": max(rec.Z, rec.N), "Z": rec.Z, "N": rec.N, "A": rec.A}[self.coordinate]

    def region(self, rec: IsomerRecord) -> str:
        idx = int(np.searchsorted(self.edges, self.value(rec), side="left"))
        return self.labels[idx]


@dataclass
class RegionStats:
    cdfs: dict  # region -> (sorted log10 half-lives, cumulative fractions)
    quartiles: dict  # A -> (count, Q1, median, Q3) of log10 half-lives
    region_map: RegionMap


def empirical_cdf(values) -> tuple[np.ndarray, np.ndarray]:
    x = np.sort(np.asarray(values, dtype=float))
    return x, np.arange(1, len(x) + 1) / len(x)


def region_stats(records, region_map: RegionMap | None = None) -> RegionStats:
    """Per-region CDFs of log10(half-life) and per-A quartiles."""
    records = list(records)
    if not records:
        raise ValueError("no records")
    rmap = region_map or RegionMap()
    groups: dict[str, list[float]] = {lab: [] for lab in rmap.labels}
    by_a: dict[int, list[float]] = {}
    for rec in records:
        lt = math.log10(rec.half_life)
        groups[rmap.region(rec)].append(lt)
        by_a.setdefault(rec.A, []).append(lt)
    cdfs = {lab: empirical_cdf(v) for lab, v in groups.items() if v}
    quart = {}
    for a in sorted(by_a):
        q1, med, q3 = np.percentile(by_a[a], [25, 50, 75], method=QUANTILE_METHOD)
        quart[a] = (len(by_a[a]), float(q1), float(med), float(q3))
    return RegionStats(cdfs, quart, rmap)


def _write(path, header, rows, meta):
    with open(path, "w", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_outputs(records, outdir, region_map: RegionMap | None = None, meta: dict | None = None) -> dict:
    """Write region_cdfs.csv, quartiles_by_A.csv and powers.csv into ``outdir``."""
    import os

    os.makedirs(outdir, exist_ok=True)
    stats = region_stats(records, region_map)
    meta = dict(meta or {})
    meta.setdefault("quantiles", "linear interpolation between order statistics (type 7)")
    meta.setdefault("regions", f"{stats.region_map.coordinate}(Z,N) cut at {list(stats.region_map.edges)}")
    paths = {k: os.path.join(outdir, k) for k in ("region_cdfs.csv", "quartiles_by_A.csv", "powers.csv")}
    _write(paths["region_cdfs.csv"], ["region", "log10_half_life_s", "cdf"],
           [(lab, repr(float(x)), repr(float(c))) for lab, (xs, cs) in stats.cdfs.items() for x, c in zip(xs, cs)],
           meta)
    _write(paths["quartiles_by_A.csv"], ["A", "count", "q1", "median", "q3"],
           [(a, n, repr(q1), repr(m), repr(q3)) for a, (n, q1, m, q3) in stats.quartiles.items()], meta)
    _write(paths["powers.csv"], ["Z", "N", "A", "label", "E_gamma_keV", "half_life_s", "power_keV_per_s"],
           [(r.Z, r.N, r.A, r.label, repr(r.E_gamma), repr(r.half_life), repr(dissipation_power(r.E_gamma, r.half_life)))
            for r in records], meta)
    return paths
