import math

import numpy as np
import pytest

from superbath.nuclear import (
    IsomerRecord,
    RegionMap,
    TableError,
    dissipation_power,
    empirical_cdf,
    parse_isomer_table,
    region_stats,
    write_outputs,
)

HEADER = "Z,N,E_gamma_keV,half_life_s,label\n"


def brute_quantile(values, p):
    """Type-7 quantile from a plain sort."""
    x = sorted(values)
    h = (len(x) - 1) * p
    lo = math.floor(h)
    if lo + 1 >= len(x):
        return x[-1]
    return x[lo] + (h - lo) * (x[lo + 1] - x[lo])


def synthetic_records(seed=0, n=120):
    """Half-lives are exact powers of ten, so log10 values are small integers."""
    rng = np.random.default_rng(seed)
    recs = []
    seen = set()
    while len(recs) < n:
        z = int(rng.integers(8, 100))
        a = int(rng.choice([40, 90, 140, 180, 208, 240]))
        if (z, a - z) in seen or a - z < 1:
            continue
        seen.add((z, a - z))
        recs.append(IsomerRecord(z, a - z, float(rng.uniform(1, 3000)), 10.0 ** int(rng.integers(-6, 16)), f"n{len(recs)}"))
    return recs


# --- powers ---------------------------------------------------------------------------

def test_power_examples():
    assert dissipation_power(1.0, 1.0) == math.log(2)
    assert dissipation_power(100.0, 1e-12) == pytest.approx(6.93147e13, rel=1e-6)
    for c in (0.5, 3.0, 1e4):
        assert dissipation_power(c * 7.0, c * 2.0) == pytest.approx(dissipation_power(7.0, 2.0), rel=1e-15)
    with pytest.raises(ZeroDivisionError):
        dissipation_power(1.0, 0.0)


# --- parsing ---------------------------------------------------------------------------

def test_empty_file(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    assert parse_isomer_table(p) == []


def test_single_row(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(HEADER + "73,107,75.3,1.18e22,Ta-180m\n")
    (rec,) = parse_isomer_table(p)
    assert rec.A == 180 and rec.label == "Ta-180m" and rec.half_life == 1.18e22


def test_a_column_mismatch(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("Z,N,A,E_gamma_keV,half_life_s,label\n73,107,181,75.3,1.18e22,x\n")
    with pytest.raises(TableError) as err:
        parse_isomer_table(p)
    assert "line 2" in str(err.value)


def test_bad_rows_reported_with_lines(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(HEADER + "1,1,10,1,a\n2,2,10,-1,b\n3,3,0.5,1,c\nx,3,2,1,d\n")
    with pytest.raises(TableError) as err:
        parse_isomer_table(p)
    lines = [n for n, _ in err.value.problems]
    assert lines == [3, 4, 5]


def test_missing_columns(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("Z,N\n1,2\n")
    with pytest.raises(TableError):
        parse_isomer_table(p)


def test_duplicates_keep_longest(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(HEADER + "50,66,10,1e-3,a\n50,66,20,5.0,b\n50,66,30,2.0,c\n")
    (rec,) = parse_isomer_table(p)
    assert rec.half_life == 5.0 and rec.label == "b"


# --- regions and statistics -----------------------------------------------------------

def test_region_map():
    rm = RegionMap()
    assert rm.labels == ["<=20", "21-50", "51-82", "83-126", ">126"]
    assert rm.region(IsomerRecord(20, 20, 1, 1)) == "<=20"
    assert rm.region(IsomerRecord(20, 21, 1, 1)) == "21-50"
    assert rm.region(IsomerRecord(73, 107, 1, 1)) == "83-126"
    assert rm.region(IsomerRecord(92, 146, 1, 1)) == ">126"
    assert RegionMap(coordinate="Z").region(IsomerRecord(73, 107, 1, 1)) == "51-82"
    with pytest.raises(ValueError):
        RegionMap(edges=(50, 20))


def test_region_map_file(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"edges": [28, 82], "coordinate": "A"}')
    rm = RegionMap.from_file(p)
    assert rm.edges == (28, 82) and rm.coordinate == "A"


def test_single_record_stats():
    st = region_stats([IsomerRecord(73, 107, 75.3, 1e10)])
    assert st.quartiles[180] == (1, 10.0, 10.0, 10.0)
    xs, cs = st.cdfs["83-126"]
    assert list(xs) == [10.0] and list(cs) == [1.0]


def test_two_records_one_region():
    st = region_stats([IsomerRecord(60, 80, 1, 1e2), IsomerRecord(61, 80, 1, 1e5)])
    xs, cs = st.cdfs["83-126"] if "83-126" in st.cdfs else st.cdfs["51-82"]
    assert list(xs) == [2.0, 5.0] and list(cs) == [0.5, 1.0]


def test_synthetic_quartiles_match_oracle():
    recs = synthetic_records()
    st = region_stats(recs)
    by_a = {}
    for r in recs:
        by_a.setdefault(r.A, []).append(math.log10(r.half_life))
    assert set(st.quartiles) == set(by_a)
    for a, vals in by_a.items():
        n, q1, med, q3 = st.quartiles[a]
        assert n == len(vals)
        assert (q1, med, q3) == (brute_quantile(vals, 0.25), brute_quantile(vals, 0.5), brute_quantile(vals, 0.75))
        assert q1 <= med <= q3


def test_synthetic_cdfs_match_oracle():
    recs = synthetic_records(1)
    rm = RegionMap()
    st = region_stats(recs, rm)
    groups = {}
    for r in recs:
        v = max(r.Z, r.N)
        lab = next((lab for lab, e in zip(rm.labels, rm.edges) if v <= e), rm.labels[-1])
        groups.setdefault(lab, []).append(math.log10(r.half_life))
    assert set(st.cdfs) == set(groups)
    for lab, vals in groups.items():
        xs, cs = st.cdfs[lab]
        assert list(xs) == sorted(vals)
        assert list(cs) == [(i + 1) / len(vals) for i in range(len(vals))]
        assert np.all(np.diff(cs) >= 0) and cs[-1] == 1.0


def test_empirical_cdf():
    x, c = empirical_cdf([3, 1, 2])
    assert list(x) == [1, 2, 3] and list(c) == [1 / 3, 2 / 3, 1.0]


def test_region_stats_requires_records():
    with pytest.raises(ValueError):
        region_stats([])


def test_write_outputs(tmp_path):
    paths = write_outputs(synthetic_records(2, 20), tmp_path, meta={"config_hash": "abc", "seed": 0})
    for path in paths.values():
        text = open(path).read()
        assert text.startswith("# config_hash: abc\n")
        assert "# quantiles: linear interpolation" in text
    rows = open(paths["powers.csv"]).read().splitlines()
    assert rows[4].startswith("Z,N,A,label")
    assert len(rows) == 4 + 1 + 20
