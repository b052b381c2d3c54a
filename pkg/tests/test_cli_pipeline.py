from __future__ import annotations

import csv
import hashlib
import json

import numpy as np
import pytest

from nfgrids.cli import main
from nfgrids.pipeline import ConfigError, RunConfig, parse_E

QUARTIC = {"id": "q283", "degree": 4, "signature": [2, 1], "disc": -283, "poly": [-1, -1, 0, 0, 1], "basis": [["1"], ["0", "1"], ["0", "0", "1"], ["0", "0", "0", "1"]]}


def _squarefree(n):
    n = abs(n)
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        p += 1
    return True


def _fundamental_discs(T):
    out = set()
    for D in range(-T, T + 1):
        if D in (0, 1) or not _squarefree(D):
            continue
        d = D if D % 4 == 1 else 4 * D
        if abs(d) <= T:
            out.add(d)
    return out


def _read_csv(path):
    with open(path) as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _run(capsys, *argv):
    rc = main([str(a) for a in argv])
    out = capsys.readouterr()
    return rc, out.out, out.err


# ---------------------------------------------------------------- config


def test_config_defaults_and_E():
    cfg = RunConfig()
    assert cfg.E == (1.0, 2.0, 3.0)
    assert RunConfig(degree=2).E == (1.0, 2.0)
    assert parse_E("(1,2,3)") == (1.0, 2.0, 3.0)
    assert parse_E("v0") == "V0"


@pytest.mark.parametrize(
    "kw",
    [
        {"degree": 6},
        {"degree": 3, "signature": "2,0"},
        {"degree": 3, "E": (1.0, -1.0, 0.0)},  # <u, 1bar> = 0 for (3,0)
        {"degree": 3, "E": (1.0, 2.0)},
        {"orderings": "some"},
        {"max_disc": 0},
        {"max_disc": 100, "checkpoints": (1000,)},
        {"precision": 20},
    ],
)
def test_config_rejections(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw)


def test_env_overrides_and_flag_precedence():
    env = {"NFGRIDS_MAX_DISC": "5000", "NFGRIDS_E": "V0", "NFGRIDS_DEGREE": "2"}
    cfg = RunConfig.from_sources({}, env)
    assert (cfg.max_disc, cfg.E, cfg.degree) == (5000, "V0", 2)
    cfg = RunConfig.from_sources({"max_disc": 700}, env)
    assert cfg.max_disc == 700


# ---------------------------------------------------------------- enumerate


def test_enumerate_quadratic_matches_sieve_oracle(tmp_path, capsys):
    rc, _, _ = _run(capsys, "enumerate", "--degree", 2, "--max-disc", 100, "--cache-dir", tmp_path)
    assert rc == 0
    got = set()
    for sig in ("2-0", "0-1"):
        got |= {int(r["disc"]) for r in _read_csv(tmp_path / f"fields_n2_s{sig}.csv")}
    assert got == _fundamental_discs(100)


def test_enumerate_cubic_25(tmp_path, capsys):
    rc, _, _ = _run(capsys, "enumerate", "--degree", 3, "--signature", "1,1", "--max-disc", 25, "--cache-dir", tmp_path)
    assert rc == 0
    rows = _read_csv(tmp_path / "fields_n3_s1-1.csv")
    assert [int(r["disc"]) for r in rows] == [-23]


def test_enumerate_idempotent_and_append_only(tmp_path, capsys):
    args = ["enumerate", "--degree", 3, "--max-disc", 2000, "--cache-dir", tmp_path]
    _run(capsys, *args)
    p = tmp_path / "fields_n3_s1-1.csv"
    first = p.read_bytes()
    _run(capsys, *args)
    assert p.read_bytes() == first
    _run(capsys, "enumerate", "--degree", 3, "--max-disc", 5000, "--cache-dir", tmp_path)
    assert p.read_bytes().startswith(first)


def test_enumerate_degree4_points_to_ingest(tmp_path, capsys):
    rc, _, err = _run(capsys, "enumerate", "--degree", 4, "--cache-dir", tmp_path)
    assert rc == 2 and "ingest" in err


# ---------------------------------------------------------------- grids


def test_grids_q5_translation(tmp_path, capsys):
    common = ["--degree", 2, "--signature", "2,0", "--max-disc", 100, "--E", "(1,0)", "--cache-dir", tmp_path]
    _run(capsys, "enumerate", *common)
    rc, out, _ = _run(capsys, "grids", *common)
    assert rc == 0
    rows = _read_csv(tmp_path / "grids_n2_s2-0_u1_0_all.csv")
    r = next(r for r in rows if r["source"] == "quadratic:5" and r["ordering"] == "0")
    assert float(r["x0"]) == pytest.approx(0.6180340, abs=1e-7)


def test_grids_disc23_V0_torsion(tmp_path, capsys):
    base = ["--degree", 3, "--signature", "1,1", "--max-disc", 25, "--E", "V0", "--cache-dir", tmp_path]
    _run(capsys, "enumerate", *base)
    # with the trace-form embedding the grid is 3-torsion
    _run(capsys, "grids", *base, "--embedding", "trace")
    rows = _read_csv(tmp_path / "grids_n3_s1-1_V0_all.csv")
    assert [r["torsion"] for r in rows] == ["3"]
    # with the plain (Re, Im) identification V0 is a different plane and no torsion appears
    _run(capsys, "grids", *base)
    rows = _read_csv(tmp_path / "grids_n3_s1-1_V0_all.csv")
    assert [r["torsion"] for r in rows] == [""]


def test_grids_witness_columns_and_quarantine_accounting(tmp_path, capsys):
    base = ["--degree", 3, "--max-disc", 10_000, "--cache-dir", tmp_path]
    _run(capsys, "enumerate", *base)
    rc, out, _ = _run(capsys, "grids", *base)
    assert rc == 0
    for sig, n_ord in (("3-0", 6), ("1-1", 1)):
        rows = _read_csv(tmp_path / f"grids_n3_s{sig}_u1_2_3_all.csv")
        for col in ("w_pairing", "w_in_v0", "w_shift_id", "mt3", "unimodular"):
            assert max(float(r[col]) for r in rows) < 1e-9, col
        n_fields = len(_read_csv(tmp_path / f"fields_n3_s{sig}.csv"))
        meta = json.loads((tmp_path / f"grids_n3_s{sig}_u1_2_3_all.json").read_text())
        quarantined = sum(r["quarantined"] == "1" for r in rows)
        assert n_fields * n_ord == meta["rows"] == (len(rows) - quarantined) + quarantined
        assert meta["quarantined"] == quarantined == 0


def test_grid_rows_prefix_property(tmp_path, capsys):
    small, big = tmp_path / "a", tmp_path / "b"
    for T, d in ((1000, small), (10_000, big)):
        _run(capsys, "enumerate", "--degree", 3, "--max-disc", T, "--cache-dir", d)
        _run(capsys, "grids", "--degree", 3, "--max-disc", T, "--cache-dir", d)
    for sig in ("3-0", "1-1"):
        name = f"grids_n3_s{sig}_u1_2_3_all.csv"
        a = (small / name).read_text().splitlines()[2:]
        b = (big / name).read_text().splitlines()[2:]
        assert b[: len(a)] == a


# ---------------------------------------------------------------- stats / report


def test_stats_quadratic_two_atoms(tmp_path, capsys):
    args = ["--degree", 2, "--max-disc", 10_000, "--E", "V0", "--cache-dir", tmp_path / "c", "--out", tmp_path / "o"]
    rc, _, _ = _run(capsys, "report", *args)
    assert rc == 0
    for sig in ("2-0", "0-1"):
        rep = json.loads((tmp_path / "o" / f"report_n2_s{sig}_V0.json").read_text())
        assert rep["sections"]["two_atom"]["outliers"] == 0
        assert rep["sections"]["torsion"]["support"] == [1, 2]
    assert (tmp_path / "o" / "report.md").exists()


def test_stats_cubic_weyl_and_torsion(tmp_path, capsys):
    c, o = tmp_path / "c", tmp_path / "o"
    args = ["--degree", 3, "--max-disc", 20_000, "--checkpoints", "2000,10000", "--cache-dir", c, "--out", o]
    assert _run(capsys, "report", *args)[0] == 0
    rep = json.loads((o / "report_n3_s1-1_u1_2_3.json").read_text())
    assert 0 < rep["sections"]["weyl"]["max_abs_S"] < 1
    weyl = _read_csv(o / "report_n3_s1-1_u1_2_3_weyl.csv")
    assert {int(r["T"]) for r in weyl} == {2000, 10_000, 20_000}
    conv = _read_csv(o / "report_n3_s3-0_u1_2_3_convergence.csv")
    assert len(conv) == 8 * 3
    assert _run(capsys, "report", *args, "--E", "V0", "--signature", "3,0")[0] == 0
    rep = json.loads((o / "report_n3_s3-0_V0.json").read_text())
    t = rep["sections"]["torsion"]
    assert t["unclassified"] == 0 and set(t["support"]) <= {1, 3}


def test_stats_deterministic(tmp_path, capsys):
    c = tmp_path / "c"
    args = ["--degree", 3, "--max-disc", 5000, "--cache-dir", c]
    _run(capsys, "enumerate", *args)
    _run(capsys, "grids", *args)
    digests = []
    for out in ("o1", "o2"):
        _run(capsys, "stats", *args, "--out", tmp_path / out)
        h = hashlib.sha256()
        for p in sorted((tmp_path / out).iterdir()):
            h.update(p.name.encode() + p.read_bytes())
        digests.append(h.hexdigest())
    assert digests[0] == digests[1]


def test_stats_without_grids_is_io_error(tmp_path, capsys):
    rc, _, err = _run(capsys, "stats", "--degree", 3, "--cache-dir", tmp_path)
    assert rc == 3 and "I/O error" in err


def test_bad_flags_are_config_errors(tmp_path, capsys):
    assert _run(capsys, "grids", "--degree", 3, "--E", "(1,-1,0)", "--cache-dir", tmp_path)[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["grids", "--orderings", "sometimes"])
    assert e.value.code == 2


# ---------------------------------------------------------------- ingest


def test_ingest_reports_line_numbers(tmp_path, capsys):
    f = tmp_path / "fields.jsonl"
    f.write_text("\n".join([json.dumps(QUARTIC), json.dumps(dict(QUARTIC, disc=-284)), "{not json"]) + "\n")
    rc, out, err = _run(capsys, "ingest", f, "--cache-dir", tmp_path / "c")
    assert rc == 2
    assert "line 2" in err and "line 3" in err
    assert "1 fields added" in out
    rc, out, _ = _run(capsys, "ingest", f, "--cache-dir", tmp_path / "c")
    assert "0 fields added, 1 already present" in out


def test_ingested_fields_flow_through_pipeline(tmp_path, capsys):
    f = tmp_path / "fields.jsonl"
    f.write_text(json.dumps(QUARTIC) + "\n")
    c, o = tmp_path / "c", tmp_path / "o"
    assert _run(capsys, "ingest", f, "--cache-dir", c)[0] == 0
    rc, _, _ = _run(capsys, "report", "--degree", 4, "--signature", "2,1", "--max-disc", 1000, "--cache-dir", c, "--out", o)
    assert rc == 0
    rows = _read_csv(c / "grids_n4_s2-1_u1_2_3_4_all.csv")
    assert len(rows) == 2  # S_2 x S_1 orderings
    assert all(float(r["unimodular"]) < 1e-9 for r in rows)


# ---------------------------------------------------------------- verify


def test_verify_controls(tmp_path, capsys):
    c = tmp_path / "fresh-cache"
    rc, out, _ = _run(capsys, "verify", "--only", "6,8", "--cache-dir", c)
    res = json.loads(out)
    assert (c / "fields_n3_s3-0.csv").exists()  # rebuilt automatically
    assert [r["number"] for r in res["criteria"]] == [6, 8]
    checks6 = res["criteria"][0]["measured"]["checks"]
    assert rc == (0 if res["passed"] else 1)

    rc, out, _ = _run(capsys, "verify", "--only", "6", "--tol", "1e-2", "--cache-dir", c)
    loose = json.loads(out)["criteria"][0]["measured"]["checks"]
    assert all(loose[k] == "pass" for k in ("mt3", "pairing", "in_v0", "unimodular", "lattice_across_E", "shift_id", "pi1_pi2"))
    assert all(loose[k] == "pass" for k, v in checks6.items() if v == "pass")

    rc, out, _ = _run(capsys, "verify", "--only", "6", "--tamper-mt3", "--cache-dir", c)
    res = json.loads(out)
    assert rc == 1 and not res["passed"]
    assert res["criteria"][0]["measured"]["checks"]["mt3"] == "FAIL"
    assert np.isfinite(res["criteria"][0]["measured"]["mt3"])
