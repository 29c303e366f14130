import csv
import subprocess
import sys

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonsplit.cli import (
    RunConfig,
    SWEEP_COLUMNS,
    build_parser,
    digits_for,
    dispatch,
    emit_csv,
    format_hex,
    parse_hex,
)
from henonsplit.errors import ConfigError


def _run(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "henonsplit", *args], capture_output=True, text=True, cwd=cwd)


def test_digits_rule():
    assert digits_for(64) == 20
    assert digits_for(160) == 48
    assert digits_for(337) == 50


@given(st.integers(min_value=64, max_value=2000), st.integers(-10**6, 10**6), st.integers(1, 10**6))
@settings(max_examples=80)
def test_hex_round_trip(prec, num, den):
    ctx = mpmath.MPContext()
    ctx.prec = prec
    x = ctx.mpf(num) / den * ctx.pi
    assert parse_hex(format_hex(x))._mpf_ == x._mpf_


def test_hex_zero_and_ints():
    assert format_hex(mpmath.mpf(0)) == "0x0p+0"
    assert parse_hex("0x0p+0") == 0
    assert format_hex(7) == "7"


cfg_st = st.builds(
    RunConfig,
    h=st.sampled_from([None, "0.15", "0.2"]),
    bits=st.sampled_from([None, 128, 512]),
    out=st.sampled_from([".", "results/a"]),
    verbose=st.booleans(),
    grid=st.lists(st.sampled_from(["0.2", "0.1", "0.06"]), max_size=3),
    jobs=st.integers(1, 16),
    scan_samples=st.integers(16, 4096),
    a2=st.sampled_from(["0", "0.125", "0.1j"]),
    depth=st.sampled_from([3.0, 4.0, 5.5]),
    nodes=st.integers(8, 64),
)


@given(cfg_st)
@settings(max_examples=60)
def test_config_round_trip(cfg):
    back = RunConfig.from_ini(cfg.to_ini())
    assert back == cfg


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        RunConfig.from_ini("[run]\ncolour = blue\n")
    with pytest.raises(ConfigError):
        RunConfig.from_ini("[elsewhere]\nh = 1\n")
    with pytest.raises(ConfigError):
        RunConfig(h="0.1", eps="0.1").validate()


def test_emit_header_only(tmp_path):
    emit_csv([], SWEEP_COLUMNS, tmp_path / "empty.csv")
    assert (tmp_path / "empty.csv").read_bytes() == (",".join(SWEEP_COLUMNS) + "\r\n").encode()
    assert (tmp_path / "empty.hex").exists()


def test_emit_sidecar_round_trip(tmp_path):
    ctx = mpmath.MPContext()
    ctx.prec = 300
    recs = [{"a": ctx.pi / k, "b": k, "precision_bits": 300} for k in (1, 3, 7)]
    emit_csv(recs, ["a", "b", "precision_bits"], tmp_path / "t.csv")
    with open(tmp_path / "t.hex", newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    assert [parse_hex(r[0])._mpf_ for r in rows] == [r["a"]._mpf_ for r in recs]
    with open(tmp_path / "t.csv", newline="") as fh:
        first = list(csv.reader(fh))[1][0]
    assert len(first.replace(".", "")) == 50


def test_help_lists_outputs_and_keys():
    text = build_parser().format_help()
    for key in ("h, eps, bits, out, verbose", "grid", "scan_samples", "a2, depth, nodes"):
        assert key in text
    r = _run("sweep", "--help")
    assert "sweep.csv" in r.stdout and "scan_samples" in r.stdout


def test_exit_codes(tmp_path):
    r = _run("theta", "--bogus")
    assert r.returncode == 2 and "usage" in r.stderr
    assert _run("frobnicate").returncode == 2
    assert dispatch(["fixedpoint", "--h", "0.2", "--eps", "0.1", "--out", str(tmp_path)]) == 2
    assert dispatch(["fixedpoint", "--out", str(tmp_path)]) == 2
    assert dispatch(["fit", "--out", str(tmp_path)]) == 2
    # a computational failure: 64 bits cannot resolve the splitting at h = 0.1
    assert dispatch(["theta", "--h", "0.1", "--bits", "64", "--out", str(tmp_path)]) == 1
    log = (tmp_path / "run.log").read_text()
    assert "reason=" in log


def test_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"[run]\nh = 0.3\nout = {tmp_path}\n")
    assert dispatch(["fixedpoint", "--config", str(cfg)]) == 0
    assert (tmp_path / "fixedpoint.csv").exists()
    # the flag wins over the file
    assert dispatch(["fixedpoint", "--config", str(cfg), "--eps", "0.05"]) == 0
    with open(tmp_path / "fixedpoint.csv", newline="") as fh:
        row = list(csv.DictReader(fh))[0]
    assert row["eps"].startswith("0.05")


def test_theta_end_to_end(tmp_path):
    r = _run("theta", "--h", "0.3", "--out", str(tmp_path))
    assert r.returncode == 0, r.stderr
    with open(tmp_path / "theta.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SWEEP_COLUMNS and len(rows) == 2
    assert (tmp_path / "theta.hex").exists()
    log1 = (tmp_path / "run.log").read_text().splitlines()
    _run("fixedpoint", "--h", "0.3", "--out", str(tmp_path))
    log2 = (tmp_path / "run.log").read_text().splitlines()
    assert log2[: len(log1)] == log1 and len(log2) > len(log1)


def test_sweep_is_deterministic(tmp_path):
    grid = "0.34,0.3,0.32,0.31,0.33"
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run("sweep", "--grid", grid, "--jobs", "1", "--out", str(a)).returncode == 0
    assert _run("sweep", "--grid", grid, "--jobs", "3", "--out", str(b)).returncode == 0
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    assert (a / "sweep.hex").read_bytes() == (b / "sweep.hex").read_bytes()
    assert _run("fit", "--out", str(a)).returncode == 0
    assert (a / "fit.csv").exists()


def test_manifold_and_verify(tmp_path):
    assert dispatch(["manifold", "--h", "0.5", "--out", str(tmp_path)]) == 0
    assert dispatch(["verify", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "verify.csv", newline="") as fh:
        assert all(r["passed"] == "1" for r in csv.DictReader(fh))
