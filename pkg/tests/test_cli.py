import subprocess
import sys

import numpy as np
import pytest

from ckks_fi.cli import EXIT_DETECTED, EXIT_IO, EXIT_OK, EXIT_SDC, EXIT_USAGE, main, parse_power
from ckks_fi.pgm import read_pgm, write_pgm

BITLEN = 177


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_parse_power():
    assert parse_power("2^40") == 2**40
    assert parse_power("2**20") == 2**20
    assert parse_power("1024") == 1024


def test_roundtrip_passes(capsys):
    code, out = run_cli(capsys, "roundtrip", "--n", "4", "--delta", "2^40", "--seed", "1")
    assert code == EXIT_OK
    assert out.startswith("# config: command=roundtrip ")
    assert "PASS" in out


def test_roundtrip_bad_n(capsys):
    code, _ = run_cli(capsys, "roundtrip", "--n", "3")
    assert code == EXIT_USAGE


def test_bad_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["roundtrip", "--backend", "gpu"])
    assert exc.value.code == EXIT_USAGE


def test_roundtrip_deterministic(capsys):
    first = run_cli(capsys, "roundtrip", "--n", "8", "--seed", "4")
    second = run_cli(capsys, "roundtrip", "--n", "8", "--seed", "4")
    assert first == second


def test_config_line_materializes_defaults(capsys):
    _, out = run_cli(capsys, "roundtrip")
    line = out.splitlines()[0]
    for key in ("n=4", "delta=1099511627776", "backend=textbook", "num_primes=3", "prime_bits=59", "sigma=3.2", "seed=0", "tau=2.0"):
        assert key in line.split()


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("CKKS_FI_SEED", "17")
    _, out = run_cli(capsys, "roundtrip")
    assert "seed=17" in out.splitlines()[0].split()
    _, out = run_cli(capsys, "roundtrip", "--seed", "3")
    assert "seed=3" in out.splitlines()[0].split()


def test_inject_benign(capsys):
    code, out = run_cli(capsys, "inject", "--target", "c0", "--bit", "2")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[1].startswith("backend,target,representation")
    assert ",BENIGN," in lines[2]


def test_inject_c1_top_bit_is_sdc(capsys):
    code, out = run_cli(capsys, "inject", "--target", "c1", "--bit", "150")
    assert code == EXIT_SDC
    assert ",SDC," in out


def test_inject_residue_past_q_is_detected(capsys):
    code, out = run_cli(capsys, "inject", "--backend", "rns-ntt", "--repr", "rns", "--limb", "1", "--bit", "63")
    assert code == EXIT_DETECTED
    assert ",DETECTED," in out


def test_inject_bad_address(capsys):
    assert run_cli(capsys, "inject", "--bit", "177")[0] == EXIT_USAGE
    assert run_cli(capsys, "inject", "--backend", "rns-ntt", "--repr", "big")[0] == EXIT_USAGE


def test_sweep_csv(tmp_path, capsys):
    out = tmp_path / "bits.csv"
    code, text = run_cli(capsys, "sweep", "--out", str(out))
    assert code == EXIT_OK
    assert len(out.read_text().splitlines()) == 2 * 4 * BITLEN + 1
    assert f"rows={2 * 4 * BITLEN}" in text
    first = out.read_bytes()
    run_cli(capsys, "sweep", "--out", str(out), "--jobs", "2")
    assert out.read_bytes() == first


def test_delta_sweep_csv(tmp_path, capsys):
    out = tmp_path / "deltas.csv"
    code, _ = run_cli(capsys, "delta-sweep", "--targets", "c0", "--out", str(out))
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert len(lines) == 3 * 4 * BITLEN + 1
    deltas = {line.split(",")[6] for line in lines[1:]}
    assert deltas == {str(2**20), str(2**40), str(2**50)}


def test_sweep_rns_subset(tmp_path, capsys):
    out = tmp_path / "rns.csv"
    code, _ = run_cli(
        capsys, "sweep", "--backend", "rns-ntt", "--targets", "c0", "--limbs", "0", "--bits", "0:8", "--out", str(out)
    )
    assert code == EXIT_OK
    assert len(out.read_text().splitlines()) == 4 * 8 + 1


def test_sweep_unwritable_output(tmp_path, capsys):
    code, _ = run_cli(capsys, "sweep", "--bits", "0:2", "--out", str(tmp_path / "missing" / "x.csv"))
    assert code == EXIT_IO


def test_image_commands(tmp_path, capsys, digit):
    src = tmp_path / "digit.pgm"
    write_pgm(src, digit)
    before = src.read_bytes()

    clean = tmp_path / "clean.pgm"
    code, _ = run_cli(capsys, "image", "--image", str(src), "--out", str(clean), "--no-fault")
    assert code == EXIT_OK
    assert np.max(np.abs(read_pgm(clean).astype(int) - digit)) <= 1

    bad = tmp_path / "ntt.pgm"
    table = tmp_path / "row.csv"
    code, text = run_cli(
        capsys, "image", "--image", str(src), "--out", str(bad), "--backend", "rns-ntt", "--bit", "0", "--csv", str(table)
    )
    assert code == EXIT_SDC
    dev = np.abs(read_pgm(bad).astype(int) - digit)
    assert np.mean(dev > 16) >= 0.5
    assert len(table.read_text().splitlines()) == 2
    assert src.read_bytes() == before


def test_image_missing_file(tmp_path, capsys):
    code, _ = run_cli(capsys, "image", "--image", str(tmp_path / "nope.pgm"), "--out", str(tmp_path / "o.pgm"))
    assert code == EXIT_IO


def test_image_malformed_file(tmp_path, capsys):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P7 junk")
    code, _ = run_cli(capsys, "image", "--image", str(bad), "--out", str(tmp_path / "o.pgm"))
    assert code == EXIT_IO


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ckks_fi", "inject", "--target", "c1", "--bit", "150"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == EXIT_SDC
    assert proc.stdout.startswith("# config: command=inject")
