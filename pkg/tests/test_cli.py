import csv
import io
import json

import pytest

from rieszlab.cli import EXIT_CONFIG, EXIT_MATH, EXIT_OK, build_config, main
from rieszlab.errors import ConfigError


def run(tmp_path, *argv):
    code = main([*argv, "--out-dir", str(tmp_path), "-q"])
    return code


def read_csv(path):
    lines = path.read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    meta = dict(ln[2:].split(": ", 1) for ln in lines if ln.startswith("# "))
    return list(csv.DictReader(io.StringIO("\n".join(body)))), meta


def test_riesz_norm_columns(tmp_path):
    assert run(tmp_path, "riesz-norm", "--s-max", "4") == EXIT_OK
    rows, meta = read_csv(tmp_path / "riesz_norm.csv")
    assert [int(r["s"]) for r in rows] == [1, 2, 3, 4]
    for r in rows:
        assert float(r["product_norm"]) == pytest.approx(1.0, abs=1e-6)
        assert float(r["r_norm"]) <= 2.0 + 1e-6
    assert meta["seed"] == "0" and meta["version"] and meta["config_hash"]
    assert json.loads(meta["config"])["s_max"] == 4


def test_csv_header_then_metadata_block(tmp_path):
    run(tmp_path, "classify", "--symbol", "gaussian")
    lines = (tmp_path / "classify.csv").read_text().splitlines()
    assert lines[0].startswith("symbol,case")
    first_meta = next(i for i, ln in enumerate(lines) if ln.startswith("#"))
    assert all(ln.startswith("#") for ln in lines[first_meta:])


def test_classify_expression(tmp_path):
    assert run(tmp_path, "classify", "--symbol", "exp(-(x*x+y*y))") == EXIT_OK
    payload = json.loads((tmp_path / "classify.json").read_text())
    assert payload["result"]["classification"]["case"] == "StarCondition"


@pytest.mark.parametrize(
    "argv",
    [
        ["scheme", "--N", "0"],
        ["riesz-norm", "--s-min", "5", "--s-max", "2"],
        ["classify", "--symbol", "x +* y"],
        ["scheme", "--case", "IIc"],
        ["z-growth", "--builder", "Nope"],
        ["witness", "--no-such-flag"],
    ],
)
def test_bad_config_exits_2_without_output(tmp_path, argv):
    assert run(tmp_path, *argv) == EXIT_CONFIG
    assert not list(tmp_path.iterdir())


def test_malformed_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    out = tmp_path / "out"
    assert main(["riesz-norm", "--config", str(cfg), "--out-dir", str(out), "-q"]) == EXIT_CONFIG
    assert not out.exists()


def test_unknown_key_in_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"s_maximum": 3}))
    out = tmp_path / "out"
    assert main(["riesz-norm", "--config", str(cfg), "--out-dir", str(out), "-q"]) == EXIT_CONFIG


def test_flags_override_config_file():
    cfg = build_config("z-growth", {"s_max": 3, "quadrature": {"mode": "mc"}}, {"s_max": 2})
    assert cfg["s_max"] == 2 and cfg["quadrature"] == {"mode": "mc", "grid_n": None, "samples": 1_000_000}
    with pytest.raises(ConfigError):
        build_config("z-growth", {"quadrature": {"mode": "fast"}}, {})


def test_math_failure_exits_1(tmp_path):
    # the Gaussian has no oscillation, so no IIa scheme exists
    assert run(tmp_path, "scheme", "--symbol", "gaussian", "--case", "IIa") == EXIT_MATH
    assert not list(tmp_path.iterdir())


def test_scheme_roundtrip_through_file(tmp_path):
    a = tmp_path / "a"
    assert run(a, "scheme", "--s", "2", "--rational") == EXIT_OK
    scheme = json.loads((a / "scheme.json").read_text())["result"]["scheme"]
    f = tmp_path / "scheme_in.json"
    f.write_text(json.dumps(scheme))
    b = tmp_path / "b"
    assert run(b, "scheme", "--scheme-file", str(f)) == EXIT_OK
    rows, _ = read_csv(b / "scheme.csv")
    ok = {r["condition"]: r["ok"] for r in rows}
    assert all(ok[c] == "True" for c in "ABCDEFGHI")


def test_z_growth_and_transfer_check(tmp_path):
    assert run(tmp_path, "z-growth", "--s-max", "3") == EXIT_OK
    rows, _ = read_csv(tmp_path / "z_growth.csv")
    assert float(rows[0]["norm"]) == pytest.approx(0.6366, abs=1e-3)
    assert run(tmp_path, "transfer-check", "--s", "2", "--plane-samples", "20000", "--points", "30") == EXIT_OK
    rows, _ = read_csv(tmp_path / "transfer_check.csv")
    vals = {r["quantity"]: float(r["value"]) for r in rows}
    assert vals["identity_residual_max"] <= 1e-9
    assert vals["H_inv_ft_norm"] <= 2.0


WITNESS = ["witness", "--s-min", "2", "--s-max", "3", "--torus-samples", "20000", "--plane-samples", "20000",
           "--seed", "11", "--c-hat", "0.346"]


def test_witness_byte_identical_reruns(tmp_path):
    assert run(tmp_path / "a", *WITNESS) == EXIT_OK
    assert run(tmp_path / "b", *WITNESS) == EXIT_OK
    for name in ("witness.csv", "witness.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows, meta = read_csv(tmp_path / "a" / "witness.csv")
    assert len(rows) == 2 and meta["seed"] == "11"


def test_wall_time_is_opt_in(tmp_path):
    main(["classify", "--out-dir", str(tmp_path), "-q", "--wall-time"])
    _, meta = read_csv(tmp_path / "classify.csv")
    assert "wall_time_s" in meta


def test_progress_goes_to_stderr(tmp_path, capsys):
    main(["riesz-norm", "--s-max", "2", "--out-dir", str(tmp_path)])
    out, err = capsys.readouterr()
    assert out == (tmp_path / "riesz_norm.csv").read_text()
    assert "s=2" in err
