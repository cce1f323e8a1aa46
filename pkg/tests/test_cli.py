"""Config parsing, CSV emission, and the compare command."""

import json
from pathlib import Path

import pytest

from iasim import NetworkConfig
from iasim.cli import (
    config_digest,
    emit_config,
    main,
    parse_config,
)
from iasim.exceptions import ParseError


def test_config_round_trip(tmp_path: Path):
    cfg = NetworkConfig(n_cells=3, n_ant=2, n_sub=2, kappa=0.25,
                        inr_rem=1e-7, poisson_users=True)
    path = tmp_path / "net.cfg"
    path.write_text(emit_config(cfg))
    assert parse_config(path) == cfg
    assert config_digest(parse_config(path)) == config_digest(cfg)


def test_config_comments_whitespace_and_none(tmp_path: Path):
    path = tmp_path / "net.cfg"
    path.write_text(
        "# propagation\n"
        "n_cells = 3   # trailing comment\n"
        "\n"
        "  n_ant=2\n"
        "inr_rem = none\n"
        "sector_masks = yes\n"
    )
    cfg = parse_config(path)
    assert cfg.n_cells == 3 and cfg.n_ant == 2
    assert cfg.inr_rem is None
    assert cfg.sector_masks is True


def test_config_errors_carry_line_numbers(tmp_path: Path):
    path = tmp_path / "bad.cfg"
    path.write_text("n_cells = 3\nbandwidth = 20\n")
    with pytest.raises(ParseError, match="bad.cfg:2"):
        parse_config(path)
    path.write_text("n_cells = seven\n")
    with pytest.raises(ParseError, match="expected an integer"):
        parse_config(path)
    path.write_text("just some text\n")
    with pytest.raises(ParseError, match="key = value"):
        parse_config(path)
    with pytest.raises(ParseError, match="cannot read"):
        parse_config(tmp_path / "missing.cfg")


def _tiny_run(tmp_path: Path, out: str = "out", schemes=("IA_MMSE", "OFDM_REF")):
    cfg_file = tmp_path / "net.cfg"
    cfg_file.write_text(emit_config(
        NetworkConfig(n_cells=2, n_ues_per_cell=3, n_ant=2, n_sub=1, n_freed=1)
    ))
    argv = ["run", "--config", str(cfg_file), "--out", str(tmp_path / out),
            "--scenarios", "2", "--transmissions", "3"]
    for s in schemes:
        argv += ["--scheme", s]
    assert main(argv) == 0
    return tmp_path / out


def test_run_writes_csvs_and_manifest(tmp_path: Path, capsys):
    out = _tiny_run(tmp_path)
    for name in ("se_vs_sinr.csv", "geometry_cdf.csv", "counters.csv"):
        text = (out / name).read_text()
        assert text.startswith("# config_sha256=")

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schemes"] == ["IA_MMSE", "OFDM_REF"]
    assert manifest["n_scenarios"] == 2
    assert manifest["bin_width_db"] == 1.0
    assert manifest["kernel_backend"] in ("native", "fallback")
    assert set(manifest["max_stream_rate"]) == {"IA_MMSE", "OFDM_REF"}

    lines = (out / "se_vs_sinr.csv").read_text().splitlines()
    assert lines[1] == "scheme,kappa,sinr_bin_db,mean_se_bps_hz,n_ue"
    assert any(ln.startswith("IA_MMSE,0,") for ln in lines[2:])
    assert capsys.readouterr().out.count("recorded UEs") == 2


def test_compare_tabulates_curves(tmp_path: Path, capsys):
    out = _tiny_run(tmp_path)
    assert main(["compare", str(out / "se_vs_sinr.csv")]) == 0
    text = capsys.readouterr().out
    assert "IA_MMSE@0" in text and "OFDM_REF@1" in text
    assert "best mean spectral efficiency" in text


def test_compare_rejects_mismatched_grids(tmp_path: Path, capsys):
    out = _tiny_run(tmp_path)
    shifted = tmp_path / "shifted.csv"
    rows = (out / "se_vs_sinr.csv").read_text().splitlines()
    moved = [rows[0], rows[1]]
    for ln in rows[2:]:
        parts = ln.split(",")
        parts[2] = str(float(parts[2]) + 0.25)
        moved.append(",".join(parts))
    shifted.write_text("\n".join(moved) + "\n")
    assert main(["compare", str(out / "se_vs_sinr.csv"), str(shifted)]) == 2
    assert "bin grids" in capsys.readouterr().err


def test_compare_rejects_non_curve_files(tmp_path: Path, capsys):
    bad = tmp_path / "other.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["compare", str(bad)]) == 2
    assert "not a curve CSV" in capsys.readouterr().err


def test_digest_tracks_config_changes():
    a = config_digest(NetworkConfig())
    b = config_digest(NetworkConfig(kappa=0.5))
    assert a != b and len(a) == 64
