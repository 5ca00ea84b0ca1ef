"""Tests for the flatsonium command line.

Commands run in-process through main(); result files go to tmp_path.
"""

import json
import math

import pytest

from flatsonium.cli import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_OUTPUT,
    EXIT_VERIFY,
    build_parser,
    main,
)
from flatsonium.config import PRESETS, load_config_text, resolve_config


def data_lines(path):
    """Non-comment lines of a result table, header first."""
    return [line for line in path.read_text(encoding="utf-8").splitlines() if not line.startswith("#")]


class TestParser:
    """Test argument parsing."""

    def test_common_options(self):
        args = build_parser().parse_args(["spectrum", "--preset", "fig2", "--grid-n", "11", "--dim", "40"])
        assert args.command == "spectrum"
        assert args.preset == "fig2"
        assert args.grid_n == 11
        assert args.dim == 40

    def test_unknown_command(self):
        """argparse rejects unknown commands with exit status 2."""
        with pytest.raises(SystemExit) as exc_info:
            main(["plot"])
        assert exc_info.value.code == 2

    def test_verbose_and_quiet_exclusive(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["presets", "-v", "-q"])


class TestInfoCommands:
    """Test presets and config-dump."""

    def test_presets(self, capsys):
        assert main(["presets"]) == EXIT_OK
        out = capsys.readouterr().out
        for name in PRESETS:
            assert name in out

    def test_config_dump(self, capsys):
        """The dump reloads to the effective configuration."""
        assert main(["config-dump", "--preset", "fig4b", "--grid-n", "21"]) == EXIT_OK
        dumped = load_config_text(capsys.readouterr().out)
        assert dumped == resolve_config(preset="fig4b", grid_n=21)

    def test_config_dump_to_file(self, tmp_path):
        out = tmp_path / "effective.toml"
        assert main(["config-dump", "--out", str(out)]) == EXIT_OK
        assert load_config_text(out.read_text(encoding="utf-8")) == resolve_config()


class TestSpectrumCommand:
    """Test the spectrum table."""

    def test_single_point(self, tmp_path, capsys):
        """--grid-n 1 evaluates Phi2 = 0 only."""
        out = tmp_path / "spectrum.csv"
        assert main(["spectrum", "--grid-n", "1", "--out", str(out)]) == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["rows"] == 1
        lines = data_lines(out)
        assert lines[0] == "phi2_over_phi0,phis_over_(r+1)phi0,f01,f12,f23"
        assert len(lines) == 2
        assert float(lines[1].split(",")[2]) == pytest.approx(9.41383, abs=2e-3)
        assert (tmp_path / "spectrum.gp").exists()

    def test_reproducible(self, tmp_path):
        """Two runs give byte-identical tables."""
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["spectrum", "--grid-n", "5", "--out", str(first)]) == EXIT_OK
        assert main(["spectrum", "--grid-n", "5", "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_thread_cap(self, tmp_path, monkeypatch):
        """FLATSONIUM_THREADS does not change the output."""
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        monkeypatch.setenv("FLATSONIUM_THREADS", "1")
        assert main(["spectrum", "--grid-n", "7", "--out", str(first)]) == EXIT_OK
        monkeypatch.setenv("FLATSONIUM_THREADS", "4")
        assert main(["spectrum", "--grid-n", "7", "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_metadata_header(self, tmp_path):
        out = tmp_path / "s.csv"
        main(["spectrum", "--grid-n", "2", "--out", str(out)])
        header = [line for line in out.read_text(encoding="utf-8").splitlines() if line.startswith("#")]
        assert "# command: spectrum" in header
        assert "# r: 2.0" in header


class TestDephasingCommand:
    """Test the dephasing table."""

    def test_columns(self, tmp_path, capsys):
        out = tmp_path / "dephasing.csv"
        code = main(["dephasing", "--preset", "fig4a", "--grid-n", "3", "--out", str(out)])
        assert code == EXIT_OK
        lines = data_lines(out)
        assert lines[0] == (
            "phi2_over_phi0,sens_s,sens_d,gamma_s,gamma_d,gamma_total,t_phi_seconds,"
            "t_phi_seconds_ad_1e-07,t_phi_seconds_ad_2e-06,t_phi_seconds_ad_5e-06"
        )
        assert len(lines) == 4
        summary = json.loads(capsys.readouterr().out)
        assert summary["rows"] == 3
        assert summary["overlay_a_d_phi0"] == [1e-7, 2e-6, 5e-6]

    def test_overlay_ordering(self, tmp_path):
        """Stronger uncorrelated local noise never lengthens T_phi."""
        out = tmp_path / "fig4a.csv"
        assert main(["dephasing", "--preset", "fig4a", "--grid-n", "5", "--out", str(out)]) == EXIT_OK
        for row in data_lines(out)[1:]:
            # empty cells are infinite T_phi
            cells = [float(c) if c else math.inf for c in row.split(",")]
            weak, primary, strong = cells[7], cells[6], cells[9]
            assert weak >= primary >= strong
        script = (tmp_path / "fig4a.gp").read_text(encoding="utf-8")
        assert "t_phi_seconds_ad_5e-06" in script

    def test_overlay_ignored_without_local_noise(self, tmp_path):
        """global-only mode drops the overlay columns."""
        out = tmp_path / "g.csv"
        args = ["dephasing", "--preset", "fig4a", "--mode", "global-only", "--grid-n", "2"]
        code = main(args + ["--out", str(out)])
        assert code == EXIT_OK
        assert data_lines(out)[0].endswith(",t_phi_seconds")

    def test_infinite_t_phi(self, tmp_path):
        """A flux-independent circuit writes empty T_phi cells and a notes file."""
        config = tmp_path / "run.toml"
        config.write_text("[circuit]\nej_sum_ghz = 0.0\n", encoding="utf-8")
        out = tmp_path / "flat.csv"
        assert main(["dephasing", "--config", str(config), "--grid-n", "2", "--out", str(out)]) == EXIT_OK
        rows = data_lines(out)[1:]
        assert all(row.endswith(",") for row in rows)
        assert (tmp_path / "flat.notes.txt").exists()

    def test_self_consistent(self, tmp_path):
        config = tmp_path / "run.toml"
        config.write_text("[run]\nself_consistent = true\n", encoding="utf-8")
        out = tmp_path / "sc.csv"
        assert main(["dephasing", "--config", str(config), "--grid-n", "2", "--out", str(out)]) == EXIT_OK
        assert data_lines(out)[0].endswith(",log_factor")


class TestSweetSpotsCommand:
    """Test the sweet-spot report."""

    def test_fluxonium(self, tmp_path, capsys):
        out = tmp_path / "spots.csv"
        assert main(["sweetspots", "--preset", "fluxonium", "--grid-n", "201", "--out", str(out)]) == EXIT_OK
        assert len(data_lines(out)) == 4
        assert "Numeric count 3" in capsys.readouterr().out
        script = (tmp_path / "spots.gp").read_text(encoding="utf-8")
        assert "with points" in script

    def test_grid_too_coarse(self, tmp_path):
        """The r=3 plateau pairs need more than 101 seed points."""
        out = tmp_path / "spots.csv"
        assert main(["sweetspots", "--preset", "fig3-r3", "--grid-n", "101", "--out", str(out)]) == EXIT_NUMERIC


class TestExitCodes:
    """Test error mapping to exit codes."""

    def test_unknown_config_key(self, tmp_path):
        config = tmp_path / "bad.toml"
        config.write_text("[circuit]\nej3_ghz = 1.0\n", encoding="utf-8")
        assert main(["spectrum", "--config", str(config), "--out", str(tmp_path / "s.csv")]) == EXIT_CONFIG

    def test_out_of_range_override(self, tmp_path):
        assert main(["spectrum", "--dim", "1", "--out", str(tmp_path / "s.csv")]) == EXIT_CONFIG

    def test_bad_thread_count(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FLATSONIUM_THREADS", "lots")
        assert main(["spectrum", "--grid-n", "1", "--out", str(tmp_path / "s.csv")]) == EXIT_CONFIG

    def test_unwritable_output(self, tmp_path):
        out = tmp_path / "missing" / "s.csv"
        assert main(["spectrum", "--grid-n", "1", "--out", str(out)]) == EXIT_OUTPUT


@pytest.mark.slow
class TestVerifyCommand:
    """Test the self-verification suite end to end."""

    def test_passes(self, tmp_path):
        out = tmp_path / "verify.json"
        assert main(["verify", "--out", str(out)]) == EXIT_OK
        summary = json.loads(out.read_text(encoding="utf-8"))
        assert summary["passed"]
        assert summary["verify_dim"] == 120
        assert summary["failed"] == []

    def test_low_truncation_fails(self, tmp_path):
        """dim 5 cannot converge the lowest levels."""
        out = tmp_path / "verify.json"
        assert main(["verify", "--dim", "5", "--out", str(out)]) == EXIT_VERIFY
        summary = json.loads(out.read_text(encoding="utf-8"))
        assert "truncation" in summary["failed"]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
