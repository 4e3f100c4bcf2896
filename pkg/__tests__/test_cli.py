"""
Unit tests for kernbound.cli module.

Tests cover:
- Statement coverage for each subcommand through click's CliRunner
- Branch coverage for flag-to-config mapping
- Error handling verification (exit codes 1, 2 and 3)
"""
import json

import click
import pytest
from click.testing import CliRunner

from kernbound.cli import _rho, cli, overrides_from
from kernbound.verify import VerifyReport

CONFIG = "__fixtures__/config.yaml"


def _document(output: str) -> dict:
    """The pretty-printed report spans from a lone '{' line to the last lone '}' line."""
    lines = output.splitlines()
    start = lines.index("{")
    end = len(lines) - 1 - lines[::-1].index("}")
    return json.loads("\n".join(lines[start:end + 1]))


@pytest.fixture
def invoke(in_repo_root):
    runner = CliRunner()

    def _invoke(*args):
        return runner.invoke(cli, list(args), catch_exceptions=False)
    return _invoke


class TestOverrides:
    """Tests for overrides_from and _rho."""

    # =========================================================================
    # Statement Coverage
    # =========================================================================

    class TestStatementCoverage:
        """Flag mapping."""

        def test_unset_flags_dropped(self):
            """Only flags that were given become overrides."""
            overrides = overrides_from({"rho": "0.5", "trials": None, "family": "l2"}, {"bound.r": None, "sweep.p_values": ()})
            assert overrides == {"margin.rho": 0.5, "family": "l2"}

    # =========================================================================
    # Branch Coverage
    # =========================================================================

    class TestBranchCoverage:
        """rho parsing."""

        @pytest.mark.parametrize("value, expected", [("max", "max"), ("0.25", 0.25), (None, None)])
        def test_rho_values(self, value, expected):
            """Numbers, 'max' and absence."""
            assert _rho(value) == expected

        def test_rho_rejects_words(self):
            """Anything else is a bad parameter."""
            with pytest.raises(click.BadParameter):
                _rho("big")


class TestCommands:
    """Tests for the click commands."""

    # =========================================================================
    # Statement Coverage
    # =========================================================================

    class TestStatementCoverage:
        """Successful runs print the report."""

        def test_version(self, invoke):
            """--version prints the tool name."""
            result = invoke("--version")
            assert result.exit_code == 0
            assert "kernbound" in result.output

        def test_bound(self, invoke):
            """Trace bound at r = 4 from flags."""
            result = invoke("bound", "--config", CONFIG, "--form", "trace", "--r", "4", "--log-level", "error")
            assert result.exit_code == 0
            doc = _document(result.output)
            assert doc["command"] == "bound"
            assert doc["result"]["form"] == "trace"
            assert doc["result"]["r"] == 4
            assert doc["config"]["bound"]["r"] == 4

        def test_estimate_exact(self, invoke):
            """Exact enumeration over the fixture sample."""
            result = invoke("estimate", "--config", CONFIG, "--method", "exact", "--family", "l2", "--log-level", "error")
            assert result.exit_code == 0
            doc = _document(result.output)
            assert doc["result"]["method"] == "exactEnumeration"
            assert doc["result"]["family"] == "L2"

        def test_sweep_without_data(self, invoke, tmp_path):
            """A data-free sweep writes JSON and CSV files."""
            out = tmp_path / "sweep"
            result = invoke("sweep", "--m", "100", "--r2", "1", "--p", "1", "--p", "16", "--out", str(out), "--log-level", "error")
            assert result.exit_code == 0
            assert len(_document(result.output)["result"]["rows"]) == 8
            assert sorted(path.suffix for path in out.iterdir()) == [".csv", ".json"]

        def test_train_then_certify(self, invoke, tmp_path):
            """A trained model can be certified at its maximal margin."""
            model = str(tmp_path / "model.json")
            trained = invoke("train", "--config", CONFIG, "--model", model, "--log-level", "error")
            assert trained.exit_code == 0
            certified = invoke("certify", "--config", CONFIG, "--model", model, "--rho", "max", "--bound", "trace", "--log-level", "error")
            assert certified.exit_code == 0
            doc = _document(certified.output)
            assert doc["result"]["bound_choice"] == "trace(r=2)"
            assert doc["result"]["total"] > 0

    # =========================================================================
    # Branch Coverage
    # =========================================================================

    class TestBranchCoverage:
        """Output files."""

        def test_out_reports_artifact(self, invoke, tmp_path):
            """--out writes a hashed report file and names it."""
            result = invoke("bound", "--config", CONFIG, "--out", str(tmp_path), "--log-level", "error")
            assert result.exit_code == 0
            written = list(tmp_path.glob("bound-*.json"))
            assert len(written) == 1
            assert f"wrote {written[0]}" in result.output

    # =========================================================================
    # Error Handling
    # =========================================================================

    class TestErrorHandling:
        """Exit codes."""

        def test_verify_failure_exits_one(self, invoke, monkeypatch):
            """Failed sweeps exit 1."""
            monkeypatch.setattr(
                "kernbound.sdk.run_verification",
                lambda seed, threads: VerifyReport(seed=seed, all_passed=False, checks=[]),
            )
            result = invoke("verify", "--log-level", "error")
            assert result.exit_code == 1
            assert _document(result.output)["result"]["all_passed"] is False

        def test_config_error_exits_two(self, invoke):
            """Invalid config values exit 2 with the offending line."""
            result = invoke("estimate", "--config", "__fixtures__/bad_config.yaml", "--log-level", "error")
            assert result.exit_code == 2
            assert "line 3" in result.output

        def test_bad_data_exits_three(self, invoke):
            """Unreadable data exits 3."""
            bad = invoke("estimate", "--config", CONFIG, "--config", "__fixtures__/bad_data_config.yaml", "--log-level", "error")
            assert bad.exit_code == 3
            assert "ERR_DATA" in bad.output

        def test_non_utf8_data_exits_three(self, invoke, tmp_path):
            """A data file that is not UTF-8 exits 3 instead of raising."""
            data = tmp_path / "latin.csv"
            data.write_bytes(b"1.0,2.0,1\n\xff\xfe,3.0,-1\n")
            layer = tmp_path / "data.yaml"
            layer.write_text(f"data.path: {json.dumps(str(data))}\n")
            result = invoke("bound", "--config", CONFIG, "--config", str(layer), "--log-level", "error")
            assert result.exit_code == 3
            assert "not valid UTF-8" in result.output

        def test_unknown_family_flag(self, invoke):
            """click rejects unknown choices with exit 2."""
            result = invoke("bound", "--family", "l3")
            assert result.exit_code == 2
