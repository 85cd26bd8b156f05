"""
Tests for the command line surface and report rendering
"""

import argparse
import json

import pytest

from app.api.commands import build_parser, integer, main
from app.core.errors import EXIT_OK, EXIT_PRECONDITION
from app.models.schemas import Report
from app.services.experiments import SCHEMAS
from app.services.report import format_cell, render_csv, render_json


def run(capsys, *argv):
    status = main(["--threads", "1", *argv])
    captured = capsys.readouterr()
    return status, captured.out, captured.err


class TestParsing:
    """Test cases for argument parsing"""

    @pytest.mark.parametrize("text, expected", [("12", 12), ("1_000", 1000), ("1e5", 100000), ("-3", -3)])
    def test_integer_literals(self, text, expected):
        """Test that underscores and whole scientific literals are accepted"""
        assert integer(text) == expected

    def test_fractional_integer_rejected(self):
        """Test that 1.5 is not an integer"""
        with pytest.raises(Exception):
            integer("1.5")

    @pytest.mark.parametrize("text, expected", [
        ("9007199254740993.0", 9007199254740993),
        ("1.8e19", 18_000_000_000_000_000_000),
        ("25e-1", None),
        ("inf", None),
        ("1e500", None),
    ])
    def test_scientific_literals_are_exact(self, text, expected):
        """Test that whole literals above 2^53 keep every digit and others are rejected"""
        if expected is None:
            with pytest.raises(argparse.ArgumentTypeError):
                integer(text)
        else:
            assert integer(text) == expected

    def test_missing_required_flag(self):
        """Test that a missing flag is a usage error"""
        with pytest.raises(SystemExit) as info:
            main(["occurs", "--m", "3"])
        assert info.value.code == 2

    def test_unknown_command(self):
        """Test that an unknown subcommand is a usage error"""
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == 2

    def test_curve_coefficients_go_together(self):
        """Test that --a without --b is a usage error"""
        with pytest.raises(SystemExit) as info:
            main(["curves", "--p", "7", "--a", "1"])
        assert info.value.code == 2

    def test_every_schema_has_a_subcommand(self):
        """Test that the parser exposes every documented subcommand"""
        parser = build_parser()
        choices = parser._subparsers._group_actions[0].choices
        assert set(choices) == set(SCHEMAS)


class TestCommands:
    """Test cases for end-to-end subcommands"""

    def test_occurs_json(self, capsys):
        """Test the Z/11 x Z/11 verdict as JSON"""
        status, out, _ = run(capsys, "--format", "json", "occurs", "--m", "11", "--k", "1", "--witnesses")
        assert status == EXIT_OK
        assert json.loads(out) == [{"m": 11, "k": 1, "occurs": False, "witnesses": [], "candidates": [111, 122, 133]}]

    def test_occurs_base_case(self, capsys):
        """Test that 2 and 3 witness the trivial group"""
        status, out, _ = run(capsys, "--format", "json", "occurs", "--m", "1", "--k", "1", "--witnesses")
        assert status == EXIT_OK
        assert json.loads(out)[0]["witnesses"] == [2, 3]

    def test_count_csv(self, capsys):
        """Test #S(2,1) as CSV"""
        status, out, _ = run(capsys, "count", "--max-m", "2", "--max-k", "1")
        assert status == EXIT_OK
        assert out == "M,K,count,strategy\n2,1,2,direct\n"

    def test_verify_ruck(self, capsys):
        """Test that every prime up to 50 verifies"""
        status, out, _ = run(capsys, "verify-ruck", "--p-max", "50")
        assert status == EXIT_OK
        lines = out.strip().split("\n")
        assert lines[0] == "p,orders,shapes,status"
        assert len(lines) == 1 + 13  # primes 5..47
        assert all(line.endswith(",OK") for line in lines[1:])

    def test_fund_disc(self, capsys):
        """Test the conductor decomposition of 12"""
        _, out, _ = run(capsys, "fund-disc", "--d", "12")
        assert out == "d,d1,a\n12,3,2\n"

    def test_float_formatting(self, capsys):
        """Test that reals carry 12 significant digits"""
        _, out, _ = run(capsys, "euler-product", "--d", "4", "--y", "10")
        assert out.strip().split("\n")[1].split(",")[-1] == "1.21904761905"

    def test_singular_curve_exit_code(self, capsys):
        """Test that a singular curve exits with the precondition status"""
        status, out, err = run(capsys, "curves", "--p", "7", "--a", "0", "--b", "0")
        assert status == EXIT_PRECONDITION
        assert out == ""
        assert "singular" in err

    def test_memory_budget_exit_code(self, capsys):
        """Test that an exceeded bitset budget exits with the precondition status"""
        status, _, err = run(capsys, "--mem-budget", "10", "count", "--max-m", "100", "--max-k", "100", "--strategy", "prime_driven")
        assert status == EXIT_PRECONDITION
        assert "bytes" in err

    def test_invalid_residue_exit_code(self, capsys):
        """Test that gcd(a, q) > 1 exits with the precondition status"""
        status, _, _ = run(capsys, "discrepancy", "--y", "0", "--h", "10", "--q", "6", "--a", "3")
        assert status == EXIT_PRECONDITION

    def test_output_file(self, capsys, tmp_path):
        """Test that --output writes the report with LF endings and nothing on stdout"""
        target = tmp_path / "nested" / "rho.csv"
        status, out, _ = run(capsys, "--output", str(target), "rho", "--k", "1", "--j", "0", "--d", "2")
        assert status == EXIT_OK
        assert out == ""
        assert target.read_bytes() == b"k,j,d,rho,rho_brute\n1,0,2,1,1\n"

    @pytest.mark.parametrize("argv", [
        ["occurs", "--m", "3", "--k", "2"],
        ["count-r", "--max-m", "6", "--max-k", "6"],
        ["density-scan", "--max-m", "5", "--k-grid", "1,2,5"],
        ["shapes-for-prime", "--p", "13", "--max-m", "4"],
        ["window-count", "--m", "2", "--k", "3"],
        ["heuristic", "--max-m", "4", "--max-k", "4"],
        ["ratios", "--max-m", "5", "--max-k", "5"],
        ["curves", "--p", "7", "--a", "1", "--b", "1"],
        ["m-of-g", "--m", "2", "--k", "1"],
        ["aut", "--m", "2", "--k", "3", "--method", "brute"],
        ["cl-ratio", "--m", "1", "--k", "5"],
        ["sieve", "--k", "1", "--j", "0", "--max-m", "100", "--y", "7"],
        ["legendre", "--k", "2", "--j", "1", "--max-m", "200", "--y", "13"],
        ["t-sum", "--d", "3", "--max-k", "10"],
        ["discrepancy", "--y", "0", "--h", "100"],
        ["pi-discrepancy", "--x", "1000", "--q", "4", "--a", "3"],
        ["l1", "--d", "3", "--terms", "1000"],
    ])
    def test_header_matches_schema(self, capsys, argv):
        """Test that every subcommand's CSV header is its documented schema"""
        status, out, _ = run(capsys, *argv)
        assert status == EXIT_OK
        assert out.split("\n")[0] == ",".join(SCHEMAS[argv[0]])

    @pytest.mark.parametrize("argv", [
        ["count", "--max-m", "40", "--max-k", "40", "--strategy", "prime_driven"],
        ["verify-ruck", "--p-max", "40"],
        ["ratios", "--max-m", "30", "--max-k", "30"],
    ])
    def test_worker_count_does_not_change_output(self, capsys, argv):
        """Test byte-identical output at one, four and eight workers"""
        outputs = []
        for threads in ("1", "4", "8"):
            assert main(["--threads", threads, *argv]) == EXIT_OK
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1] == outputs[2]

    @pytest.mark.slow
    @pytest.mark.parametrize("argv", [
        ["count", "--max-m", "300", "--max-k", "300"],
        ["verify-ruck", "--p-max", "100"],
        ["ratios", "--max-m", "10", "--max-k", "100000"],
        ["ratios", "--max-m", "10000", "--max-k", "4"],
    ])
    def test_worker_count_does_not_change_full_output(self, capsys, argv, fresh_cache):
        """Test byte-identical desk-scale output at one, four and eight workers"""
        outputs = []
        for threads in ("1", "4", "8"):
            fresh_cache.clear_all()
            assert main(["--threads", threads, *argv]) == EXIT_OK
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1] == outputs[2]


class TestReport:
    """Test cases for report rendering"""

    def test_cell_formatting(self):
        """Test booleans, lists, reals and missing values"""
        assert format_cell(True) == "true"
        assert format_cell([2, 3]) == "2 3"
        assert format_cell(1 / 3) == "0.333333333333"
        assert format_cell(None) == ""

    def test_json_keeps_schema_order(self):
        """Test that JSON objects follow the column order"""
        report = Report(command="t", columns=["b", "a"], rows=[{"b": 1, "a": 2.0}])
        assert render_json(report).index('"b"') < render_json(report).index('"a"')
        assert render_csv(report) == "b,a\n1,2\n"

    def test_row_schema_enforced(self):
        """Test that rows must carry exactly the schema columns"""
        with pytest.raises(Exception):
            Report(command="t", columns=["a", "b"], rows=[{"b": 1, "a": 2}])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
