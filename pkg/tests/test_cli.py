import json

import numpy as np
import pytest

from backend.cli import (
    EXIT_FAILED, EXIT_OK, EXIT_USAGE, Report, build_parser, execute, output_format, parse_alpha,
    render_table,
)
from backend.engine.errors import DomainError
from backend.engine.norms import CertificateKind, NormCertificate


def run(*argv):
    report, code = execute(list(argv))
    return report, code


def test_classify_endpoint():
    report, code = run("classify", "--p", "1", "--q", "inf", "--n", "3")
    assert code == EXIT_OK
    item = report.results[0]
    assert [entry["space"]["kind"] for entry in item["ideals"]] == ["c0", "linf", "linf", "linf"]


def test_classify_forms():
    report, code = run("classify", "--p", "4", "--n", "3", "--forms")
    assert code == EXIT_OK
    assert report.results[0]["ideals"][3]["space"] == {"kind": "lu", "exponent": "4"}


def test_classify_needs_q_for_operators():
    assert run("classify", "--p", "2", "--n", "2") == (None, EXIT_USAGE)


def test_norm_l():
    report, code = run("norm", "--ideal", "L", "--p", "2", "--q", "1", "--n", "1", "--alpha", "3,4")
    assert code == EXIT_OK
    assert report.results[0]["value"] == pytest.approx(5.0)
    assert report.results[0]["kind"] == "exact"


def test_norm_nuclear_with_power_sequence():
    report, code = run("norm", "--ideal", "N", "--p", "1", "--q", "inf", "--n", "2",
                       "--alpha", "pow:1/2", "--nmax", "16")
    assert code == EXIT_OK
    assert report.results[0]["note"] == "nuclear iff alpha in c0"
    assert report.results[0]["value"] == 1.0


def test_verify_composition():
    report, code = run("verify", "--identity", "composition", "--N", "4", "--n", "3")
    assert code == EXIT_OK
    assert report.results[0]["residual"] <= 1e-9


def test_verify_bh_norm_by_enumeration():
    report, code = run("verify", "--identity", "bh-norm", "--N", "2", "--n", "3")
    assert code == EXIT_OK
    assert report.results[0]["value"] == 4.0


def test_verify_walsh_rejects_bad_dimension():
    assert run("verify", "--identity", "walsh", "--N", "3")[1] == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ["certify", "--kind", "ext-upper-linf", "--p", "3/2", "--q", "1", "--n", "2", "--alpha", "1,1/2,1/4"],
    ["certify", "--kind", "ext-upper-sqrt", "--p", "3/2", "--n", "3", "--alpha", "1,1"],
    ["certify", "--kind", "nuclear-factor", "--p", "4/3", "--q", "4", "--n", "2", "--alpha", "1,1"],
    ["certify", "--kind", "integral-dual", "--p", "2", "--q", "2", "--n", "2", "--alpha", "1,-2"],
    ["certify", "--kind", "phi-bound", "--N", "2", "--n", "3"],
    ["certify", "--kind", "ext-endpoint", "--p", "1", "--q", "3", "--n", "2", "--alpha", "7,-1"],
    ["certify", "--kind", "ext-diagnostic", "--p", "3/2", "--q", "1", "--n", "3", "--alpha", "1,1,1,1"],
    ["certify", "--kind", "identification", "--p", "3/2", "--q", "2", "--n", "2", "--alpha", "1,2,3"],
])
def test_certify_kinds(argv):
    report, code = execute(argv)
    assert code == EXIT_OK
    assert report.results


def test_certify_outside_domain_is_usage_error():
    argv = ["certify", "--kind", "nuclear-factor", "--p", "1", "--q", "2", "--n", "2", "--alpha", "1"]
    assert execute(argv) == (None, EXIT_USAGE)


def test_table_rows():
    report, code = run("table", "--p", "3", "--q", "1")
    assert code == EXIT_OK
    assert report.results[0]["table2"] == "I = E ≠ L"
    assert report.results[0]["consistent"]
    assert "Table 2: I = E ≠ L" in render_table(report)


def test_growth():
    report, code = run("growth", "--p", "inf", "--q", "1", "--n", "1", "--ideal", "L", "--s", "0.9")
    assert code == EXIT_OK
    assert report.results[0]["bounded"] is False


def test_growth_s_is_not_read_as_a_global_prefix():
    args = build_parser().parse_args(["--seed", "3", "growth", "--p", "inf", "--q", "1", "--n", "1",
                                      "--ideal", "L", "--s", "0.9"])
    assert (args.s, args.seed, args.save) == ("0.9", 3, False)
    assert execute(["--sa", "table", "--p", "2", "--q", "2"]) == (None, EXIT_USAGE)


@pytest.mark.parametrize("argv", [
    ["classify", "--p", "1", "--q", "inf", "--n", "3", "--bogus"],
    ["frobnicate"],
    [],
    ["norm", "--ideal", "E", "--p", "2", "--q", "2", "--n", "1", "--alpha", "1"],
    ["classify", "--p", "1/2", "--q", "2", "--n", "2"],
])
def test_usage_errors(argv):
    assert execute(argv) == (None, EXIT_USAGE)


def test_failed_verification_exits_1(monkeypatch):
    from backend import cli
    monkeypatch.setattr(cli, "vertex_bruteforce_norm",
                        lambda form: NormCertificate(3.0, CertificateKind.EXACT, "vertex"))
    report, code = run("verify", "--identity", "bh-norm", "--N", "2", "--n", "3")
    assert code == EXIT_FAILED
    assert report.exit_code == EXIT_FAILED
    assert report.results[0]["residual"] == 1.0
    assert "[FAIL] bh-norm" in render_table(report)


def test_json_is_byte_identical_for_identical_inputs():
    argv = ["--format", "json", "certify", "--kind", "phi-bound", "--N", "8", "--n", "3"]
    first, _ = execute(argv)
    second, _ = execute(argv)
    assert render_table(first, "json") == render_table(second, "json")
    assert "wall_time" not in json.loads(first.dumps())


def test_timing_is_opt_in():
    report, _ = run("--timing", "table", "--p", "2", "--q", "2")
    assert report.to_json()["wall_time"] >= 0


def test_report_round_trip():
    report, _ = run("classify", "--p", "3/2", "--q", "3/2", "--n", "2")
    again = Report.from_json(report.dumps())
    assert again == report
    assert again.dumps() == report.dumps()


def test_seed_is_echoed():
    report, _ = run("--seed", "42", "table", "--p", "2", "--q", "2")
    assert report.seed == 42
    assert json.loads(report.dumps())["seed"] == 42


def test_empty_report_renders_valid_json():
    data = json.loads(render_table(Report(command="table"), "json"))
    assert data["results"] == []


def test_bracket_renders_in_text():
    report, _ = run("classify", "--p", "3/2", "--q", "3/2", "--n", "2")
    assert "ℓ_{3/2} ⊆ E ⊆ ℓ_{3+ε}" in render_table(report, "text")


def test_output_format():
    assert output_format(["--format", "json", "table"]) == "json"
    assert output_format(["--format=json", "table"]) == "json"
    assert output_format(["table"]) == "text"


def test_parse_alpha():
    np.testing.assert_allclose(parse_alpha("1/2,-1/4,3"), [0.5, -0.25, 3.0])
    np.testing.assert_allclose(parse_alpha("pow:1", 4), [1, 1 / 2, 1 / 3, 1 / 4])
    with pytest.raises(DomainError):
        parse_alpha("pow:1")
    with pytest.raises(DomainError):
        parse_alpha("  ")


def test_save_archives_report(archive):
    report, code = run("--save", "table", "--p", "2", "--q", "2")
    assert code == EXIT_OK
    rows = archive.get_reports()
    assert len(rows) == 1
    assert rows[0]["command"] == "table"
    assert rows[0]["payload"] == json.loads(report.dumps())
