"""Command-line contract: first-line verdicts, exit codes, witness replay."""

import pathlib
import subprocess
import sys

import pytest

from qcsp.cli import main
from qcsp.formulas import REL, parse_problem
from qcsp.theories import canonical_ranks, relation_for_name

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def run_cli(*argv, capsys=None):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_unsat_fixture_convex(capsys):
    code, out, _ = run_cli(
        "solve", str(FIXTURES / "pa_eq_unsat.qcsp"), "--mode", "convex", capsys=capsys
    )
    assert code == 0
    assert out.splitlines()[0] == "UNSAT"


def test_solve_nonconvex_flag_contract(capsys):
    code, _, err = run_cli(
        "solve", str(FIXTURES / "mi_nonconvex.qcsp"), "--mode", "convex", capsys=capsys
    )
    assert code == 3
    assert "convex" in err


def test_solve_empty_instance(capsys):
    code, out, _ = run_cli("solve", str(FIXTURES / "empty.qcsp"), capsys=capsys)
    assert code == 0
    assert out.splitlines()[0] == "SAT"


def test_solve_parse_error(capsys):
    code, _, err = run_cli("solve", str(FIXTURES / "bad_arity.qcsp"), capsys=capsys)
    assert code == 2
    assert "line 2" in err


def test_solve_missing_file(capsys):
    code, _, _ = run_cli("solve", str(FIXTURES / "no_such_file.qcsp"), capsys=capsys)
    assert code == 2


def test_first_line_is_verdict_everywhere(capsys):
    for name in ["pa_eq_unsat.qcsp", "mi_nonconvex.qcsp", "mi_sat.qcsp",
                 "pa_pair_sat.qcsp", "empty.qcsp"]:
        code, out, _ = run_cli("solve", str(FIXTURES / name), capsys=capsys)
        assert code == 0
        assert out.splitlines()[0] in ("SAT", "UNSAT")


def _replay_witness(problem, out: str) -> bool:
    lines = out.splitlines()
    assert lines[0] == "SAT"
    arrangement: dict[str, int] = {}
    models: dict[str, dict[str, str]] = {}
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "arrangement":
            arrangement[parts[1]] = int(parts[2])
        elif parts[0] == "model":
            models.setdefault(parts[1], {})[parts[2]] = parts[3]
    for atom in problem.instance.atoms:
        if atom.kind == REL:
            tid = atom.symbol.theory_id
            values = models[tid]
            kind = problem.theories[tid].kind
            if kind in ("point_algebra", "temporal"):
                relation = problem.relations.get(
                    (tid, atom.symbol.name)
                ) or relation_for_name(atom.symbol.name)
                ranks = tuple(int(values[v]) for v in atom.args)
                if canonical_ranks(ranks) not in relation.allowed:
                    return False
            elif kind == "henson":
                if values[atom.args[0]] == values[atom.args[1]]:
                    return False
        else:
            for values in models.values():
                if all(v in values for v in atom.args):
                    same = values[atom.args[0]] == values[atom.args[1]]
                    if atom.kind == "eq" and not same:
                        return False
                    if atom.kind == "neq" and same:
                        return False
    for tid, values in models.items():
        shared_here = [v for v in arrangement if v in values]
        for i in range(len(shared_here)):
            for j in range(i + 1, len(shared_here)):
                u, v = shared_here[i], shared_here[j]
                if arrangement[u] == arrangement[v] and values[u] != values[v]:
                    return False
    return True


def test_witness_replays_end_to_end(capsys):
    for name in ["mi_sat.qcsp", "pa_pair_sat.qcsp"]:
        path = FIXTURES / name
        code, out, _ = run_cli("solve", str(path), "--witness", capsys=capsys)
        assert code == 0
        problem = parse_problem(path.read_text())
        assert _replay_witness(problem, out)


def test_parallel_flag_same_verdict(capsys):
    for name in ["mi_sat.qcsp", "mi_nonconvex.qcsp", "pa_pair_sat.qcsp"]:
        _, out1, _ = run_cli("solve", str(FIXTURES / name), capsys=capsys)
        _, out2, _ = run_cli(
            "solve", str(FIXTURES / name), "--parallel", capsys=capsys
        )
        assert out1.splitlines()[0] == out2.splitlines()[0]


def test_oracle_command(capsys):
    code, out, _ = run_cli("oracle", str(FIXTURES / "mi_nonconvex.qcsp"), capsys=capsys)
    assert code == 0
    assert out.splitlines()[0] == "UNSAT"


def test_oracle_bound_exit_code(tmp_path, capsys):
    lines = ["theory t1 point_algebra"]
    for i in range(9):
        lines.append(f"atom t1 leq v{i} v{i+1}")
    path = tmp_path / "big.qcsp"
    path.write_text("\n".join(lines) + "\n")
    code, _, err = run_cli("oracle", str(path), capsys=capsys)
    assert code == 4
    assert "bound" in err


def test_henson_subcommands(capsys):
    code, out, _ = run_cli("henson", "solve", str(FIXTURES / "henson_c3.qcsp"), capsys=capsys)
    assert code == 0 and out.splitlines()[0] == "UNSAT"
    code, out, _ = run_cli(
        "henson", "reduce-down", str(FIXTURES / "henson_loops.qcsp"), capsys=capsys
    )
    assert code == 0 and out.splitlines()[0] == "UNSAT"
    code, out, _ = run_cli(
        "henson", "reduce-up", str(FIXTURES / "henson_c3.qcsp"), capsys=capsys
    )
    assert code == 0
    reduced = parse_problem(out)
    base = parse_problem((FIXTURES / "henson_c3.qcsp").read_text())
    assert len(reduced.instance.atoms) == len(base.instance.atoms) + 1 + len(
        base.instance.variables
    )


def test_henson_reduce_down_witness(capsys):
    code, out, _ = run_cli(
        "henson", "reduce-down", str(FIXTURES / "henson_c3.qcsp"), "--witness",
        capsys=capsys,
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "SAT"
    values = {}
    for line in lines[1:]:
        _, _, var, value = line.split()
        values[var] = value
    # the whole triangle maps to the loop vertex
    assert set(values.values()) == {"a"}


def test_cross_check_command(capsys):
    code, out, _ = run_cli(
        "cross-check", str(FIXTURES / "cross_formula.qcsp"), "--free", "x,y,u,v",
        capsys=capsys,
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "pass"
    assert "cond1 true" in lines and "cond3 true" in lines


def test_probe_command_small(capsys):
    code, out, _ = run_cli(
        "probe-convexity", str(FIXTURES / "temporal_sig.qcsp"),
        "--max-vars", "3", "--max-atoms", "3", "--exhaustive", capsys=capsys,
    )
    assert code == 0
    assert out.splitlines()[0] == "none"


def test_unknown_flag_is_an_error():
    with pytest.raises(SystemExit):
        main(["solve", str(FIXTURES / "empty.qcsp"), "--frobnicate"])


def test_bench_rows_and_seed_determinism(tmp_path, capsys):
    out_path = tmp_path / "bench.csv"
    code, out, _ = run_cli("bench", "--seed", "1", "--out", str(out_path), capsys=capsys)
    assert code == 0
    rows = out_path.read_text().strip().splitlines()
    assert len(rows) == 11  # header + 2 families x 5 sizes
    verdict_cols = [r.rsplit(",", 1)[-1] for r in rows[1:]]
    assert all(v == "yes" for v in verdict_cols)
    code, _, _ = run_cli("bench", "--seed", "1", "--out", str(out_path), capsys=capsys)
    rows_again = out_path.read_text().strip().splitlines()
    stable = [r.rsplit(",", 2)[0] for r in rows]  # drop median_ms and agree
    stable_again = [r.rsplit(",", 2)[0] for r in rows_again]
    assert stable == stable_again


def test_bench_write_failure(tmp_path, capsys):
    code, _, err = run_cli(
        "bench", "--seed", "1", "--out", str(tmp_path / "nodir" / "x.csv"),
        capsys=capsys,
    )
    assert code == 5
    assert "write error" in err


def test_console_script_runs():
    result = subprocess.run(
        [sys.executable, "-m", "qcsp.cli", "solve", str(FIXTURES / "empty.qcsp")],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert result.stdout.splitlines()[0] == "SAT"
