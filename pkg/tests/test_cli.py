import json

import numpy as np
import pytest

from glra import cli
from glra.linalg import pinv, truncated_svd
from glra.matio import read_matrix, write_matrix
from glra.regression import load_model


@pytest.fixture
def fixture_files(tmp_path):
    b = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 0.0]])
    paths = {
        "M": tmp_path / "M.csv",
        "B": tmp_path / "B.csv",
        "C": tmp_path / "C.csv",
    }
    write_matrix(str(paths["M"]), np.eye(2))
    write_matrix(str(paths["B"]), b)
    write_matrix(str(paths["C"]), b.T)
    return {name: str(path) for name, path in paths.items()}


def run(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


class TestMatrixRoundTrip:
    def test_bit_exact(self, tmp_path):
        a = np.random.default_rng(0).standard_normal((6, 4)) * 1e3
        path = tmp_path / "a.csv"
        write_matrix(str(path), a)
        assert np.array_equal(read_matrix(str(path)), a)

    def test_parse_error_names_file(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,oops\n")
        from glra.linalg import InputError

        with pytest.raises(InputError, match="bad.csv"):
            read_matrix(str(path))

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1,2\n3\n")
        from glra.linalg import InputError

        with pytest.raises(InputError, match="expected 2 columns"):
            read_matrix(str(path))


class TestSolveCommand:
    def test_fixture(self, capsys, tmp_path, fixture_files):
        out = tmp_path / "xhat.csv"
        code, doc = run(
            capsys,
            [
                "solve",
                "--M", fixture_files["M"],
                "--B", fixture_files["B"],
                "--C", fixture_files["C"],
                "--rank", "1",
                "--out", str(out),
                "--no-timestamp",
            ],
        )
        assert code == 0
        assert doc["outputs"]["objective"] == pytest.approx(1.0, abs=1e-12)
        assert doc["diagnostics"]["uniqueness"] == "NonUnique"
        assert doc["diagnostics"]["minimality_defect"] < 1e-10
        x_hat = read_matrix(str(out))
        assert x_hat.shape == (3, 3)

    def test_adjoint_same_objective(self, capsys, tmp_path, fixture_files):
        args = [
            "solve",
            "--M", fixture_files["M"],
            "--B", fixture_files["B"],
            "--C", fixture_files["C"],
            "--rank", "1",
            "--out", str(tmp_path / "x.csv"),
            "--no-timestamp",
        ]
        _, primal = run(capsys, args)
        _, adjoint = run(capsys, args + ["--adjoint"])
        assert adjoint["outputs"]["objective"] == pytest.approx(
            primal["outputs"]["objective"], abs=1e-12
        )

    def test_identity_factors_write_truncation(self, capsys, tmp_path):
        m = np.random.default_rng(1).standard_normal((4, 4))
        for name, mat in (("M", m), ("B", np.eye(4)), ("C", np.eye(4))):
            write_matrix(str(tmp_path / f"{name}.csv"), mat)
        out = tmp_path / "xhat.csv"
        code, _ = run(
            capsys,
            [
                "solve",
                "--M", str(tmp_path / "M.csv"),
                "--B", str(tmp_path / "B.csv"),
                "--C", str(tmp_path / "C.csv"),
                "--rank", "2",
                "--out", str(out),
                "--no-timestamp",
            ],
        )
        assert code == 0
        np.testing.assert_allclose(
            read_matrix(str(out)), truncated_svd(m, 2).matrix(), atol=1e-10
        )

    def test_deterministic_reports(self, capsys, tmp_path, fixture_files):
        args = [
            "solve",
            "--M", fixture_files["M"],
            "--B", fixture_files["B"],
            "--C", fixture_files["C"],
            "--rank", "1",
            "--out", str(tmp_path / "x.csv"),
            "--no-timestamp",
        ]
        assert cli.main(args) == 0
        first = capsys.readouterr().out
        assert cli.main(args) == 0
        second = capsys.readouterr().out
        assert first == second

    def test_shape_error_names_files(self, capsys, tmp_path, fixture_files):
        write_matrix(str(tmp_path / "badB.csv"), np.eye(3))
        code = cli.main(
            [
                "solve",
                "--M", fixture_files["M"],
                "--B", str(tmp_path / "badB.csv"),
                "--C", fixture_files["C"],
                "--rank", "1",
                "--out", str(tmp_path / "x.csv"),
            ]
        )
        captured = capsys.readouterr()
        assert code == 2
        assert "badB.csv" in captured.err

    def test_parse_error_exit_code(self, capsys, tmp_path, fixture_files):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,zap\n")
        code = cli.main(
            [
                "solve",
                "--M", str(bad),
                "--B", fixture_files["B"],
                "--C", fixture_files["C"],
                "--rank", "1",
                "--out", str(tmp_path / "x.csv"),
            ]
        )
        assert code == 2


class TestErrorCommand:
    def test_fixture_delta(self, capsys, fixture_files):
        code, doc = run(
            capsys,
            [
                "error",
                "--M", fixture_files["M"],
                "--B", fixture_files["B"],
                "--C", fixture_files["C"],
                "--rank", "1",
                "--no-timestamp",
            ],
        )
        assert code == 0
        assert doc["outputs"]["delta"] == pytest.approx(1.0, abs=1e-12)
        assert doc["outputs"]["error"] == pytest.approx(1.0, abs=1e-12)
        assert doc["diagnostics"]["max_delta_discrepancy"] < 1e-10

    def test_full_rank_recovery(self, capsys, tmp_path):
        g = np.random.default_rng(2)
        for name, mat in (
            ("M", g.standard_normal((3, 3))),
            ("B", g.standard_normal((3, 3))),
            ("C", g.standard_normal((3, 3))),
        ):
            write_matrix(str(tmp_path / f"{name}.csv"), mat)
        code, doc = run(
            capsys,
            [
                "error",
                "--M", str(tmp_path / "M.csv"),
                "--B", str(tmp_path / "B.csv"),
                "--C", str(tmp_path / "C.csv"),
                "--rank", "3",
                "--no-timestamp",
            ],
        )
        assert code == 0
        assert doc["outputs"]["error"] == pytest.approx(0.0, abs=1e-8)


class TestDemoUnbounded:
    def test_growth_table(self, capsys, tmp_path):
        out = tmp_path / "sweep.csv"
        code, doc = run(
            capsys,
            [
                "demo-unbounded",
                "--N", "20,40",
                "--probes", "5,10",
                "--out", str(out),
                "--no-timestamp",
            ],
        )
        assert code == 0
        assert doc["diagnostics"]["tie"] is False
        table = read_matrix(str(out))
        assert table.shape == (4, 4)
        np.testing.assert_allclose(table[:, 2], table[:, 3], atol=1e-10)
        # linear growth in the probe index at fixed dimension
        at_40 = table[table[:, 0] == 40]
        assert at_40[1, 2] / at_40[0, 2] == pytest.approx(2.0, abs=1e-10)

    def test_documented_defaults_work(self, capsys, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, doc = run(capsys, ["demo-unbounded", "--no-timestamp"])
        assert code == 0
        assert doc["diagnostics"]["max_abs_norm_mismatch"] < 1e-8
        table = read_matrix(str(tmp_path / "sweep.csv"))
        at_200 = table[table[:, 0] == 200]
        by_probe = {int(row[1]): row[2] for row in at_200}
        assert by_probe[100] / by_probe[10] == pytest.approx(10.0, abs=1e-8)

    def test_tie_emits_bounded_branch(self, capsys, tmp_path):
        out = tmp_path / "sweep.csv"
        code, doc = run(
            capsys,
            [
                "demo-unbounded",
                "--N", "20",
                "--probes", "1,5",
                "--mu", "1,1",
            "--out", str(out),
                "--no-timestamp",
            ],
        )
        assert code == 0
        assert doc["diagnostics"]["tie"] is True
        bounded = read_matrix(doc["outputs"]["files"]["bounded_branch"])
        # flat branch: mu_2/gamma_1 at the first axis, zero elsewhere
        assert bounded[0, 2] == pytest.approx(1.0, abs=1e-12)
        assert bounded[1, 2] == pytest.approx(0.0, abs=1e-12)
        main_rows = read_matrix(str(out))
        assert main_rows[0, 2] == pytest.approx(0.0, abs=1e-12)


class TestOuterApprox:
    def test_exhaustive_chain_reaches_zero(self, capsys, tmp_path, fixture_files):
        out = tmp_path / "outer.csv"
        code, doc = run(
            capsys,
            [
                "outer-approx",
                "--M", fixture_files["M"],
                "--B", fixture_files["B"],
                "--C", fixture_files["C"],
                "--rank", "1",
                "--chain", "full",
                "--out", str(out),
                "--no-timestamp",
            ],
        )
        assert code == 0
        assert doc["outputs"]["final_tail_error"] < 1e-10
        assert doc["diagnostics"]["tail_nonincreasing"] is True

    def test_stepwise_chain_on_random_problem(self, capsys, tmp_path):
        g = np.random.default_rng(3)
        for name, mat in (
            ("M", g.standard_normal((4, 5))),
            ("B", g.standard_normal((4, 3))),
            ("C", g.standard_normal((4, 5))),
        ):
            write_matrix(str(tmp_path / f"{name}.csv"), mat)
        out = tmp_path / "outer.csv"
        code, doc = run(
            capsys,
            [
                "outer-approx",
                "--M", str(tmp_path / "M.csv"),
                "--B", str(tmp_path / "B.csv"),
                "--C", str(tmp_path / "C.csv"),
                "--rank", "2",
                "--chain", "auto:4",
                "--alternative",
                "--out", str(out),
                "--no-timestamp",
            ],
        )
        assert code == 0
        table = read_matrix(str(out))
        assert table.shape[1] == 5  # alternative construction adds a column
        assert np.max(table[:, 3]) < 1e-10  # outer-inverse identity residual
        assert doc["outputs"]["final_tail_error"] < 1e-10
        assert doc["diagnostics"]["max_outer_identity_residual"] < 1e-10


class TestRegressCommand:
    def test_self_reconstruction(self, capsys, tmp_path):
        xs = np.random.default_rng(4).standard_normal((80, 3))
        write_matrix(str(tmp_path / "xs.csv"), xs)
        model_path = tmp_path / "model.json"
        code, doc = run(
            capsys,
            [
                "regress",
                "--x", str(tmp_path / "xs.csv"),
                "--y", str(tmp_path / "xs.csv"),
                "--rank", "3",
                "--model-out", str(model_path),
                "--no-timestamp",
            ],
        )
        assert code == 0
        assert doc["outputs"]["mse_trace"] == pytest.approx(0.0, abs=1e-9)
        assert doc["outputs"]["mse_monte_carlo"] == pytest.approx(0.0, abs=1e-9)
        assert doc["diagnostics"]["maximal_kernel"]["passed"] is True
        model = load_model(str(model_path))
        assert model.a_hat.shape == (3, 3)

    def test_identity_weight_files_match_default(self, capsys, tmp_path):
        g = np.random.default_rng(5)
        ys = g.standard_normal((60, 3))
        xs = ys @ g.standard_normal((3, 2))
        write_matrix(str(tmp_path / "xs.csv"), xs)
        write_matrix(str(tmp_path / "ys.csv"), ys)
        write_matrix(str(tmp_path / "i2.csv"), np.eye(2))
        write_matrix(str(tmp_path / "i3.csv"), np.eye(3))
        base_args = [
            "regress",
            "--x", str(tmp_path / "xs.csv"),
            "--y", str(tmp_path / "ys.csv"),
            "--rank", "1",
            "--no-timestamp",
        ]
        _, plain = run(capsys, base_args + ["--model-out", str(tmp_path / "m1.json")])
        _, weighted = run(
            capsys,
            base_args
            + [
                "--wx", str(tmp_path / "i2.csv"),
                "--wa", str(tmp_path / "i2.csv"),
                "--wy", str(tmp_path / "i3.csv"),
                "--model-out", str(tmp_path / "m2.json"),
            ],
        )
        a1 = load_model(str(tmp_path / "m1.json")).a_hat
        a2 = load_model(str(tmp_path / "m2.json")).a_hat
        np.testing.assert_allclose(a1, a2, atol=1e-12)
        assert plain["outputs"]["mse_trace"] == pytest.approx(
            weighted["outputs"]["mse_trace"], abs=1e-10
        )

    def test_rank_deficient_kernel_check(self, capsys, tmp_path):
        g = np.random.default_rng(6)
        latent = g.standard_normal((100, 2))
        ys = latent @ g.standard_normal((2, 4))
        xs = ys @ g.standard_normal((4, 3)) + 0.05 * g.standard_normal((100, 3))
        write_matrix(str(tmp_path / "xs.csv"), xs)
        write_matrix(str(tmp_path / "ys.csv"), ys)
        code, doc = run(
            capsys,
            [
                "regress",
                "--x", str(tmp_path / "xs.csv"),
                "--y", str(tmp_path / "ys.csv"),
                "--rank", "2",
                "--no-timestamp",
            ],
        )
        assert code == 0
        kernel = doc["diagnostics"]["maximal_kernel"]
        assert kernel["passed"] is True and kernel["kernel_dim"] == 2

    def test_partial_weights_rejected(self, capsys, tmp_path):
        write_matrix(str(tmp_path / "xs.csv"), np.ones((4, 2)))
        code = cli.main(
            [
                "regress",
                "--x", str(tmp_path / "xs.csv"),
                "--y", str(tmp_path / "xs.csv"),
                "--rank", "1",
                "--wx", str(tmp_path / "xs.csv"),
            ]
        )
        assert code == 2


class TestCheckCommand:
    def test_all_suites_pass(self, capsys):
        code, doc = run(
            capsys, ["check", "--suite", "all", "--trials", "4", "--no-timestamp"]
        )
        assert code == 0
        assert doc["diagnostics"]["passed"] is True
        assert set(doc["outputs"]["suites"]) == {"mp", "svd", "glra", "seq", "rrr"}

    def test_reports_are_seed_reproducible(self, capsys):
        args = ["check", "--suite", "mp", "--trials", "5", "--seed", "7", "--no-timestamp"]
        assert cli.main(args) == 0
        first = capsys.readouterr().out
        assert cli.main(args) == 0
        assert capsys.readouterr().out == first

    def test_good_fixture_passes(self, capsys, tmp_path):
        a = np.random.default_rng(8).standard_normal((4, 3))
        write_matrix(str(tmp_path / "a.csv"), a)
        write_matrix(str(tmp_path / "a_pinv.csv"), pinv(a))
        code, doc = run(
            capsys,
            [
                "check",
                "--suite", "mp",
                "--trials", "2",
                "--fixture", str(tmp_path),
                "--no-timestamp",
            ],
        )
        assert code == 0
        assert doc["outputs"]["suites"]["fixture"][0]["failures"] == 0

    def test_corrupted_fixture_fails(self, capsys, tmp_path):
        # documented corrupt asset: the stored pseudo-inverse is off by 10%
        a = np.random.default_rng(9).standard_normal((4, 3))
        write_matrix(str(tmp_path / "a.csv"), a)
        write_matrix(str(tmp_path / "a_pinv.csv"), 1.1 * pinv(a))
        code, doc = run(
            capsys,
            [
                "check",
                "--suite", "mp",
                "--trials", "2",
                "--fixture", str(tmp_path),
                "--no-timestamp",
            ],
        )
        assert code == 3
        assert doc["diagnostics"]["passed"] is False


class TestToleranceOverrides:
    def test_env_variable_overrides_check_abs(self, monkeypatch):
        import argparse

        monkeypatch.setenv("GLRA_TOL_ABS", "1e-6")
        args = argparse.Namespace(rank_rel=None, tie_rel=None, check_abs=None)
        assert cli._tolerances(args).check_abs == 1e-6

    def test_flag_beats_env(self, monkeypatch):
        import argparse

        monkeypatch.setenv("GLRA_TOL_ABS", "1e-6")
        args = argparse.Namespace(rank_rel=None, tie_rel=None, check_abs=1e-4)
        assert cli._tolerances(args).check_abs == 1e-4

    def test_bad_env_value(self, monkeypatch):
        import argparse

        from glra.linalg import InputError

        monkeypatch.setenv("GLRA_TOL_ABS", "soup")
        args = argparse.Namespace(rank_rel=None, tie_rel=None, check_abs=None)
        with pytest.raises(InputError):
            cli._tolerances(args)
