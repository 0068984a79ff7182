"""Config parsing, the four subcommands, exit codes, and reproducibility.

Every test drives the real entry point main(argv) against config files
written into tmp_path and inspects the emitted artifacts.
"""

import math
import os
import textwrap

import numpy as np
import pytest

from dynreg import NoiseSpec, add_noise, bochner_norm, make_identity_problem, read_csv
from dynreg.cli import ExperimentConfig, load_config, main


def write_config(path, body: str) -> str:
    path.write_text(textwrap.dedent(body))
    return str(path)


def read_tree(root) -> dict:
    tree = {}
    for name in sorted(os.listdir(root)):
        with open(os.path.join(root, name), "rb") as f:
            tree[name] = f.read()
    return tree


def read_table(path) -> list[list[str]]:
    lines = path.read_text().strip().splitlines()
    return [line.split(",") for line in lines]


class TestLoadConfig:
    def test_defaults_and_overrides(self, tmp_path):
        cfg = load_config(write_config(tmp_path / "a.ini", """\
            [problem]
            kind = dct
            n_t = 8
            n_x = 16
            T = 2.0
            window = 5

            [solver]
            method = tikhonov_temporal
            alpha = 0.5
            sections = 4

            [noise]
            delta = 0.05
            seed = 7
            """))
        assert cfg.kind == "dct" and cfg.horizon == 2.0 and cfg.window == 5
        assert cfg.alpha == 0.5 and cfg.sections == 4
        assert cfg.delta == 0.05 and cfg.seed == 7
        assert cfg.method == "tikhonov_temporal"
        assert cfg.omega == "auto" and cfg.out_dir == "out"

    def test_kind_required(self, tmp_path):
        path = write_config(tmp_path / "a.ini", "[noise]\ndelta = 0.1\n")
        with pytest.raises(Exception, match="kind is required"):
            load_config(path)

    def test_unknown_key_and_section_rejected(self, tmp_path):
        path = write_config(tmp_path / "a.ini", "[problem]\nkind = dct\nnt = 8\n")
        with pytest.raises(Exception, match="unknown key 'nt'"):
            load_config(path)
        path = write_config(tmp_path / "b.ini", "[problem]\nkind = dct\n\n[plots]\nstyle = x\n")
        with pytest.raises(Exception, match=r"unknown section \[plots\]"):
            load_config(path)

    def test_value_validation(self, tmp_path):
        for body, fragment in [
            ("[problem]\nkind = sinogram\n", "unknown problem kind"),
            ("[problem]\nkind = dct\nn_x = 4\nwindow = 9\n", "window"),
            ("[problem]\nkind = dct\nn_t = -2\n", "n_t"),
            ("[problem]\nkind = dct\n\n[noise]\ndelta = 0\n", "delta"),
            ("[problem]\nkind = dct\n\n[solver]\nmethod = cg\n", "unknown method"),
            ("[problem]\nkind = dct\n\n[solver]\nrule_exponent = 2\n", "rule_exponent"),
            ("[problem]\nkind = dct\nn_t = 4\n\n[solver]\nsections = 9\n", "sections"),
            ("[problem]\nkind = mpi\n\n[solver]\nmethod = tikhonov_temporal\n", "pointwise"),
            ("[problem]\nkind = mpi\n\n[probe]\nprobes = temporal_spectrum\n", "pointwise"),
            ("[problem]\nkind = dct\nn_t = 4\n\n[probe]\ntime_index = 4\n", "time_index"),
            ("[problem]\nkind = dct\nn_t = 4\n\n[probe]\nshift_steps = 1,4\n", "shift"),
        ]:
            path = write_config(tmp_path / "bad.ini", body)
            with pytest.raises(Exception, match=fragment):
                load_config(path)

    def test_probe_list_parsing(self, tmp_path):
        cfg = load_config(write_config(tmp_path / "a.ini", """\
            [problem]
            kind = mpi

            [probe]
            probes = stacked_spectrum, integrability
            radii = 1, 2.5, 10
            """))
        assert cfg.probes == ("stacked_spectrum", "integrability")
        assert cfg.radii == (1.0, 2.5, 10.0)


class TestExitCodes:
    def test_missing_config_is_io_error(self, tmp_path, capsys):
        assert main(["solve", "--config", str(tmp_path / "absent.ini")]) == 4
        assert "i/o error" in capsys.readouterr().err

    def test_config_error(self, tmp_path, capsys):
        path = write_config(tmp_path / "a.ini", "[problem]\nkind = dct\nbogus = 1\n")
        assert main(["solve", "--config", path]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_unwritable_output_is_io_error(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = identity
            n_t = 3
            n_x = 2
            """)
        code = main(["forward", "--config", path, "--out", str(blocker / "sub")])
        assert code == 4
        assert "i/o error" in capsys.readouterr().err

    def test_divergent_solver_is_numeric_failure(self, tmp_path, capsys):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = identity
            n_t = 4
            n_x = 3

            [solver]
            method = landweber_kaczmarz
            omega = 1e8
            """)
        code = main(["solve", "--config", path, "--out", str(tmp_path / "out"), "--quiet"])
        assert code == 3
        assert "numeric failure" in capsys.readouterr().err


class TestForward:
    def test_writes_instance_and_reproduces(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = nonuniform
            n_t = 8
            n_x = 4

            [noise]
            delta = 0.1
            """)
        out = tmp_path / "out"
        assert main(["forward", "--config", path, "--out", str(out), "--quiet"]) == 0
        assert sorted(os.listdir(out)) == [
            "data_clean.csv", "data_noisy.csv", "meta.txt", "truth.csv",
        ]
        assert "delta=0.1\n" in (out / "meta.txt").read_text()
        # data geometry is caller-provided on read; nonuniform data carries dx
        clean = read_csv(str(out / "data_clean.csv"), space_weight=1.0 / 4)
        noisy = read_csv(str(out / "data_noisy.csv"), space_weight=1.0 / 4)
        assert bochner_norm(noisy - clean) == pytest.approx(0.099, rel=1e-12)
        first = read_tree(out)
        assert main(["forward", "--config", path, "--out", str(out), "--quiet"]) == 0
        assert read_tree(out) == first

    def test_seed_override_changes_draw(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = identity
            n_t = 4
            n_x = 3
            """)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["forward", "--config", path, "--out", str(out_a), "--quiet"])
        main(["forward", "--config", path, "--out", str(out_b), "--seed", "99", "--quiet"])
        assert (out_a / "data_noisy.csv").read_bytes() != (out_b / "data_noisy.csv").read_bytes()
        assert (out_a / "data_clean.csv").read_bytes() == (out_b / "data_clean.csv").read_bytes()
        assert "seed=99" in (out_b / "meta.txt").read_text()


class TestSolve:
    def test_identity_unit_alpha_halves_data(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = identity
            n_t = 5
            n_x = 4

            [noise]
            delta = 0.01
            seed = 3

            [solver]
            method = tikhonov_uniform
            alpha = 1.0
            """)
        out = tmp_path / "out"
        assert main(["solve", "--config", path, "--out", str(out), "--quiet"]) == 0
        problem = make_identity_problem(5, 4)
        noisy = add_noise(problem.data_clean, NoiseSpec(0.01, 3))
        rec = read_csv(str(out / "reconstruction.csv"))
        np.testing.assert_allclose(rec.values, noisy.values / 2.0, rtol=1e-15)
        report = (out / "report.txt").read_text()
        assert "method=tikhonov_uniform\n" in report
        assert "alpha=1.0\n" in report
        assert "stop_reason=tolerance\n" in report
        error = float(report.split("relative_error=")[1].splitlines()[0])
        expected = bochner_norm(noisy * 0.5 - problem.truth) / bochner_norm(problem.truth)
        assert error == pytest.approx(expected, rel=1e-12)

    def test_decoupling_paired_runs(self, tmp_path):
        base = """\
            [problem]
            kind = dct
            n_t = 6
            n_x = 8

            [solver]
            method = {method}
            alpha = 0.001
            """
        outs = {}
        for method in ("tikhonov_temporal", "tikhonov_uniform"):
            path = write_config(tmp_path / f"{method}.ini", base.format(method=method))
            out = tmp_path / method
            assert main(["solve", "--config", path, "--out", str(out), "--quiet"]) == 0
            outs[method] = read_csv(str(out / "reconstruction.csv"))
        gap = bochner_norm(outs["tikhonov_temporal"] - outs["tikhonov_uniform"])
        assert gap <= 1e-8 * bochner_norm(outs["tikhonov_uniform"])

    def test_kaczmarz_zero_sweeps_returns_start(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = mpi
            n_t = 6
            n_x = 5

            [solver]
            method = landweber_kaczmarz
            max_sweeps = 0
            """)
        out = tmp_path / "out"
        assert main(["solve", "--config", path, "--out", str(out), "--quiet"]) == 0
        rec = read_csv(str(out / "reconstruction.csv"))
        np.testing.assert_array_equal(rec.values, np.zeros((6, 5)))
        report = (out / "report.txt").read_text()
        assert "stop_reason=max_iter\n" in report
        assert "iterations=0\n" in report

    def test_kaczmarz_sections_solve(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = mpi
            n_t = 16
            n_x = 16

            [noise]
            delta = 0.01

            [solver]
            method = landweber_kaczmarz
            sections = 4
            """)
        out = tmp_path / "out"
        assert main(["solve", "--config", path, "--out", str(out), "--quiet"]) == 0
        table = read_table(out / "trace.csv")
        assert table[0] == ["iter", "subproblem", "residual", "alpha", "error"]
        assert {row[1] for row in table[1:]} == {"0", "1", "2", "3"}

    def test_trace_matches_report_for_multi(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = identity
            n_t = 4
            n_x = 3

            [solver]
            method = kaczmarz_multi
            memory = 2
            max_sweeps = 20
            """)
        out = tmp_path / "out"
        assert main(["solve", "--config", path, "--out", str(out), "--quiet"]) == 0
        report = (out / "report.txt").read_text()
        # a static unknown cannot match the moving truth, so the loop runs out
        assert "stop_reason=max_iter\n" in report
        sweeps = int(report.split("iterations=")[1].splitlines()[0])
        assert sweeps == 20
        table = read_table(out / "trace.csv")
        assert len(table) - 1 == sweeps * 4

    def test_reruns_are_byte_identical(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = nonuniform
            n_t = 6
            n_x = 6

            [solver]
            method = tikhonov_uniform
            """)
        out = tmp_path / "out"
        main(["solve", "--config", path, "--out", str(out), "--quiet"])
        first = read_tree(out)
        main(["solve", "--config", path, "--out", str(out), "--quiet"])
        assert read_tree(out) == first


class TestSweep:
    def test_dct_errors_strictly_decrease(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = dct
            n_t = 8
            n_x = 8

            [solver]
            method = tikhonov_uniform
            rule_scale = 1.0
            rule_exponent = 1.0

            [sweep]
            deltas = 0.1, 0.01, 0.001, 0.0001
            """)
        out = tmp_path / "out"
        assert main(["sweep", "--config", path, "--out", str(out), "--quiet"]) == 0
        table = read_table(out / "sweep.csv")
        assert table[0] == ["delta", "alpha", "error", "residual"]
        deltas = [float(row[0]) for row in table[1:]]
        alphas = [float(row[1]) for row in table[1:]]
        errors = [float(row[2]) for row in table[1:]]
        assert deltas == [0.1, 0.01, 0.001, 0.0001]
        assert alphas == deltas
        assert all(b < a for a, b in zip(errors, errors[1:]))
        assert (out / "sweep.svg").exists()

    def test_single_delta_single_row(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = identity
            n_t = 4
            n_x = 3

            [sweep]
            deltas = 0.05
            """)
        out = tmp_path / "out"
        assert main(["sweep", "--config", path, "--out", str(out), "--quiet"]) == 0
        assert len(read_table(out / "sweep.csv")) == 2

    def test_rerun_byte_identical_tree(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = identity
            n_t = 6
            n_x = 4

            [sweep]
            deltas = 0.1, 0.01
            """)
        out = tmp_path / "out"
        main(["sweep", "--config", path, "--out", str(out), "--quiet"])
        first = read_tree(out)
        main(["sweep", "--config", path, "--out", str(out), "--quiet"])
        assert read_tree(out) == first
        assert set(first) == {"sweep.csv", "sweep.svg"}


class TestProbe:
    def test_identity_flat_spectrum_rows(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = identity
            n_t = 3
            n_x = 4

            [probe]
            probes = temporal_spectrum
            time_index = 1
            """)
        out = tmp_path / "out"
        assert main(["probe", "--config", path, "--out", str(out), "--quiet"]) == 0
        table = read_table(out / "spectrum_t1.csv")
        assert table[0] == ["k", "sigma"]
        assert [row[0] for row in table[1:]] == ["1", "2", "3", "4"]
        assert all(float(row[1]) == pytest.approx(1.0, abs=1e-12) for row in table[1:])

    def test_stacked_row_count(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = dct
            n_t = 8
            n_x = 16

            [probe]
            probes = stacked_spectrum
            """)
        out = tmp_path / "out"
        assert main(["probe", "--config", path, "--out", str(out), "--quiet"]) == 0
        assert len(read_table(out / "spectrum_stacked.csv")) - 1 == 8 * 16

    def test_integrability_tail_grows_under_refinement(self, tmp_path):
        tails = []
        for n_t in (16, 32):
            path = write_config(tmp_path / f"c{n_t}.ini", f"""\
                [problem]
                kind = nonuniform
                n_t = {n_t}
                n_x = 4

                [probe]
                probes = integrability
                radii = 4.0, 8.0
                """)
            out = tmp_path / f"out{n_t}"
            assert main(["probe", "--config", path, "--out", str(out), "--quiet"]) == 0
            table = read_table(out / "integrability.csv")
            assert table[0] == ["r", "tail"]
            tails.append(float(table[1][1]))
        assert tails[1] > tails[0]

    def test_translation_table(self, tmp_path):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = mpi
            n_t = 8
            n_x = 6

            [probe]
            probes = translation
            shift_steps = 1, 2
            """)
        out = tmp_path / "out"
        assert main(["probe", "--config", path, "--out", str(out), "--quiet"]) == 0
        table = read_table(out / "translation.csv")
        assert table[0] == ["z", "modulus"]
        assert len(table) == 3
        assert all(float(row[1]) >= 0.0 for row in table[1:])

    def test_quiet_suppresses_stdout(self, tmp_path, capsys):
        path = write_config(tmp_path / "a.ini", """\
            [problem]
            kind = identity
            n_t = 3
            n_x = 2

            [probe]
            probes = stacked_spectrum
            """)
        main(["probe", "--config", path, "--out", str(tmp_path / "o1"), "--quiet"])
        assert capsys.readouterr().out == ""
        main(["probe", "--config", path, "--out", str(tmp_path / "o2")])
        assert "spectrum_stacked.csv" in capsys.readouterr().out


class TestConfigDataclass:
    def test_defaults_match_documented_values(self):
        cfg = ExperimentConfig(kind="dct")
        assert cfg.n_t == 32 and cfg.n_x == 32 and cfg.horizon == 1.0
        assert cfg.delta == 0.01 and cfg.fraction == 0.99
        assert cfg.method == "tikhonov_uniform"
        assert cfg.tau == 2.0 and cfg.max_sweeps == 500
        assert cfg.deltas == (1e-1, 1e-2, 1e-3, 1e-4)
        assert math.isclose(cfg.tol, 1e-10)
