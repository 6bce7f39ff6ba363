import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdmor.cli import main
from sdmor.discretize import build_switched_model
from sdmor.sysfile import SystemFileError, dump_system, load_system, parse_system
from sdmor.systems import ContinuousLtiSystem, SampledDataSystem, SamplingGrid, SwitchedLinearSystem, random_plant


def write(path, sys, grid=None):
    path.write_text(dump_system(sys, grid=grid))
    return str(path)


@pytest.fixture
def small_plant(tmp_path):
    plant = ContinuousLtiSystem([[0.0, 1.0], [-2.0, -3.0]], [[0.0], [1.0]], [[1.0, 0.0]])
    return write(tmp_path / "plant.json", plant)


class TestSystemFile:
    def test_round_trip_exact(self, rng):
        plant = random_plant(5, 2, 3, rng=rng)
        back, grid, _ = parse_system(dump_system(plant, grid=SamplingGrid((0.1, 1 / 3))))
        assert np.array_equal(back.A, plant.A) and np.array_equal(back.B, plant.B) and np.array_equal(back.C, plant.C)
        assert grid.intervals == (0.1, 1 / 3)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=4, max_size=4))
    def test_round_trip_any_double(self, vals):
        A = np.array(vals).reshape(2, 2)
        back, _, _ = parse_system(dump_system(ContinuousLtiSystem(A, np.ones((2, 1)), np.ones((1, 2)))))
        assert np.array_equal(back.A, A)

    def test_switched_round_trip(self, rng):
        ls = build_switched_model(SampledDataSystem(random_plant(3, rng=rng), SamplingGrid((1.0, 2.0))))
        back, grid, _ = parse_system(dump_system(ls))
        assert isinstance(back, SwitchedLinearSystem) and back.D == 2 and grid == ls.grid
        for (A, B), (A2, B2) in zip(ls.modes, back.modes):
            assert np.array_equal(A, A2) and np.array_equal(B, B2)

    def test_malformed_position(self):
        with pytest.raises(SystemFileError) as info:
            parse_system('{\n  "kind": "lti",\n  "A": [[1,]]\n}')
        assert info.value.line == 3

    def test_unknown_kind(self):
        with pytest.raises(SystemFileError):
            parse_system('{"kind": "tf"}')


class TestDiscretize:
    def test_two_mode_file(self, small_plant, tmp_path):
        out = tmp_path / "ls.json"
        assert main(["discretize", small_plant, "--grid", "1,2", "-o", str(out)]) == 0
        ls, grid, _ = load_system(out)
        assert ls.D == 2 and grid == SamplingGrid((1.0, 2.0))

    def test_malformed_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text('{"kind": "lti",\n "A": [[1, 2]')
        assert main(["discretize", str(p), "--grid", "1"]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_zero_interval(self, small_plant, capsys):
        assert main(["discretize", small_plant, "--grid", "0,1"]) == 3
        assert "nonpositive_interval" in capsys.readouterr().err

    def test_missing_grid(self, small_plant):
        assert main(["discretize", small_plant]) == 3

    def test_missing_file(self, tmp_path):
        assert main(["discretize", str(tmp_path / "none.json"), "--grid", "1"]) == 2


class TestReduce:
    def test_example_two_configuration(self, tmp_path, rng):
        plant = write(tmp_path / "p.json", random_plant(10, rng=rng, unstable=2))
        out = tmp_path / "red.json"
        code = main(["reduce", plant, "--approach", "2", "--order", "4",
                     "--grid", "0.1,0.15,0.2,0.3", "-o", str(out)])
        assert code == 0
        report = json.loads((tmp_path / "red.json.report.json").read_text())
        assert report["N"] == 0 and report["r"] <= 4
        assert report["certificate"] is None and "timings" not in report

    def test_order_zero(self, small_plant):
        assert main(["reduce", small_plant, "--approach", "1", "--order", "0", "--grid", "1"]) == 4

    def test_order_below_input_rank(self, tmp_path, rng):
        plant = write(tmp_path / "p.json", random_plant(6, 2, 1, rng=rng))
        assert main(["reduce", plant, "--approach", "2", "--order", "3", "--grid", "1,2"]) == 4

    def test_seventeen_moments(self, tmp_path, rng):
        plant = write(tmp_path / "p.json", random_plant(50, rng=rng), SamplingGrid((1.0, 1.5, 2.0, 3.0)))
        out = tmp_path / "red.json"
        assert main(["reduce", plant, "--approach", "1", "--moments", "17", "-o", str(out), "--timings"]) == 0
        red, _, _ = load_system(out)
        assert red.n == 18 and red.D == 4
        report = json.loads((tmp_path / "red.json.report.json").read_text())
        assert report["certificate"]["margins"] and "timings" in report

    def test_stable_inverse_on_unstable_plant(self, tmp_path, rng):
        plant = write(tmp_path / "p.json", random_plant(5, rng=rng, unstable=1))
        assert main(["reduce", plant, "--approach", "2", "--moments", "1", "--grid", "1",
                     "--stable-inverse", "-o", str(tmp_path / "r.json")]) == 6

    def test_requires_order_or_moments(self, small_plant):
        with pytest.raises(SystemExit) as info:
            main(["reduce", small_plant, "--approach", "1"])
        assert info.value.code == 2


class TestCertify:
    def test_stable_plant(self, tmp_path, rng, capsys):
        plant = random_plant(6, rng=rng)
        grid = SamplingGrid((1.0, 1.5, 2.0, 3.0))
        p = write(tmp_path / "p.json", plant)
        s = write(tmp_path / "s.json", build_switched_model(SampledDataSystem(plant, grid)))
        out = tmp_path / "cert.json"
        assert main(["certify", s, p, "-o", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["margins"]) == 4 and all(m < 0 for m in doc["margins"])
        assert capsys.readouterr().err.count("mode ") == 4

    def test_refuted(self, tmp_path):
        ls = SwitchedLinearSystem(((2 * np.eye(2), np.ones((2, 1))), (0.5 * np.eye(2), np.ones((2, 1)))), np.ones((1, 2)))
        s = write(tmp_path / "s.json", ls)
        (tmp_path / "P.json").write_text(json.dumps({"P": np.eye(2).tolist()}))
        out = tmp_path / "c.json"
        assert main(["certify", s, "--P", str(tmp_path / "P.json"), "-o", str(out)]) == 5
        doc = json.loads(out.read_text())
        assert doc["refuted"] and doc["mode"] == 1

    def test_unstable_plant(self, tmp_path, rng, capsys):
        plant = random_plant(4, rng=rng, unstable=1)
        p = write(tmp_path / "p.json", plant)
        s = write(tmp_path / "s.json", build_switched_model(SampledDataSystem(plant, SamplingGrid((1.0,)))))
        assert main(["certify", s, p]) == 6
        assert "spectral abscissa" in capsys.readouterr().err


class TestCampaign:
    def test_two_means_and_files(self, tmp_path, rng):
        p = write(tmp_path / "p.json", random_plant(20, rng=rng))
        out = tmp_path / "out"
        assert main(["campaign", p, "--grid", "1,1.5,2,3", "--order", "8", "--count", "20",
                     "--horizon", "50", "--out-dir", str(out)]) == 0
        s = json.loads((out / "summary.json").read_text())
        assert len(s["approaches"]) == 2 and all(a["mean"] is not None for a in s["approaches"])

    def test_rerun_is_byte_identical(self, tmp_path, rng):
        p = write(tmp_path / "p.json", random_plant(8, rng=rng))
        for d in ("a", "b"):
            assert main(["campaign", p, "--grid", "1,2", "--order", "4", "--count", "1", "--seed", "42",
                         "--horizon", "10", "--out-dir", str(tmp_path / d)]) == 0
        names = sorted(x.name for x in (tmp_path / "a").iterdir())
        assert names == sorted(x.name for x in (tmp_path / "b").iterdir())
        for n in names:
            assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()

    def test_full_order_means_100(self, tmp_path, rng):
        p = write(tmp_path / "p.json", random_plant(5, rng=rng))
        out = tmp_path / "out"
        assert main(["campaign", p, "--grid", "1,2", "--order", "5", "--count", "10",
                     "--horizon", "10", "--out-dir", str(out)]) == 0
        s = json.loads((out / "summary.json").read_text())
        assert [a["mean"] for a in s["approaches"]] == [100.0, 100.0]


class TestGenerate:
    def test_prescribed_spectrum(self, tmp_path):
        out = tmp_path / "g.json"
        assert main(["generate", "--spectrum=-0.5+2j,-0.5-2j,-3", "--seed", "1", "-o", str(out)]) == 0
        plant, _, meta = load_system(out)
        eig = np.sort_complex(np.linalg.eigvals(plant.A))
        assert np.allclose(eig, np.sort_complex(np.array([-0.5 + 2j, -0.5 - 2j, -3.0])), atol=1e-10)
        assert meta["seed"] == 1

    def test_deterministic(self, tmp_path):
        for name in ("a.json", "b.json"):
            assert main(["generate", "--n", "7", "--seed", "3", "--grid", "1,2", "-o", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_bad_spectrum(self):
        assert main(["generate", "--spectrum", "abc"]) == 2
