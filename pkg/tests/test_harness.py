import csv
import io

import numpy as np
import pytest

from signprobe.core import quartiles
from signprobe.data import make_pair_task
from signprobe.harness import (
    DEFAULT_NOISE_GRID,
    DEFAULT_PRUNE_GRID,
    ComplexityMatrix,
    ModelBank,
    complexity_correlation,
    complexity_matrices,
    complexity_matrix,
    sweep_noise,
    sweep_prune,
    sweep_randomization,
    sweep_randomize_then_prune,
    sweep_signflip,
    weight_std_distribution,
)
from signprobe.mlp import TrainConfig
from signprobe.plotting import heatmap, line_plot, nice_ticks

from conftest import synthetic_digits

FAST = TrainConfig(max_epochs=2, batch_size=16)


@pytest.fixture(scope="module")
def digits():
    return synthetic_digits(12, 1, "train"), synthetic_digits(4, 2, "test")


@pytest.fixture(scope="module")
def tasks(digits):
    train, test = digits
    return {"E": make_pair_task(train, test, 0, 7), "H": make_pair_task(train, test, 7, 9)}


def bank():
    return ModelBank(d=6, base_seed=3, config=FAST)


def test_default_grids():
    assert DEFAULT_PRUNE_GRID[0] == 0.0 and DEFAULT_PRUNE_GRID[-1] == 0.95 and len(DEFAULT_PRUNE_GRID) == 20
    log_part = DEFAULT_NOISE_GRID[1:]
    assert DEFAULT_NOISE_GRID[0] == 0.0 and len(log_part) == 25
    assert log_part[0] == pytest.approx(1e-3) and log_part[-1] == pytest.approx(10.0)


class TestSweeps:
    def test_prune_shape_and_identity(self, tasks):
        b = bank()
        res = sweep_prune(tasks, 3, grid=(0.0, 0.5), bank=b)
        assert res.variants == ["E", "signed-E", "H", "signed-H"]
        assert res.values["E"].shape == (2, 3)
        for r in range(3):
            assert res.values["E"][0, r] == b.get(tasks["E"], r)[1]

    def test_noise_identity_and_reference(self, tasks):
        b = bank()
        res = sweep_noise(tasks, 2, grid=(0.0, 0.01, 5.0), bank=b)
        assert [res.values["H"][0, r] for r in range(2)] == [b.get(tasks["H"], r)[1] for r in range(2)]
        assert set(res.reference_lines) == {"E", "H"} and all(v > 0 for v in res.reference_lines.values())

    def test_flip_identity(self, tasks):
        b = bank()
        res = sweep_signflip(tasks, 2, grid=(0.0, 1.0), bank=b)
        assert res.values["E"][0, 1] == b.get(tasks["E"], 1)[1]

    def test_randomization_grid(self, tasks):
        b = bank()
        res = sweep_randomization(tasks, 2, kinds="BG", bank=b)
        assert res.grid == ["orig", "B", "G"]
        assert res.values["E"][0, 0] == b.get(tasks["E"], 0)[1]

    def test_randomize_then_prune_variants(self, tasks):
        res = sweep_randomize_then_prune(tasks, 1, kinds=("B", "F"), grid=(0.0, 0.95), bank=bank())
        assert res.variants == ["E", "E-randB", "E-randF", "H", "H-randB", "H-randF"]

    def test_aggregates_match_raw(self, tasks):
        res = sweep_prune(tasks, 3, grid=(0.0, 0.3), bank=bank())
        raw = list(csv.DictReader(io.StringIO(res.raw_csv())))
        agg = list(csv.DictReader(io.StringIO(res.aggregate_csv())))
        assert len(raw) == 2 * 4 * 3
        for row in agg:
            vals = [float(r["accuracy"]) for r in raw
                    if r["variant"] == row["variant"] and r["grid_value"] == row["grid_value"]]
            q = quartiles(vals)
            assert (float(row["median"]), float(row["q1"]), float(row["q3"]), int(row["n"])) \
                == (q.median, q.q1, q.q3, q.n)

    def test_workers_do_not_change_results(self, tasks):
        a = sweep_randomization(tasks, 3, kinds="AG", bank=bank(), workers=1).raw_csv()
        b = sweep_randomization(tasks, 3, kinds="AG", bank=bank(), workers=2).raw_csv()
        assert a == b

    def test_rerun_identical(self, tasks):
        assert sweep_noise(tasks, 2, grid=(0.0, 0.1), bank=bank()).raw_csv() \
            == sweep_noise(tasks, 2, grid=(0.0, 0.1), bank=bank()).raw_csv()

    def test_seed_changes_results(self, tasks):
        other = ModelBank(d=6, base_seed=4, config=FAST)
        a = sweep_noise(tasks, 2, grid=(0.5,), bank=bank()).raw_csv()
        assert a != sweep_noise(tasks, 2, grid=(0.5,), bank=other).raw_csv()

    @pytest.mark.parametrize("call", [
        lambda t: sweep_prune(t, 0),
        lambda t: sweep_prune(t, 1, grid=(1.5,)),
        lambda t: sweep_signflip(t, 1, grid=(-0.1,)),
        lambda t: sweep_noise(t, 1, grid=(-1.0,)),
        lambda t: sweep_randomization(t, 1, kinds="Z"),
    ])
    def test_validation(self, tasks, call):
        with pytest.raises(ValueError):
            call(tasks)


def test_weight_std_distribution(tasks):
    a = weight_std_distribution(tasks["E"], 3, bank())
    assert len(a) == 3 and all(v > 0 for v in a)
    assert a == weight_std_distribution(tasks["E"], 3, bank())


def make_matrix(deltas, probe="binarize"):
    base = np.full((10, 10), np.nan)
    probed = np.full((10, 10), np.nan)
    k = 0
    for a in range(10):
        for b in range(a + 1, 10):
            base[a, b] = base[b, a] = 1.0
            probed[a, b] = probed[b, a] = 1.0 - deltas[k]
            k += 1
    return ComplexityMatrix("mnist", probe, base, probed, 1)


class TestComplexity:
    def test_correlation_examples(self):
        d = np.linspace(0, 0.4, 45)
        m = make_matrix(d)
        assert complexity_correlation(m, m) == pytest.approx(1.0)
        assert complexity_correlation(m, make_matrix(d[::-1])) == pytest.approx(-1.0)

    def test_mismatched_coverage(self):
        m = make_matrix(np.linspace(0, 1, 45))
        other = ComplexityMatrix("fashion", "binarize", m.base_accuracy, m.probed_accuracy, 1)
        with pytest.raises(ValueError):
            complexity_correlation(m, other)

    def test_matrices_from_data(self, digits):
        train, test = digits
        b = ModelBank(d=4, base_seed=0, config=TrainConfig(max_epochs=1, batch_size=32))
        mats = complexity_matrices(train, test, 1, bank=b)
        for m in mats.values():
            assert np.isnan(np.diag(m.base_accuracy)).all()
            assert np.array_equal(np.nan_to_num(m.delta_accuracy), np.nan_to_num(m.delta_accuracy.T))
            assert len(m.pairs()) == 45 and len(m.upper_deltas()) == 45
            assert len(m.csv().splitlines()) == 46
        assert np.array_equal(mats["binarize"].base_accuracy, mats["randomize-b"].base_accuracy, equal_nan=True)
        single = complexity_matrix(train, test, 1, "binarize",
                                   ModelBank(d=4, base_seed=0, config=TrainConfig(max_epochs=1, batch_size=32)))
        assert np.array_equal(single.delta_accuracy, mats["binarize"].delta_accuracy, equal_nan=True)

    def test_bad_probe(self, digits):
        with pytest.raises(ValueError):
            complexity_matrices(*digits, 1, probes=("noise",))


class TestPlotting:
    def test_ticks(self):
        assert nice_ticks(0, 1) == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
        assert nice_ticks(0.4, 1.0)[0] >= 0.4

    def test_line_plot(self, tasks):
        res = sweep_noise(tasks, 2, grid=(0.0, 0.01, 1.0), bank=bank())
        svg = line_plot(res, title="noise", log_x=True)
        assert svg.startswith("<svg") and 'width="800" height="600"' in svg
        assert svg.count("<polyline") == 4 and svg.count("<polygon") == 4
        assert "stroke-dasharray" in svg

    def test_categorical_plot(self, tasks):
        res = sweep_randomization(tasks, 1, kinds="AB", bank=bank())
        svg = line_plot(res)
        assert ">orig<" in svg and ">B<" in svg

    def test_heatmap(self):
        m = np.arange(9.0).reshape(3, 3)
        m[0, 0] = np.nan
        svg = heatmap(m, labels="abc", title="t & u")
        assert svg.count("<rect") == 1 + 9 and "t &amp; u" in svg
