"""Acceptance suite: one test per criterion, each printing a pass line with
its measured runtime and enforcing the stated tolerance and time budget.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion. Byte-identity comparisons exclude the wall_ms column, which
records real elapsed time and is measurement metadata rather than
simulation state; every other byte must match.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from fedsim.aggregation import (
    AggregationStrategy,
    ClientUpdate,
    combine_weights,
    fedavg_weights,
    ida_weights,
    intrac_weights,
    strategy_weights,
)
from fedsim.data import SyntheticSpec, generate_synthetic, split_train_test
from fedsim.metrics import write_history
from fedsim.models import Batch, ModelSpec, TrainConfig, init_params, loss_and_grad, train_local
from fedsim.orchestrator import (
    FederationConfig,
    LowParticipationScenario,
    PoisonedScenario,
    SeverityDoublingScenario,
    run_federation,
    run_scenario,
)
from fedsim.params import ParamVector
from fedsim.partition import ClientShard, FederatedSplit, PartitionSpec, partition
from oracle_weights import brute_combine, brute_fedavg, brute_ida, brute_intrac

# Every federation state produced by this module lands here so the
# convex-hull criterion can assert zero violations across the whole suite.
ACCEPTANCE_STATES: list = []


@pytest.fixture(scope="session")
def artifact_dir(tmp_path_factory):
    """Shared scratch space: the convergence runs leave CSVs here for the
    plotting criterion to consume."""
    return tmp_path_factory.mktemp("acceptance_artifacts")


def record_states(results):
    states = [state for _, state in results]
    ACCEPTANCE_STATES.extend(states)
    return results


class Criterion:
    """Times a criterion and prints its pass/fail line."""

    def __init__(self, name, budget_s):
        self.name = name
        self.budget_s = budget_s

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        status = "PASS" if exc_type is None else "FAIL"
        print(f"[{status}] {self.name} ({elapsed:.1f}s, budget {self.budget_s:g}s)")
        if exc_type is None:
            assert elapsed < self.budget_s, f"{self.name}: runtime {elapsed:.1f}s over budget"
        return False


def random_updates(rng, k, dim):
    return [
        ClientUpdate(
            i,
            ParamVector(rng.normal(size=dim)),
            int(rng.integers(1, 500)),
            float(rng.uniform(0, 1)),
        )
        for i in range(k)
    ]


def test_criterion_coefficient_oracle_equivalence():
    """1,000 random instances: every scheme matches brute force to 1e-12."""
    with Criterion("coefficient oracle equivalence", budget_s=5.0):
        rng = np.random.default_rng(101)
        eps = 1e-8
        for _ in range(1000):
            k = int(rng.integers(1, 7))
            dim = int(rng.integers(1, 9))
            ups = random_updates(rng, k, dim)
            params_list = [u.params.values.tolist() for u in ups]
            ns = [u.n_samples for u in ups]
            accs = [u.train_accuracy for u in ups]

            pairs = [
                (fedavg_weights(ups), brute_fedavg(params_list, ns, accs)),
                (ida_weights(ups, eps), brute_ida(params_list, ns, accs, eps)),
                (intrac_weights(ups), brute_intrac(params_list, ns, accs)),
                (
                    combine_weights([ida_weights(ups, eps), fedavg_weights(ups)]),
                    brute_combine(
                        [brute_ida(params_list, ns, accs, eps), brute_fedavg(params_list, ns, accs)]
                    ),
                ),
                (
                    combine_weights([ida_weights(ups, eps), intrac_weights(ups)]),
                    brute_combine(
                        [brute_ida(params_list, ns, accs, eps), brute_intrac(params_list, ns, accs)]
                    ),
                ),
            ]
            for got, want in pairs:
                for i in range(k):
                    assert abs(got[i] - want[i]) <= 1e-12 * max(1.0, abs(want[i]))


def test_criterion_normalization_invariant():
    """10,000 fuzz cases: nonnegative coefficients summing to 1 within 1e-9."""
    with Criterion("normalization invariant", budget_s=60.0):
        rng = np.random.default_rng(103)
        strategies = [AggregationStrategy(kind) for kind in
                      ("mean", "fedavg", "ida", "ida+fedavg", "ida+intrac")]
        cases = 0
        for _ in range(2000):
            k = int(rng.integers(1, 9))
            dim = int(rng.integers(1, 17))
            scale = 10.0 ** rng.integers(-4, 5)
            ups = [
                ClientUpdate(
                    i,
                    ParamVector(rng.normal(size=dim) * scale),
                    int(rng.integers(1, 100_000)),
                    float(rng.uniform(0, 1)),
                )
                for i in range(k)
            ]
            for strategy in strategies:
                coeffs = strategy_weights(ups, strategy)
                values = list(coeffs.alphas.values())
                assert all(v >= 0.0 for v in values)
                assert abs(math.fsum(values) - 1.0) < 1e-9
                cases += 1
        assert cases == 10_000


def test_criterion_gradient_correctness():
    """Analytic gradients match central finite differences to 1e-4 relative."""
    with Criterion("gradient correctness", budget_s=10.0):
        rng = np.random.default_rng(107)
        h = 1e-5
        for trial in range(110):
            if trial % 2 == 0:
                spec = ModelSpec("logistic", int(rng.integers(1, 7)), int(rng.integers(2, 5)))
            else:
                spec = ModelSpec(
                    "mlp",
                    int(rng.integers(1, 7)),
                    int(rng.integers(2, 5)),
                    hidden_dim=int(rng.integers(1, 7)),
                )
            params = ParamVector(rng.uniform(-1, 1, size=spec.param_count))
            size = int(rng.integers(1, 9))
            batch = Batch(
                rng.normal(size=(size, spec.input_dim)),
                rng.integers(0, spec.n_classes, size=size),
            )
            _, analytic = loss_and_grad(spec, params, batch)

            numeric = np.zeros(spec.param_count)
            base = params.values
            for i in range(base.size):
                up, down = base.copy(), base.copy()
                up[i] += h
                down[i] -= h
                lu, _ = loss_and_grad(spec, ParamVector(up), batch)
                ld, _ = loss_and_grad(spec, ParamVector(down), batch)
                numeric[i] = (lu - ld) / (2 * h)

            rel = np.abs(analytic.values - numeric).max() / max(np.abs(numeric).max(), 1e-8)
            assert rel < 1e-4, f"trial {trial}: relative error {rel:.2e}"


def blob_dataset(n_classes=10, per_class=150, input_dim=16, seed=211):
    return generate_synthetic(
        SyntheticSpec(
            n_classes=n_classes,
            input_dim=input_dim,
            samples_per_class=per_class,
            cluster_spread=1.0,
            class_separation=6.0,
            seed=seed,
        )
    )


def history_key(state):
    """Everything in the history except the wall-clock timing field."""
    return [
        (
            r.round,
            tuple(r.participants),
            tuple(sorted(r.coefficients.alphas.items())),
            r.global_accuracy,
            tuple(sorted(r.local_accuracies.items())),
            r.local_mean,
            r.local_std,
        )
        for r in state.history
    ]


def test_criterion_symmetry_collapse():
    """Identical client data and counts: all five strategies match bit for bit."""
    with Criterion("symmetry collapse", budget_s=30.0):
        d = blob_dataset(n_classes=5, per_class=60, input_dim=8, seed=109)
        train, test = split_train_test(d, 0.9, seed=113)
        shards = [ClientShard(cid, train, test) for cid in range(8)]
        split = FederatedSplit(shards, {cid: list(range(5)) for cid in range(8)})

        histories = []
        finals = []
        for kind in ("mean", "fedavg", "ida", "ida+fedavg", "ida+intrac"):
            cfg = FederationConfig(
                rounds=10,
                participation_rate=1.0,
                strategy=AggregationStrategy(kind),
                train=TrainConfig(learning_rate=0.1, batch_size=1_000_000, local_iterations=2, seed=1),
                model=ModelSpec("logistic", 8, 5, init_seed=2),
                seed=3,
            )
            state = run_federation(cfg, split)
            ACCEPTANCE_STATES.append(state)
            histories.append(history_key(state))
            finals.append(state.global_params.values.tobytes())
        assert all(h == histories[0] for h in histories[1:]), "histories diverged across strategies"
        assert all(f == finals[0] for f in finals[1:]), "final parameters diverged across strategies"


def poisoned_setup():
    data = blob_dataset(seed=127)
    pspec = PartitionSpec(n_clients=10, classes_per_client=3, seed=131)
    scenario = PoisonedScenario(
        pspec,
        adversaries=[0],
        param_scale=10.0,
        sample_factor=5.0,  # the adversary reports 5x the median honest count
        strategies=["fedavg", "ida", "ida+intrac"],
    )
    base = FederationConfig(
        rounds=150,
        participation_rate=1.0,
        strategy=AggregationStrategy("ida"),
        train=TrainConfig(learning_rate=0.1, batch_size=32, local_iterations=1, seed=137),
        model=ModelSpec("logistic", 16, 10, init_seed=139),
        seed=149,
    )
    return data, scenario, base


def test_criterion_poisoned_client_ordering():
    """One 10x-scale adversary: IDA beats FedAvg by 10 points and gets the
    minimum coefficient in at least 95 percent of rounds."""
    with Criterion("poisoned-client ordering", budget_s=120.0):
        data, scenario, base = poisoned_setup()
        results = dict(record_states(run_scenario(scenario, base, data)))

        final = {kind: state.final_record().global_accuracy for kind, state in results.items()}
        assert final["ida"] >= final["fedavg"] + 0.10, final
        assert final["ida+intrac"] >= final["fedavg"] + 0.10, final

        ida_history = results["ida"].history
        minimum_rounds = sum(
            1
            for rec in ida_history
            if rec.coefficients[0] == min(rec.coefficients.alphas.values())
        )
        assert minimum_rounds / len(ida_history) >= 0.95


def test_criterion_severity_doubling():
    """Doubling and noising the three weakest clients collapses FedAvg while
    IDA loses at most half as much accuracy."""
    with Criterion("severity doubling", budget_s=240.0):
        data = blob_dataset(seed=151)
        scenario = SeverityDoublingScenario(
            PartitionSpec(n_clients=10, classes_per_client=3, seed=157),
            n_lowest=3,
            strategies=["fedavg", "ida"],
            noise_scale=5.0,
        )
        base = FederationConfig(
            rounds=80,
            participation_rate=1.0,
            strategy=AggregationStrategy("fedavg"),
            train=TrainConfig(learning_rate=0.1, batch_size=32, local_iterations=1, seed=163),
            model=ModelSpec("logistic", 16, 10, init_seed=167),
            seed=173,
        )
        results = dict(record_states(run_scenario(scenario, base, data)))

        acc = {label: state.final_record().global_accuracy for label, state in results.items()}
        drop_fedavg = acc["fedavg_phase1"] - acc["fedavg_phase2"]
        drop_ida = acc["ida_phase1"] - acc["ida_phase2"]
        assert drop_fedavg > 0, acc
        assert drop_ida <= drop_fedavg / 2, acc


def test_criterion_low_participation_determinism(tmp_path):
    """K=200 at pr 0.01 and 0.05 for 100 rounds: exact participant counts and
    byte-identical reruns (timing column excluded)."""
    with Criterion("low-participation determinism", budget_s=180.0):
        data = generate_synthetic(
            SyntheticSpec(
                n_classes=10,
                input_dim=8,
                samples_per_class=400,
                class_separation=6.0,
                seed=179,
            )
        )
        pspec = PartitionSpec(n_clients=200, classes_per_client=3, seed=181)
        scenario = LowParticipationScenario(pspec, pr_values=[0.01, 0.05])
        base = FederationConfig(
            rounds=100,
            participation_rate=1.0,
            strategy=AggregationStrategy("ida"),
            train=TrainConfig(learning_rate=0.1, batch_size=32, local_iterations=1, seed=191),
            model=ModelSpec("logistic", 8, 10, init_seed=193),
            seed=197,
        )

        def run_and_dump(suffix):
            results = record_states(run_scenario(scenario, base, data))
            paths = {}
            for label, state in results:
                expected = {"pr0.01": 2, "pr0.05": 10}[label]
                for rec in state.history:
                    assert len(rec.participants) == expected
                assert len(state.history) == 100
                path = tmp_path / f"{label}_{suffix}.csv"
                write_history(state.history, path)
                paths[label] = path
            return paths

        first = run_and_dump("a")
        second = run_and_dump("b")

        def strip_wall(path):
            lines = path.read_bytes().decode().splitlines()
            return "\n".join(",".join(line.split(",")[:-1]) for line in lines)

        for label in first:
            assert strip_wall(first[label]) == strip_wall(second[label]), f"{label} diverged"


def test_criterion_convergence_floor(artifact_dir):
    """iid split, K=10, pr=1: every strategy reaches at least 90 percent of
    the centralized oracle's pooled-test accuracy within 100 rounds."""
    with Criterion("desk-scale convergence floor", budget_s=60.0):
        data = blob_dataset(n_classes=6, per_class=120, input_dim=8, seed=199)
        pspec = PartitionSpec(n_clients=10, classes_per_client=6, seed=211)
        split = partition(data, pspec)

        # Centralized oracle: same model trained on the pooled train shards,
        # scored on the pooled test shards.
        pooled_train = Batch(
            np.concatenate([s.train.features for s in split.shards]),
            np.concatenate([s.train.labels for s in split.shards]),
        )
        model = ModelSpec("logistic", 8, 6, init_seed=223)
        train_cfg = TrainConfig(learning_rate=0.1, batch_size=32, local_iterations=100, seed=227)
        central_params, _ = train_local(model, init_params(model), pooled_train, train_cfg)
        from fedsim.metrics import global_accuracy

        oracle_acc = global_accuracy(model, central_params, split)
        assert oracle_acc > 0.9  # sanity: blobs are separable

        csv_paths = []
        for kind in ("mean", "fedavg", "ida", "ida+fedavg", "ida+intrac"):
            cfg = FederationConfig(
                rounds=100,
                participation_rate=1.0,
                strategy=AggregationStrategy(kind),
                train=TrainConfig(learning_rate=0.1, batch_size=32, local_iterations=1, seed=229),
                model=model,
                seed=233,
            )
            state = run_federation(cfg, split)
            ACCEPTANCE_STATES.append(state)
            acc = state.final_record().global_accuracy
            assert acc >= 0.9 * oracle_acc, f"{kind}: {acc:.3f} < 0.9 * {oracle_acc:.3f}"
            path = artifact_dir / f"floor_{kind.replace('+', '_')}.csv"
            write_history(state.history, path)
            csv_paths.append(path)


def test_criterion_convex_hull_zero_violations():
    """Every aggregation recorded by this suite stayed inside the
    coordinatewise hull of its participants."""
    with Criterion("convex-hull invariant", budget_s=30.0):
        if not ACCEPTANCE_STATES:  # standalone invocation: produce one run
            data = blob_dataset(n_classes=4, per_class=50, input_dim=4, seed=239)
            split = partition(data, PartitionSpec(n_clients=5, classes_per_client=4, seed=241))
            cfg = FederationConfig(
                rounds=10,
                participation_rate=1.0,
                strategy=AggregationStrategy("ida+intrac"),
                train=TrainConfig(learning_rate=0.1, batch_size=16, seed=1),
                model=ModelSpec("logistic", 4, 4, init_seed=2),
                seed=3,
            )
            ACCEPTANCE_STATES.append(run_federation(cfg, split))
        total_rounds = sum(len(s.history) for s in ACCEPTANCE_STATES)
        violations = sum(s.hull_violations for s in ACCEPTANCE_STATES)
        assert total_rounds > 0
        assert violations == 0, f"{violations} hull violations in {total_rounds} rounds"


def test_criterion_secondary_plot_curves(tmp_path, artifact_dir):
    """plot_curves renders a two-series figure from two acceptance-run CSVs."""
    with Criterion("secondary: plot_curves", budget_s=60.0):
        csvs = sorted(artifact_dir.glob("floor_*.csv"))
        if len(csvs) < 2:  # standalone invocation: produce two quick runs
            data = blob_dataset(n_classes=4, per_class=50, input_dim=4, seed=251)
            split = partition(data, PartitionSpec(n_clients=4, classes_per_client=4, seed=257))
            csvs = []
            for kind in ("mean", "ida"):
                cfg = FederationConfig(
                    rounds=8,
                    participation_rate=1.0,
                    strategy=AggregationStrategy(kind),
                    train=TrainConfig(learning_rate=0.1, batch_size=16, seed=1),
                    model=ModelSpec("logistic", 4, 4, init_seed=2),
                    seed=3,
                )
                state = run_federation(cfg, split)
                ACCEPTANCE_STATES.append(state)
                path = tmp_path / f"{kind}.csv"
                write_history(state.history, path)
                csvs.append(path)

        script = Path(__file__).resolve().parents[1] / "plots" / "plot_curves.py"
        out = tmp_path / "curves.png"
        proc = subprocess.run(
            [sys.executable, str(script), "--out", str(out), str(csvs[0]), str(csvs[1])],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.is_file() and out.stat().st_size > 0
