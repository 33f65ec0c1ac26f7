"""Command-line front end: validate a JSON experiment config, run it, write artifacts.

One config file describes one scenario. Every run writes, into its output
directory, a per-run history CSV, a JSON sidecar with the full per-client
accuracy and coefficient maps, a partition summary, and an echo of the
resolved configuration, so any result can be reproduced from the
artifacts alone. Exit codes: 0 success, 1 config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import struct
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .aggregation import DEFAULT_EPSILON, STRATEGY_NAMES, AggregationStrategy
from .data import (
    Dataset,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    load_idx,
)
from .metrics import write_history, write_sidecar
from .models import ModelSpec, TrainConfig
from .orchestrator import (
    AblationScenario,
    FederationConfig,
    GridScenario,
    LowParticipationScenario,
    PoisonedScenario,
    Scenario,
    SeverityDoublingScenario,
    run_scenario,
)
from .partition import PartitionSpec, partition

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "apply_overrides", "run", "main"]


class ConfigError(Exception):
    """Invalid configuration file or command-line usage."""


@dataclass(frozen=True)
class SyntheticSource:
    spec: SyntheticSpec


@dataclass(frozen=True)
class IdxSource:
    images: str
    labels: str
    n_classes: int | None = None


@dataclass(frozen=True)
class CsvSource:
    path: str


DatasetSource = SyntheticSource | IdxSource | CsvSource


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSource
    partition: PartitionSpec
    federation: FederationConfig
    scenario: Scenario
    output_dir: str

    def to_dict(self) -> dict:
        src: dict = {"kind": _source_kind(self.dataset)}
        if isinstance(self.dataset, SyntheticSource):
            src.update(asdict(self.dataset.spec))
        else:
            src.update(asdict(self.dataset))
        scenario = asdict(self.scenario)
        scenario.pop("partition", None)
        scenario["kind"] = _scenario_kind(self.scenario)
        return {
            "dataset": src,
            "partition": asdict(self.partition),
            "federation": {
                **{
                    k: v
                    for k, v in asdict(self.federation).items()
                    if k not in ("strategy", "train", "model")
                },
                "strategy": self.federation.strategy.kind,
                "epsilon": self.federation.strategy.epsilon,
                "model": asdict(self.federation.model),
                "train": asdict(self.federation.train),
            },
            "scenario": scenario,
            "output_dir": self.output_dir,
        }


def _source_kind(source: DatasetSource) -> str:
    return {"SyntheticSource": "synthetic", "IdxSource": "idx", "CsvSource": "csv"}[
        type(source).__name__
    ]


def _scenario_kind(scenario: Scenario) -> str:
    return {
        "GridScenario": "grid",
        "AblationScenario": "ablation",
        "LowParticipationScenario": "low_participation",
        "SeverityDoublingScenario": "severity_doubling",
        "PoisonedScenario": "poisoned",
    }[type(scenario).__name__]


class _Section:
    """A config dict plus its dotted path, with typed, range-checked access."""

    def __init__(self, raw: dict, path: str):
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: expected an object, got {type(raw).__name__}")
        self.raw = dict(raw)
        self.path = path
        self._seen: set[str] = set()

    def _label(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key: str, types, default=None, required: bool = False):
        self._seen.add(key)
        if key not in self.raw or self.raw[key] is None:  # JSON null means "use default"
            if required:
                raise ConfigError(f"{self._label(key)}: missing required field")
            return default
        value = self.raw[key]
        if types is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if isinstance(value, bool) and types in (int, float):
            raise ConfigError(f"{self._label(key)}: expected {types.__name__}, got a boolean")
        if not isinstance(value, types):
            expected = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
            raise ConfigError(f"{self._label(key)}: expected {expected}, got {type(value).__name__}")
        return value

    def number(self, key: str, default=None, required=False, minimum=None, maximum=None,
               exclusive_min=None, integer=False):
        value = self.get(key, int if integer else (int, float), default=default, required=required)
        if value is None:
            return None
        value = int(value) if integer else float(value)
        label = self._label(key)
        if minimum is not None and value < minimum:
            raise ConfigError(f"{label}: must be >= {minimum}, got {value}")
        if exclusive_min is not None and value <= exclusive_min:
            raise ConfigError(f"{label}: must be > {exclusive_min}, got {value}")
        if maximum is not None and value > maximum:
            raise ConfigError(f"{label}: must be <= {maximum}, got {value}")
        return value

    def choice(self, key: str, options, default=None, required=False):
        value = self.get(key, str, default=default, required=required)
        if value is not None and value not in options:
            raise ConfigError(f"{self._label(key)}: {value!r} is not one of {sorted(options)}")
        return value

    def subsection(self, key: str) -> "_Section":
        self._seen.add(key)
        return _Section(self.raw.get(key, {}), self._label(key))

    def finish(self) -> None:
        unknown = set(self.raw) - self._seen
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(f"{self._label(key)}: unknown key")


def _parse_dataset(section: _Section) -> DatasetSource:
    kind = section.choice("kind", ("synthetic", "idx", "csv"), required=True)
    if kind == "synthetic":
        spc = section.get("samples_per_class", (int, list), default=100)
        if isinstance(spc, list):
            if not all(isinstance(x, int) and not isinstance(x, bool) for x in spc):
                raise ConfigError(f"{section._label('samples_per_class')}: list entries must be integers")
        try:
            spec = SyntheticSpec(
                n_classes=section.number("n_classes", default=10, integer=True, minimum=2),
                input_dim=section.number("input_dim", default=16, integer=True, minimum=1),
                samples_per_class=spc,
                cluster_spread=section.number("cluster_spread", default=1.0, exclusive_min=0.0),
                class_separation=section.number("class_separation", default=5.0, exclusive_min=0.0),
                seed=section.number("seed", default=0, integer=True, minimum=0),
            )
        except ValueError as exc:
            raise ConfigError(f"{section.path}: {exc}") from None
        source = SyntheticSource(spec)
    elif kind == "idx":
        images = section.get("images", str, required=True)
        labels = section.get("labels", str, required=True)
        for key, p in (("images", images), ("labels", labels)):
            if not Path(p).is_file():
                raise ConfigError(f"{section._label(key)}: file not found: {p}")
        source = IdxSource(images, labels, section.number("n_classes", integer=True, minimum=2))
    else:
        path = section.get("path", str, required=True)
        if not Path(path).is_file():
            raise ConfigError(f"{section._label('path')}: file not found: {path}")
        source = CsvSource(path)
    section.finish()
    return source


def _peek_dataset_shape(source: DatasetSource) -> tuple[int, int]:
    """(input_dim, n_classes) without materializing synthetic data."""
    if isinstance(source, SyntheticSource):
        return source.spec.input_dim, source.spec.n_classes
    if isinstance(source, IdxSource):
        header = Path(source.images).read_bytes()[:16]
        if len(header) < 16:
            raise ConfigError(f"dataset.images: truncated IDX header in {source.images}")
        _, _, rows, cols = struct.unpack(">IIII", header)
        if source.n_classes is not None:
            return rows * cols, source.n_classes
        labels = np.frombuffer(Path(source.labels).read_bytes()[8:], dtype=np.uint8)
        if labels.size == 0:
            raise ConfigError(f"dataset.labels: no labels in {source.labels}")
        return rows * cols, int(labels.max()) + 1
    d = _load_dataset(source)
    return d.input_dim, d.n_classes


def _load_dataset(source: DatasetSource) -> Dataset:
    if isinstance(source, SyntheticSource):
        return generate_synthetic(source.spec)
    if isinstance(source, IdxSource):
        return load_idx(source.images, source.labels, source.n_classes)
    return load_csv(source.path)


def _parse_partition(section: _Section, n_classes: int) -> PartitionSpec:
    try:
        spec = PartitionSpec(
            n_clients=section.number("n_clients", required=True, integer=True, minimum=1),
            classes_per_client=section.number(
                "classes_per_client", default=n_classes, integer=True, minimum=1
            ),
            samples_law=section.choice("samples_law", ("balanced", "uniform"), default="balanced"),
            max_per_class=section.number("max_per_class", integer=True, minimum=1),
            train_fraction=section.number("train_fraction", default=0.9, exclusive_min=0.0),
            seed=section.number("seed", default=0, integer=True, minimum=0),
        )
    except ValueError as exc:
        raise ConfigError(f"{section.path}: {exc}") from None
    if spec.classes_per_client > n_classes:
        raise ConfigError(
            f"{section.path}.classes_per_client: {spec.classes_per_client} exceeds "
            f"the dataset's {n_classes} classes"
        )
    section.finish()
    return spec


def _parse_federation(section: _Section, input_dim: int, n_classes: int) -> FederationConfig:
    model_sec = section.subsection("model")
    kind = model_sec.choice("kind", ("logistic", "mlp"), default="logistic")
    default_hidden = 32 if kind == "mlp" else 0
    try:
        model = ModelSpec(
            kind=kind,
            input_dim=model_sec.number("input_dim", default=input_dim, integer=True, minimum=1),
            n_classes=model_sec.number("n_classes", default=n_classes, integer=True, minimum=2),
            hidden_dim=model_sec.number("hidden_dim", default=default_hidden, integer=True, minimum=0),
            init_seed=model_sec.number("init_seed", default=0, integer=True, minimum=0),
        )
    except ValueError as exc:
        raise ConfigError(f"{model_sec.path}: {exc}") from None
    model_sec.finish()

    train_sec = section.subsection("train")
    train = TrainConfig(
        learning_rate=train_sec.number("learning_rate", default=0.05, exclusive_min=0.0),
        batch_size=train_sec.number("batch_size", default=128, integer=True, minimum=1),
        local_iterations=train_sec.number("local_iterations", default=1, integer=True, minimum=1),
        seed=train_sec.number("seed", default=0, integer=True, minimum=0),
    )
    train_sec.finish()

    strategy = AggregationStrategy(
        kind=section.choice("strategy", STRATEGY_NAMES, default="ida"),
        epsilon=section.number("epsilon", default=DEFAULT_EPSILON, exclusive_min=0.0),
    )
    cfg = FederationConfig(
        rounds=section.number("rounds", default=20, integer=True, minimum=1),
        participation_rate=section.number(
            "participation_rate", default=1.0, exclusive_min=0.0, maximum=1.0
        ),
        strategy=strategy,
        train=train,
        model=model,
        seed=section.number("seed", default=0, integer=True, minimum=0),
        eval_stride=section.number("eval_stride", default=1, integer=True, minimum=1),
    )
    section.finish()
    return cfg


def _parse_strategies(section: _Section, key: str, default: list[str]) -> list[str]:
    value = section.get(key, list, default=default)
    if not value:
        raise ConfigError(f"{section._label(key)}: must list at least one strategy")
    for s in value:
        if s not in STRATEGY_NAMES:
            raise ConfigError(f"{section._label(key)}: {s!r} is not one of {list(STRATEGY_NAMES)}")
    return list(value)


def _parse_scenario(
    section: _Section, pspec: PartitionSpec, federation: FederationConfig, n_classes: int
) -> Scenario:
    kind = section.choice(
        "kind",
        ("grid", "ablation", "low_participation", "severity_doubling", "poisoned"),
        default="ablation",
    )
    default_strategies = [federation.strategy.kind]
    if kind == "grid":
        n_cc_values = section.get("n_cc_values", list, required=True)
        pr_values = section.get("pr_values", list, default=[federation.participation_rate])
        for n in n_cc_values:
            if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= n_classes:
                raise ConfigError(
                    f"{section._label('n_cc_values')}: entries must be integers in [1, {n_classes}]"
                )
        for p in pr_values:
            if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0 < p <= 1:
                raise ConfigError(f"{section._label('pr_values')}: entries must lie in (0, 1]")
        scenario: Scenario = GridScenario(pspec, list(n_cc_values), [float(p) for p in pr_values])
    elif kind == "ablation":
        scenario = AblationScenario(pspec, _parse_strategies(section, "strategies", default_strategies))
    elif kind == "low_participation":
        pr_values = section.get("pr_values", list, required=True)
        for p in pr_values:
            if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0 < p <= 1:
                raise ConfigError(f"{section._label('pr_values')}: entries must lie in (0, 1]")
        scenario = LowParticipationScenario(pspec, [float(p) for p in pr_values])
    elif kind == "severity_doubling":
        n_lowest = section.number("n_lowest", default=3, integer=True, minimum=1)
        if n_lowest > pspec.n_clients:
            raise ConfigError(
                f"{section._label('n_lowest')}: {n_lowest} exceeds n_clients {pspec.n_clients}"
            )
        scenario = SeverityDoublingScenario(
            pspec,
            n_lowest=n_lowest,
            strategies=_parse_strategies(section, "strategies", default_strategies),
            noise_scale=section.number("noise_scale", default=0.0, minimum=0.0),
        )
    else:
        adversaries = section.get("adversaries", list, required=True)
        for a in adversaries:
            if not isinstance(a, int) or isinstance(a, bool) or not 0 <= a < pspec.n_clients:
                raise ConfigError(
                    f"{section._label('adversaries')}: entries must be client ids in "
                    f"[0, {pspec.n_clients})"
                )
        scenario = PoisonedScenario(
            pspec,
            adversaries=list(adversaries),
            param_scale=section.number("param_scale", default=10.0, minimum=0.0),
            sample_factor=section.number("sample_factor", default=1.0, exclusive_min=0.0),
            strategies=_parse_strategies(section, "strategies", default_strategies),
        )
    section.finish()
    return scenario


def _check_output_dir_creatable(path: str) -> None:
    p = Path(path)
    probe = p
    while not probe.exists():
        if probe.parent == probe:
            break
        probe = probe.parent
    if probe.exists() and not probe.is_dir():
        raise ConfigError(f"output_dir: {probe} exists and is not a directory")


def parse_config(path) -> ExperimentConfig:
    """Load and fully validate a JSON experiment config, applying defaults."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None

    top = _Section(raw, "")
    if "dataset" not in top.raw:
        raise ConfigError("dataset: missing required section")
    if "partition" not in top.raw:
        raise ConfigError("partition: missing required section")

    dataset = _parse_dataset(top.subsection("dataset"))
    try:
        input_dim, n_classes = _peek_dataset_shape(dataset)
    except (ValueError, OSError, struct.error) as exc:
        raise ConfigError(f"dataset: {exc}") from None
    pspec = _parse_partition(top.subsection("partition"), n_classes)
    try:
        federation = _parse_federation(top.subsection("federation"), input_dim, n_classes)
    except ValueError as exc:
        raise ConfigError(f"federation: {exc}") from None
    scenario = _parse_scenario(top.subsection("scenario"), pspec, federation, n_classes)
    output_dir = top.get("output_dir", str, default="runs")
    _check_output_dir_creatable(output_dir)
    top.finish()
    return ExperimentConfig(dataset, pspec, federation, scenario, output_dir)


def apply_overrides(
    config: ExperimentConfig,
    seed: int | None = None,
    output_dir: str | None = None,
    eval_stride: int | None = None,
) -> ExperimentConfig:
    """Apply command-line overrides; --seed reseeds every section deterministically."""
    if seed is not None:
        ds, ps, fs, ts = (int(x) for x in np.random.SeedSequence(seed).generate_state(4, np.uint64))
        dataset = config.dataset
        if isinstance(dataset, SyntheticSource):
            dataset = SyntheticSource(replace(dataset.spec, seed=ds))
        federation = replace(config.federation, seed=fs, train=replace(config.federation.train, seed=ts))
        pspec = replace(config.partition, seed=ps)
        scenario = replace(config.scenario, partition=pspec)
        config = replace(
            config, dataset=dataset, partition=pspec, federation=federation, scenario=scenario
        )
    if output_dir is not None:
        _check_output_dir_creatable(output_dir)
        config = replace(config, output_dir=output_dir)
    if eval_stride is not None:
        if eval_stride < 1:
            raise ConfigError(f"--eval-stride: must be >= 1, got {eval_stride}")
        config = replace(config, federation=replace(config.federation, eval_stride=eval_stride))
    return config


def planned_labels(scenario: Scenario) -> list[str]:
    if isinstance(scenario, GridScenario):
        return [f"ncc{n}_pr{p:g}" for n in scenario.n_cc_values for p in scenario.pr_values]
    if isinstance(scenario, AblationScenario):
        return list(scenario.strategies)
    if isinstance(scenario, LowParticipationScenario):
        return [f"pr{p:g}" for p in scenario.pr_values]
    if isinstance(scenario, SeverityDoublingScenario):
        strategies = scenario.strategies or []
        return [f"{s}_phase1" for s in strategies] + [f"{s}_phase2" for s in strategies]
    return list(scenario.strategies or [])


def _safe_filename(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-._" else "_" for ch in label)


def _percent(x: float) -> str:
    return "     -" if np.isnan(x) else f"{100 * x:6.2f}"


def _print_summary(results, out_dir: Path) -> None:
    width = max(12, max(len(label) for label, _ in results))
    print(f"\n{'run':<{width}}  {'strategy':<10}  {'global%':>8}  {'best%':>8}  local% (mean +- std)")
    print("-" * (width + 52))
    for label, state in results:
        rec = state.final_record()
        evaluated = [r.global_accuracy for r in state.history if not np.isnan(r.global_accuracy)]
        best = max(evaluated) if evaluated else float("nan")
        print(
            f"{label:<{width}}  {rec.strategy:<10}  {_percent(rec.global_accuracy):>8}  "
            f"{_percent(best):>8}  {_percent(rec.local_mean)} +- {_percent(rec.local_std).strip()}"
        )
    print(f"\nartifacts written to {out_dir}")


def run(config: ExperimentConfig) -> int:
    """Execute the configured scenario and write all artifacts. Returns 0."""
    t0 = time.perf_counter()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dataset = _load_dataset(config.dataset)
    results = run_scenario(config.scenario, config.federation, dataset)

    (out_dir / "config_echo.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n")
    split = partition(dataset, config.partition)
    (out_dir / "partition_summary.json").write_text(split.summary_json() + "\n")
    for label, state in results:
        stem = _safe_filename(label)
        write_history(state.history, out_dir / f"{stem}.csv")
        write_sidecar(state.history, out_dir / f"{stem}.json")

    violations = sum(state.hull_violations for _, state in results)
    if violations:
        print(f"warning: {violations} convex-hull violations detected", file=sys.stderr)
    _print_summary(results, out_dir)
    print(f"total wall time: {time.perf_counter() - t0:.1f}s")
    return 0


def _dry_run(config: ExperimentConfig) -> int:
    input_dim, n_classes = _peek_dataset_shape(config.dataset)
    labels = planned_labels(config.scenario)
    print(f"dataset:   {_source_kind(config.dataset)} (input_dim={input_dim}, n_classes={n_classes})")
    print(
        f"partition: K={config.partition.n_clients}, n_cc={config.partition.classes_per_client}, "
        f"law={config.partition.samples_law}, train_fraction={config.partition.train_fraction}"
    )
    fed = config.federation
    print(
        f"federation: rounds={fed.rounds}, pr={fed.participation_rate:g}, "
        f"strategy={fed.strategy.kind}, model={fed.model.kind}, lr={fed.train.learning_rate:g}, "
        f"batch={fed.train.batch_size}, E={fed.train.local_iterations}"
    )
    print(f"scenario:  {_scenario_kind(config.scenario)} -> {len(labels)} runs")
    for label in labels:
        print(f"  - {label}")
    print(f"output:    {config.output_dir}")
    print("dry run: no training performed")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for usage errors, matching config errors
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fedsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run the scenario described by a JSON config file")
    runp.add_argument("config", help="path to the experiment config")
    runp.add_argument("--seed", type=int, default=None, help="reseed every config section from N")
    runp.add_argument("--output", default=None, metavar="DIR", help="override output_dir")
    runp.add_argument("--dry-run", action="store_true", help="validate and print the plan only")
    runp.add_argument("--eval-stride", type=int, default=None, metavar="N",
                      help="evaluate accuracies every N rounds (final round always evaluated)")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = parse_config(args.config)
        config = apply_overrides(
            config, seed=args.seed, output_dir=args.output, eval_stride=args.eval_stride
        )
        if args.dry_run:
            return _dry_run(config)
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
