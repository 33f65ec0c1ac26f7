#!/usr/bin/env python3
"""Strategy ablation on one shared non-iid split.

All five weighting schemes train the same logistic model on the same
3-classes-per-client federation, so differences come from the server-side
weighting alone. History CSVs land in demos/out/ablation/ and can be
rendered with plots/plot_curves.py.
"""

from pathlib import Path

from fedsim import (
    AblationScenario,
    AggregationStrategy,
    FederationConfig,
    ModelSpec,
    PartitionSpec,
    SyntheticSpec,
    TrainConfig,
    generate_synthetic,
    run_scenario,
    write_history,
)

out_dir = Path(__file__).parent / "out" / "ablation"
out_dir.mkdir(parents=True, exist_ok=True)

data = generate_synthetic(
    SyntheticSpec(n_classes=10, input_dim=16, samples_per_class=150, class_separation=1.2, seed=21)
)
scenario = AblationScenario(
    PartitionSpec(n_clients=10, classes_per_client=3, seed=23),
    strategies=["mean", "fedavg", "ida", "ida+fedavg", "ida+intrac"],
)
base = FederationConfig(
    rounds=60,
    participation_rate=0.5,  # half the clients are sampled each round
    strategy=AggregationStrategy("ida"),
    train=TrainConfig(learning_rate=0.1, batch_size=32, local_iterations=1, seed=29),
    model=ModelSpec("logistic", 16, 10, init_seed=31),
    seed=37,
)

results = run_scenario(scenario, base, data)

print(f"{'strategy':<12} {'final global %':>14} {'local mean % +- std':>22}")
for label, state in results:
    rec = state.final_record()
    print(
        f"{label:<12} {100 * rec.global_accuracy:14.2f} "
        f"{100 * rec.local_mean:14.2f} +- {100 * rec.local_std:.2f}"
    )
    write_history(state.history, out_dir / f"{label.replace('+', '_')}.csv")

print(f"\nhistories written to {out_dir}")
print("render them with:")
print(f"  python plots/plot_curves.py --out {out_dir}/curves.png {out_dir}/*.csv")
