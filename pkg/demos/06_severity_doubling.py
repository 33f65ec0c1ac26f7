#!/usr/bin/env python3
"""Two-phase severity experiment: reward the weakest clients with more data.

Phase 1 trains normally. The three clients with the worst final local
accuracy then get their training shards doubled, and in phase 2 they also
submit noise-corrupted parameters. Sample-count weighting now hands the
corrupted clients even more influence, while distance weighting contains
them.
"""

from fedsim import (
    AggregationStrategy,
    FederationConfig,
    ModelSpec,
    PartitionSpec,
    SeverityDoublingScenario,
    SyntheticSpec,
    TrainConfig,
    generate_synthetic,
    run_scenario,
)

data = generate_synthetic(
    SyntheticSpec(n_classes=10, input_dim=16, samples_per_class=150, class_separation=6.0, seed=83)
)
scenario = SeverityDoublingScenario(
    PartitionSpec(n_clients=10, classes_per_client=3, seed=89),
    n_lowest=3,
    strategies=["fedavg", "ida"],
    noise_scale=5.0,
)
base = FederationConfig(
    rounds=80,
    participation_rate=1.0,
    strategy=AggregationStrategy("fedavg"),
    train=TrainConfig(learning_rate=0.1, batch_size=32, local_iterations=1, seed=97),
    model=ModelSpec("logistic", 16, 10, init_seed=101),
    seed=103,
)

results = dict(run_scenario(scenario, base, data))

sizes1 = {c.client_id: c.n_samples for c in results["fedavg_phase1"].clients}
sizes2 = {c.client_id: c.n_samples for c in results["fedavg_phase2"].clients}
doubled = sorted(cid for cid in sizes1 if sizes2[cid] != sizes1[cid])
print(f"clients doubled (and noise-corrupted) between phases: {doubled}\n")

print(f"{'strategy':<8} {'phase 1 %':>10} {'phase 2 %':>10} {'drop':>8}")
for kind in ("fedavg", "ida"):
    a = results[f"{kind}_phase1"].final_record().global_accuracy
    b = results[f"{kind}_phase2"].final_record().global_accuracy
    print(f"{kind:<8} {100 * a:10.2f} {100 * b:10.2f} {100 * (a - b):8.2f}")
