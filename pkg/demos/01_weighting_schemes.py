#!/usr/bin/env python3
"""A tour of the aggregation weighting schemes on a single hand-built round.

Five clients report parameters, sample counts, and training accuracies.
One of them (client 4) is an outlier whose parameters sit far from the
others. Watch how each scheme treats it.
"""

import numpy as np

from fedsim import AggregationStrategy, ClientUpdate, ParamVector, aggregate, strategy_weights

rng = np.random.default_rng(7)

# Four well-behaved clients near the same optimum, one outlier at 10x scale.
center = rng.normal(size=6)
updates = []
for cid in range(4):
    params = ParamVector(center + 0.05 * rng.normal(size=6))
    updates.append(ClientUpdate(cid, params, n_samples=100 + 40 * cid, train_accuracy=0.85 + 0.03 * cid))
outlier = ParamVector(10.0 * rng.normal(size=6))
updates.append(ClientUpdate(4, outlier, n_samples=500, train_accuracy=0.35))

print("client | n_samples | train_acc | L1 distance to the client average")
avg = np.mean([u.params.values for u in updates], axis=0)
for u in updates:
    dist = np.abs(avg - u.params.values).sum()
    print(f"  {u.client_id}    |   {u.n_samples:4d}    |   {u.train_accuracy:.2f}    | {dist:8.3f}")

print("\ncoefficients per scheme (client 4 is the outlier):")
print(f"{'scheme':<12}" + "".join(f"  a_{cid}   " for cid in range(5)))
for kind in ("mean", "fedavg", "ida", "ida+fedavg", "ida+intrac"):
    coeffs = strategy_weights(updates, AggregationStrategy(kind))
    row = "".join(f"{coeffs[cid]:7.4f} " for cid in range(5))
    print(f"{kind:<12}{row}")

print("\nNotes:")
print(" - mean ignores everything and splits 1/K.")
print(" - fedavg rewards the outlier for reporting many samples.")
print(" - ida collapses the outlier's weight because its parameters are far away.")
print(" - ida+intrac additionally boosts clients that have not overfitted.")

print("\ndistance from each aggregate to the honest clients' average:")
honest_avg = np.mean([u.params.values for u in updates[:4]], axis=0)
for kind in ("mean", "fedavg", "ida", "ida+intrac"):
    out = aggregate(updates, AggregationStrategy(kind))
    print(f"  {kind:<12} {np.abs(out.values - honest_avg).sum():8.3f}")
