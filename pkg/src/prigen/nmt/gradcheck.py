"""Central finite differences against the analytic gradient.

Both sides run in ``np.longdouble`` (extended precision where the platform
has it): with float64, differencing roundoff alone exceeds 1e-4 relative
error on the many near-zero gradients of a freshly initialized model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PARAM_GROUPS, forward, loss_and_grads, make_batch

PRECISION = np.longdouble


@dataclass
class GradCheckResult:
    max_rel_error: float
    per_group: dict
    checked: int


def rel_error(ga, gn) -> float:
    return abs(ga - gn) / max(1e-8, abs(ga) + abs(gn))


def _sample_coords(params, n, rng):
    """At least ``n`` coordinates, spread so every parameter group is hit."""
    names = sorted(params)
    per_name = max(1, -(-n // len(names)))
    coords = []
    for name in names:
        size = params[name].size
        k = min(size, per_name)
        for flat in rng.choice(size, size=k, replace=False):
            coords.append((name, np.unravel_index(int(flat), params[name].shape)))
    return coords


def grad_check(params, examples, epsilon: float = 1e-4, samples: int = 200, seed: int = 0,
               corrupt=None) -> GradCheckResult:
    """Compare analytic and numeric gradients of the (dropout-free) loss.

    ``corrupt`` optionally maps the analytic gradient dict to a modified one;
    it exists for fault-injection tests.
    """
    batch = make_batch(list(examples))
    params = {k: np.array(v, dtype=PRECISION) for k, v in params.items()}
    _, grads = loss_and_grads(params, batch)
    if corrupt is not None:
        grads = corrupt(grads)
    rng = np.random.default_rng(seed)
    group_of = {p: g for g, names in PARAM_GROUPS.items() for p in names}
    per_group = {g: 0.0 for g in PARAM_GROUPS}
    coords = _sample_coords(params, samples, rng)
    for name, idx in coords:
        arr = params[name]
        old = arr[idx]
        arr[idx] = old + epsilon
        up, _ = forward(params, batch)
        arr[idx] = old - epsilon
        down, _ = forward(params, batch)
        arr[idx] = old
        err = rel_error(float(grads[name][idx]), float((up - down) / (2 * epsilon)))
        g = group_of[name]
        per_group[g] = max(per_group[g], err)
    return GradCheckResult(max(per_group.values()), per_group, len(coords))
