"""Central finite-difference check of tape gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from molssl.tensorkit.tensor import Tape, Tensor, backward


@dataclass
class GradCheckReport:
    max_rel_error: dict[str, float] = field(default_factory=dict)
    max_abs_error: dict[str, float] = field(default_factory=dict)
    tolerance: float = 1e-4
    failures: list[str] = field(default_factory=list)
    retried: int = 0
    n_checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)


def _rel_error(a: np.ndarray, n: np.ndarray, floor: float) -> np.ndarray:
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def grad_check(closure: Callable[[], Tensor], params: Sequence[Tensor],
               epsilon: float = 1e-5, tolerance: float = 1e-4, floor: float = 1e-6,
               names: Sequence[str] | None = None,
               retry_epsilons: Sequence[float] = (1e-7,),
               max_entries: int | None = None, seed: int = 0) -> GradCheckReport:
    """Compare tape gradients of ``closure()`` with central differences.

    ``closure`` must be deterministic (dropout off or seed-pinned). The
    relative error of an entry is ``|a - n| / max(|a|, |n|, floor)``.

    Piecewise-linear ops (relu) make a difference quotient meaningless when
    the step straddles a kink, so an entry that fails at ``epsilon`` is
    re-measured at each of ``retry_epsilons`` and keeps its smallest error.
    A wrong gradient disagrees at every step size.

    ``max_entries`` caps the entries probed per tensor (a fixed random
    subset drawn from ``seed``); every tensor is still checked.
    """
    names = list(names) if names is not None else [p.name or f"param{k}" for k, p in enumerate(params)]
    with Tape() as tape:
        loss = closure()
    analytic = backward(tape, loss, params)

    report = GradCheckReport(tolerance=tolerance)
    pick = np.random.default_rng(seed)
    for name, p, a in zip(names, params, analytic):
        flat = p.data.reshape(-1)
        a_flat = a.reshape(-1)
        probe = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            probe = np.sort(pick.choice(flat.size, max_entries, replace=False))
        num_flat = np.zeros(probe.size)

        def quotient(i, eps):
            orig = flat[i]
            flat[i] = orig + eps
            up = closure().item()
            flat[i] = orig - eps
            down = closure().item()
            flat[i] = orig
            return (up - down) / (2.0 * eps)

        for k, i in enumerate(probe):
            num_flat[k] = quotient(i, epsilon)
            for eps in retry_epsilons:
                if _rel_error(a_flat[i], num_flat[k], floor) < tolerance:
                    break
                alt = quotient(i, eps)
                if _rel_error(a_flat[i], alt, floor) < _rel_error(a_flat[i], num_flat[k], floor):
                    num_flat[k] = alt
                    report.retried += 1
        checked = a_flat[probe]
        rel = float(_rel_error(checked, num_flat, floor).max()) if probe.size else 0.0
        report.max_rel_error[name] = rel
        report.max_abs_error[name] = float(np.abs(checked - num_flat).max()) if probe.size else 0.0
        report.n_checked += int(probe.size)
        if not rel < tolerance:
            report.failures.append(name)
    return report
