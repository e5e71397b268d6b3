"""Accuracy-threshold lower bounds from malignant-set counts.

With ``alpha_k`` malignant k-sets among ``L`` locations, the probability
that an exRec fails at physical error rate ``eps`` is at most

    E(eps) = sum_k alpha_k eps^k + C(L, K+1) eps^(K+1) / (1 - L eps)

where ``K`` is the highest analysed order and the last term treats every
larger set as malignant (a geometric bound on the binomial tail, valid for
``eps < 1/L``).  The threshold bound ``eps_0`` is the largest ``eps`` with
``E(eps) <= eps``; the search is kept below ``1/(2L)`` so the tail bound is
comfortably valid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .malignancy import EXACT, MONTE_CARLO, MalignancyReport

EPS_CAP = 0.1
REL_PRECISION = 1e-6
CERT_STEP = 1e-5


class ThresholdError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdResult:
    epsilon_0: float
    method: str
    k_max: int
    locations: int
    t: int
    alphas: dict[int, float]
    tail_coefficient: int
    certificate: dict
    interval: tuple[float, float] | None = None
    one_sided: bool = False
    capped: bool = False
    inputs: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "epsilon_0": self.epsilon_0,
            "method": self.method,
            "k_max": self.k_max,
            "locations": self.locations,
            "t": self.t,
            "alphas": {str(k): v for k, v in sorted(self.alphas.items())},
            "tail_coefficient": self.tail_coefficient,
            "certificate": self.certificate,
            "one_sigma_interval": list(self.interval) if self.interval else None,
            "one_sided": self.one_sided,
            "capped": self.capped,
            "inputs": self.inputs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def failure_bound(eps: float, alphas: Mapping[int, float], L: int, k_max: int, tail: bool = True) -> float:
    """E(eps) as defined in the module docstring."""
    value = sum(a * eps**k for k, a in alphas.items())
    if tail:
        value += math.comb(L, k_max + 1) * eps ** (k_max + 1) / (1 - L * eps)
    return value


def threshold_from_coefficients(
    alphas: Mapping[int, float], L: int, k_max: int | None = None, *, tail: bool = True
) -> tuple[float, dict, bool]:
    """Largest eps in (0, min(0.1, 1/(2L))] with E(eps) <= eps.

    Returns ``(eps_0, certificate, capped)``; ``capped`` is set when the bound
    holds on the whole search range.
    """
    if k_max is None:
        k_max = max(alphas)
    if any(a < 0 for a in alphas.values()):
        raise ThresholdError("negative malignant count")
    if alphas.get(1, 0) >= 1 or any(a > 0 for k, a in alphas.items() if k < 1):
        raise ThresholdError("single faults already fail: no threshold")
    cap = min(EPS_CAP, 1 / (2 * L))

    def ok(eps: float) -> bool:
        # E(eps)/eps is increasing in eps, so the crossing is unique
        return eps <= cap and failure_bound(eps, alphas, L, k_max, tail) <= eps

    if ok(cap):
        return cap, _certificate(cap, alphas, L, k_max, tail), True
    # bracket on the fixed grid EPS_CAP / 2^j so that the answer moves
    # monotonically with the inputs, then bisect geometrically
    hi = EPS_CAP
    lo = hi / 2
    while not ok(lo):
        hi, lo = lo, lo / 2
        if lo < 1e-300:
            raise ThresholdError("no positive eps satisfies the bound")
    while hi / lo - 1 > REL_PRECISION:
        mid = math.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo, _certificate(lo, alphas, L, k_max, tail), False


def _certificate(eps: float, alphas, L: int, k_max: int, tail: bool) -> dict:
    above = eps * (1 + CERT_STEP)
    return {
        "epsilon": eps,
        "E_at_epsilon": failure_bound(eps, alphas, L, k_max, tail),
        "epsilon_above": above,
        "E_at_epsilon_above": failure_bound(above, alphas, L, k_max, tail) if above < 1 / L else None,
    }


def _collect(reports: Sequence[MalignancyReport], t: int) -> tuple[dict[int, MalignancyReport], int, int]:
    if not reports:
        raise ThresholdError("no malignancy reports")
    by_order: dict[int, MalignancyReport] = {}
    L = reports[0].locations
    for r in reports:
        if r.locations != L or r.exrec != reports[0].exrec:
            raise ThresholdError("reports describe different exRecs")
        if r.order in by_order:
            raise ThresholdError(f"two reports for order {r.order}")
        by_order[r.order] = r
    k_max = max(by_order)
    missing = [k for k in range(t + 1, k_max + 1) if k not in by_order]
    if missing:
        raise ThresholdError(f"missing orders: {missing}")
    return by_order, L, k_max


def compute_threshold(reports: Sequence[MalignancyReport], L: int | None, t: int) -> ThresholdResult:
    """Threshold bound from exact (or point-estimate) malignant counts."""
    by_order, L_reports, k_max = _collect(reports, t)
    L = L_reports if L is None else L
    if L != L_reports:
        raise ThresholdError(f"L={L} does not match the reports ({L_reports})")
    alphas = {k: r.alpha for k, r in by_order.items()}
    eps, cert, capped = threshold_from_coefficients(alphas, L, k_max)
    method = MONTE_CARLO if any(r.method == MONTE_CARLO for r in reports) else EXACT
    return ThresholdResult(
        epsilon_0=eps,
        method=method,
        k_max=k_max,
        locations=L,
        t=t,
        alphas=alphas,
        tail_coefficient=math.comb(L, k_max + 1),
        certificate=cert,
        capped=capped,
        inputs=[by_order[k].to_dict() for k in sorted(by_order)],
    )


def mc_threshold(reports: Sequence[MalignancyReport], L: int | None, t: int) -> ThresholdResult:
    """Point estimate plus a 1-sigma interval from propagating each f_hat +- sigma.

    E grows with every alpha, so raising all alphas by one sigma gives the
    lower end and lowering them gives the upper end.
    """
    point = compute_threshold(reports, L, t)
    by_order, _, k_max = _collect(reports, t)

    def solve(sign: int) -> float:
        alphas = {k: max(0.0, (r.f_hat + sign * r.sigma) * r.total_sets) for k, r in by_order.items()}
        return threshold_from_coefficients(alphas, point.locations, k_max)[0]

    interval = (solve(+1), solve(-1))
    one_sided = any(r.upper_bound_only for r in reports)
    return ThresholdResult(
        epsilon_0=point.epsilon_0,
        method=point.method,
        k_max=point.k_max,
        locations=point.locations,
        t=t,
        alphas=point.alphas,
        tail_coefficient=point.tail_coefficient,
        certificate=point.certificate,
        interval=interval,
        one_sided=one_sided,
        capped=point.capped,
        inputs=point.inputs,
    )
