"""The ideal modulus-of-difference filter: projection onto |n - m| >= threshold,
binomial loss channels, joint photon-number distributions and macro-qubit
distinguishability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConditioningError
from .numerics import LogAmplitude, log_factorial_array
from .states import StateEnsemble, TwoModeFockState


@dataclass(frozen=True)
class FilterThreshold:
    delta_th: int

    def __post_init__(self):
        if self.delta_th < 0:
            raise ValueError("threshold must be non-negative")


@dataclass(frozen=True)
class LossChannel:
    """Beam-splitter loss of reflectivity R; each photon survives w.p. 1-R."""

    R: float

    def __post_init__(self):
        if not (0.0 <= self.R <= 1.0):
            raise ValueError("loss R must lie in [0, 1]")


@dataclass
class JointPhotonDistribution:
    """Dense probability grid over detected pairs (k, l).

    ``discarded_mass`` accounts for truncation tails and grid trimming, so
    probs.sum() + discarded_mass = 1 up to the certified tail bound.
    """

    probs: np.ndarray
    discarded_mass: float = 0.0
    success_prob: float = 1.0
    meta: dict = field(default_factory=dict)

    def k_max(self) -> int:
        return self.probs.shape[0] - 1

    def l_max(self) -> int:
        return self.probs.shape[1] - 1

    def diff_marginal_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        n1, m1 = self.probs.shape
        k = np.arange(n1)[:, None]
        l = np.arange(m1)[None, :]
        d = (k - l).ravel() + (m1 - 1)
        probs = np.bincount(d, weights=self.probs.ravel(), minlength=n1 + m1 - 1)
        return np.arange(-(m1 - 1), n1), probs


@dataclass(frozen=True)
class DistinguishabilityReport:
    v: float
    P_S1: float
    P_S2: float
    success_prob: float


def loss_matrix(n_max: int, R: float) -> np.ndarray:
    """B[n, k] = probability that k of n photons survive loss R."""
    if R == 0.0:
        return np.eye(n_max + 1)
    B = np.zeros((n_max + 1, n_max + 1))
    if R == 1.0:
        B[:, 0] = 1.0
        return B
    lf = log_factorial_array(n_max)
    lt = math.log1p(-R)
    lr = math.log(R)
    for n in range(n_max + 1):
        k = np.arange(n + 1)
        B[n, : n + 1] = np.exp(lf[n] - lf[k] - lf[n - k] + k * lt + (n - k) * lr)
    return B


def project_mdf(obj, th: FilterThreshold):
    """Keep components with |n - m| >= threshold and renormalise.

    Returns ``(filtered, success_prob)`` where success is the pre-renormalised
    surviving probability.  ``filtered`` is None when nothing survives.
    Ensembles are filtered component-wise with weights re-scaled by the
    per-component success.
    """
    if isinstance(obj, StateEnsemble):
        parts = []
        weighted = []
        for w, st in obj:
            fst, s = project_mdf(st, th)
            weighted.append(w * s)
            if fst is not None and s > 0.0:
                parts.append((w * s, fst))
        total = math.fsum(weighted)
        if total == 0.0 or not parts:
            return None, 0.0
        comps = tuple((ws / total, fst) for ws, fst in parts)
        return StateEnsemble(comps), total

    state: TwoModeFockState = obj
    dth = th.delta_th
    if dth == 0:
        return state, 1.0
    kept: list[tuple[tuple[int, int], LogAmplitude]] = []
    survival = []
    for (n, m), a in state.items():
        if abs(n - m) >= dth:
            kept.append(((n, m), a))
            survival.append(math.exp(2.0 * a.log_mag))
    success = math.fsum(survival)
    if success == 0.0 or not kept:
        return None, 0.0
    half = 0.5 * math.log(success)
    amps = {key: LogAmplitude(a.sign, a.log_mag - half) for key, a in kept}
    order = [key for key, _ in kept]
    tail = min(1.0, state.tail_mass / success)
    return TwoModeFockState(amps, tail, _order=order), success


def _component_prob_grid(state: TwoModeFockState, n1: int, m1: int) -> np.ndarray:
    W = np.zeros((n1, m1))
    for (n, m), a in state.items():
        W[n, m] += math.exp(2.0 * a.log_mag)
    return W


def lossy_photon_distribution(obj, loss: LossChannel, th: FilterThreshold,
                              grid_tail: float = 1e-6) -> JointPhotonDistribution:
    """Joint detected-photon distribution of the filtered state after loss.

    For R = 0 the filtered probabilities are placed on the grid exactly; for
    R > 0 each axis is thinned with a binomial loss kernel (dense matrix
    products, weights masked by the threshold before mixing).  The grid is
    trimmed to the smallest rectangle holding 1 - grid_tail of the mass.
    """
    filtered, success = project_mdf(obj, th)
    if filtered is None:
        raise DegenerateConditioningError("filter removed the entire state")
    comps = list(filtered) if isinstance(filtered, StateEnsemble) \
        else [(1.0, filtered)]
    n1 = max(st.n_max() for _, st in comps) + 1
    m1 = max(st.m_max() for _, st in comps) + 1
    W = np.zeros((n1, m1))
    for w, st in comps:
        W += w * _component_prob_grid(st, n1, m1)
    R = loss.R
    if R == 0.0:
        P = W
    else:
        Bn = loss_matrix(n1 - 1, R)
        Bm = loss_matrix(m1 - 1, R)
        P = Bn.T @ W @ Bm

    # trim trailing rows/columns worth < grid_tail of probability
    discard = 0.0
    budget = grid_tail
    while P.shape[0] > 1:
        edge = float(P[-1, :].sum())
        if discard + edge > budget:
            break
        discard += edge
        P = P[:-1, :]
    while P.shape[1] > 1:
        edge = float(P[:, -1].sum())
        if discard + edge > budget:
            break
        discard += edge
        P = P[:, :-1]
    total_tail = max(0.0, 1.0 - float(P.sum()))
    return JointPhotonDistribution(np.ascontiguousarray(P), total_tail, success)


def distinguishability(p: JointPhotonDistribution) -> DistinguishabilityReport:
    """Probability imbalance between the two half-planes.

    v is the difference against the mirrored twin distribution, so diagonal
    mass (k = l) cancels out of it: v = P(k > l) - P(k < l).  The reported
    region probabilities keep the bookkeeping convention that the diagonal
    belongs to S1, hence v = P_S1 - P_S2 exactly whenever the diagonal is
    empty (every lossless filtered state, whose parities never meet).
    """
    total = float(p.probs.sum())
    if total <= 0.0:
        raise ValueError("empty distribution")
    lower = float(np.tril(p.probs, -1).sum()) / total   # k > l
    upper = float(np.triu(p.probs, 1).sum()) / total    # k < l
    p1 = lower + (1.0 - lower - upper)                  # diagonal counted in S1
    return DistinguishabilityReport(lower - upper, p1, 1.0 - p1, p.success_prob)


def summary_metrics(p: JointPhotonDistribution) -> dict:
    """Peak and gap diagnostics used by the command-line summaries.

    Region peaks are maxima of the joint grid over k > l and k < l.  Cut
    peaks are maxima along the first populated column / row (the 1-d side
    panels of the standard intensity plots).  ``gap_depth`` measures how
    empty the |k - l| valley is relative to the difference-marginal peak,
    with the valley width scaled by the surviving fraction 1 - R.
    """
    P = p.probs
    n1, m1 = P.shape
    k = np.arange(n1)[:, None]
    l = np.arange(m1)[None, :]
    out: dict = {}
    for name, mask in (("s1", k > l), ("s2", k < l)):
        masked = np.where(mask, P, -1.0)
        idx = np.unravel_index(int(masked.argmax()), P.shape)
        out[f"{name}_peak"] = float(P[idx]) if masked[idx] >= 0 else 0.0
        out[f"{name}_peak_at"] = [int(idx[0]), int(idx[1])]
    col_mass = P.sum(axis=0)
    row_mass = P.sum(axis=1)
    k0 = int(np.argmax(row_mass > 0.0))
    l0 = int(np.argmax(col_mass > 0.0))
    out["left_cut_k"] = k0
    out["left_cut_peak"] = float(P[k0, :].max())
    out["bottom_cut_l"] = l0
    out["bottom_cut_peak"] = float(P[:, l0].max())

    deltas, marg = p.diff_marginal_arrays()
    peak = float(marg.max())
    delta_th = int(p.meta.get("delta_th", 0))
    R = float(p.meta.get("loss_R", 0.0))
    half = max(1, int(round((1.0 - R) * delta_th / 2.0))) if delta_th else 1
    valley = marg[np.abs(deltas) <= half]
    out["gap_depth"] = 1.0 - float(valley.mean()) / peak if peak > 0 else 0.0
    return out


@dataclass(frozen=True)
class SweepRow:
    delta_th: int
    R: float
    v: float
    success_prob: float


def distinguishability_vs_loss(g: float, th: FilterThreshold, r_grid,
                               tail_tolerance: float = 1e-9,
                               grid_tail: float = 1e-6) -> list[SweepRow]:
    """Distinguishability of the macro-qubit versus loss at one threshold."""
    from .states import macro_qubit

    state = macro_qubit(g, "phi", tail_tolerance)
    rows = []
    for R in r_grid:
        jpd = lossy_photon_distribution(state, LossChannel(float(R)), th,
                                        grid_tail)
        rep = distinguishability(jpd)
        rows.append(SweepRow(th.delta_th, float(R), rep.v, rep.success_prob))
    return rows


def threshold_sweep(g: float, delta_ths, R: float = 0.0,
                    tail_tolerance: float = 1e-9,
                    grid_tail: float = 1e-6) -> list[SweepRow]:
    """Distinguishability and success probability across thresholds."""
    from .states import macro_qubit

    state = macro_qubit(g, "phi", tail_tolerance)
    rows = []
    for dth in delta_ths:
        jpd = lossy_photon_distribution(state, LossChannel(R),
                                        FilterThreshold(int(dth)), grid_tail)
        rep = distinguishability(jpd)
        rows.append(SweepRow(int(dth), R, rep.v, rep.success_prob))
    return rows
