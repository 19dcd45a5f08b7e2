"""Two-mode Fock states used throughout: amplified macro-qubits, the
uniform-difference superposition, and their equal mixture.

States are sparse maps (n, m) -> LogAmplitude, immutable after construction.
Mixtures are ensembles of weighted pure states; every downstream quantity is
a convex combination over components, so density matrices are never stored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .numerics import LogAmplitude, log_factorial_array

STATE_SCHEMA_BASIS = "fock2"


@dataclass(frozen=True)
class GainParam:
    """Dimensionless parametric gain of the amplifier."""

    g: float

    def __post_init__(self):
        if not (math.isfinite(self.g) and self.g > 0):
            raise ValueError("gain must be finite and positive")


class TwoModeFockState:
    """Sparse pure state sum_{n,m} amp(n,m) |n,m>.

    ``tail_mass`` is a certified upper bound on the probability discarded by
    truncation; retained probabilities sum to 1 - tail_mass up to float
    rounding (after renormalisation the tail doubles as the relative
    uncertainty bound, hence the slack in the norm check).
    """

    __slots__ = ("_amps", "truncation_bound", "tail_mass", "_dense", "_order")

    def __init__(self, amplitudes: dict[tuple[int, int], LogAmplitude],
                 tail_mass: float = 0.0, _order: list | None = None,
                 _skip_check: bool = False):
        if not amplitudes:
            raise ValueError("state needs at least one component")
        self._amps = dict(amplitudes)
        self.tail_mass = float(tail_mass)
        self.truncation_bound = max(n + m for (n, m) in self._amps)
        self._dense = None
        self._order = _order if _order is not None else sorted(self._amps)
        if not _skip_check:
            total = self.norm_sq() + self.tail_mass
            if abs(total - 1.0) > max(1e-8, 2.0 * self.tail_mass):
                raise ValueError(f"state norm {total} too far from 1")

    # -- mapping interface -------------------------------------------------
    def amplitude(self, n: int, m: int) -> LogAmplitude:
        return self._amps.get((n, m), LogAmplitude.zero())

    def items(self) -> Iterator[tuple[tuple[int, int], LogAmplitude]]:
        """Components in a canonical order (shared by mirrored states)."""
        for key in self._order:
            yield key, self._amps[key]

    def __len__(self) -> int:
        return len(self._amps)

    def __contains__(self, key) -> bool:
        return key in self._amps

    @property
    def amplitudes(self) -> dict[tuple[int, int], LogAmplitude]:
        return dict(self._amps)

    # -- derived quantities --------------------------------------------
    def norm_sq(self) -> float:
        return math.fsum(math.exp(2.0 * a.log_mag)
                         for _, a in self.items() if a.sign != 0)

    def n_max(self) -> int:
        return max(n for (n, _) in self._amps)

    def m_max(self) -> int:
        return max(m for (_, m) in self._amps)

    def photon_means(self) -> tuple[float, float]:
        m1 = math.fsum(n * math.exp(2 * a.log_mag) for (n, _), a in self.items())
        m2 = math.fsum(m * math.exp(2 * a.log_mag) for (_, m), a in self.items())
        return m1, m2

    def total_photon_distribution(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for (n, m), a in self.items():
            out[n + m] = out.get(n + m, 0.0) + math.exp(2 * a.log_mag)
        return out

    def dense_log_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(log-magnitude, sign) grids over [0..n_max] x [0..m_max]."""
        if self._dense is None:
            n1 = self.n_max() + 1
            m1 = self.m_max() + 1
            log = np.full((n1, m1), -np.inf)
            sign = np.zeros((n1, m1), dtype=np.int8)
            for (n, m), a in self._amps.items():
                if a.sign != 0:
                    log[n, m] = a.log_mag
                    sign[n, m] = a.sign
            self._dense = (log, sign)
        return self._dense

    def mirrored(self) -> "TwoModeFockState":
        """The mode-swapped state, preserving the canonical component order."""
        amps = {(m, n): a for (n, m), a in self._amps.items()}
        order = [(m, n) for (n, m) in self._order]
        return TwoModeFockState(amps, self.tail_mass, _order=order,
                                _skip_check=True)

    def is_mirror_of(self, other: "TwoModeFockState") -> bool:
        if len(self) != len(other):
            return False
        for (n, m), a in self._amps.items():
            b = other._amps.get((m, n))
            if b is None or b.sign != a.sign or b.log_mag != a.log_mag:
                return False
        return True

    # -- serialization ------------------------------------------------------
    def to_json_dict(self) -> dict:
        terms = [[n, m, a.sign, a.log_mag] for (n, m), a in self.items()]
        return {"basis": STATE_SCHEMA_BASIS, "trunc": self.truncation_bound,
                "tail": self.tail_mass, "terms": terms}

    @staticmethod
    def from_json_dict(d: dict) -> "TwoModeFockState":
        if d.get("basis") != STATE_SCHEMA_BASIS:
            raise ValueError("unknown state basis")
        amps = {}
        order = []
        for n, m, sign, log_mag in d["terms"]:
            amps[(int(n), int(m))] = LogAmplitude(int(sign), float(log_mag))
            order.append((int(n), int(m)))
        return TwoModeFockState(amps, float(d.get("tail", 0.0)), _order=order)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def from_json(s: str) -> "TwoModeFockState":
        return TwoModeFockState.from_json_dict(json.loads(s))


@dataclass(frozen=True)
class StateEnsemble:
    """Convex mixture of pure states; weights sum to one."""

    components: tuple[tuple[float, TwoModeFockState], ...]

    def __post_init__(self):
        ws = [w for w, _ in self.components]
        if any(not (0.0 < w <= 1.0) for w in ws):
            raise ValueError("weights must lie in (0, 1]")
        if abs(math.fsum(ws) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def total_photon_distribution(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for w, st in self.components:
            for nn, p in st.total_photon_distribution().items():
                out[nn] = out.get(nn, 0.0) + w * p
        return out

    def to_json_dict(self) -> dict:
        return {"basis": STATE_SCHEMA_BASIS + "-ensemble",
                "components": [{"weight": w, "state": s.to_json_dict()}
                               for w, s in self.components]}

    @staticmethod
    def from_json_dict(d: dict) -> "StateEnsemble":
        comps = tuple((float(c["weight"]),
                       TwoModeFockState.from_json_dict(c["state"]))
                      for c in d["components"])
        return StateEnsemble(comps)


def _macro_log_weight_rows(g: float, count: int) -> tuple[np.ndarray, np.ndarray]:
    """log a_i (odd-mode factor) and log b_j (even-mode factor), i,j < count.

    The squared amplitude factorises as sech^4(g) * a_i * b_j with
    a_i = x^i (2i+1)!/(i!)^2 and b_j = x^j (2j)!/(j!)^2, x = tanh^2(g)/4.
    """
    lx = 2.0 * math.log(math.tanh(g) / 2.0)
    lf = log_factorial_array(2 * count)
    idx = np.arange(count)
    la = idx * lx + lf[2 * idx + 1] - 2.0 * lf[idx]
    lb = idx * lx + lf[2 * idx] - 2.0 * lf[idx]
    return la, lb


def macro_qubit(g: GainParam | float, orientation: str = "phi",
                tail_tolerance: float = 1e-9) -> TwoModeFockState:
    """Amplified single-photon macro-qubit.

    ``orientation="phi"`` populates (odd, even) occupation pairs with
    amplitudes sech^2(g) (tanh g / 2)^(i+j) sqrt((2i+1)!(2j)!)/(i! j!) at
    (n, m) = (2i+1, 2j); ``"phi_perp"`` is the mode-swapped mirror.  Terms
    are retained in decreasing-probability order until the kept probability
    reaches 1 - tail_tolerance; both orientations share the identical
    retention order, so mirrored pairs stay exactly fair downstream.
    """
    gv = g.g if isinstance(g, GainParam) else float(g)
    GainParam(gv)
    if orientation not in ("phi", "phi_perp"):
        raise ValueError("orientation must be 'phi' or 'phi_perp'")
    if not (0.0 < tail_tolerance < 1.0):
        raise ValueError("tail_tolerance must lie in (0, 1)")

    lc = -4.0 * math.log(math.cosh(gv))
    count = 64
    while True:
        la, lb = _macro_log_weight_rows(gv, count)
        # certified retained mass of the full box (weights are positive)
        ta = la.max()
        tb = lb.max()
        pa = math.log(np.exp(la - ta).sum()) + ta
        pb = math.log(np.exp(lb - tb).sum()) + tb
        box_mass = math.exp(lc + pa + pb)
        if box_mass >= 1.0 - tail_tolerance / 4.0 or count > 16384:
            break
        count *= 2
    lw = lc + la[:, None] + lb[None, :]
    flat = lw.ravel()
    order = np.argsort(-flat, kind="stable")
    probs = np.exp(flat[order])
    cum = np.cumsum(probs)
    keep = int(np.searchsorted(cum, 1.0 - tail_tolerance) + 1)
    keep = min(keep, len(flat))
    kept_idx = order[:keep]
    tail = max(0.0, 1.0 - float(cum[keep - 1]))

    amps: dict[tuple[int, int], LogAmplitude] = {}
    key_order: list[tuple[int, int]] = []
    for fi in kept_idx:
        i, j = divmod(int(fi), count)
        key = (2 * i + 1, 2 * j) if orientation == "phi" else (2 * j, 2 * i + 1)
        amps[key] = LogAmplitude(1, 0.5 * float(flat[fi]))
        key_order.append(key)
    return TwoModeFockState(amps, tail, _order=key_order)


def uniform_diff_state(s0: int) -> TwoModeFockState:
    """(1/sqrt(S0+1)) sum_n |n, S0-n>: flat occupation difference, no tail."""
    if s0 < 0:
        raise ValueError("total photon number must be non-negative")
    amp = LogAmplitude(1, -0.5 * math.log(s0 + 1))
    amps = {(n, s0 - n): amp for n in range(s0 + 1)}
    return TwoModeFockState(amps, 0.0)


def macro_qubit_mixture(g: GainParam | float,
                        tail_tolerance: float = 1e-9) -> StateEnsemble:
    """Equal mixture of the two mirrored macro-qubits at the same gain."""
    phi = macro_qubit(g, "phi", tail_tolerance)
    return StateEnsemble(((0.5, phi), (0.5, phi.mirrored())))
