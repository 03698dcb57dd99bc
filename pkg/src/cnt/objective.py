"""Physics-informed selection of the temporal ratio ``n`` and cutoff ``omega``.

The objective combines three statistics of denoised speckle maps

``J = alpha * K + beta * G + gamma * M``

where ``K`` is the mean local speckle contrast, ``G`` the mean squared
gradient and ``M`` the Pearson correlation of consecutive maps. Maps are
scaled to unit max-absolute-value first so the three terms share a scale.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np
from scipy import fft as sfft

from .aggregation import AggregationParams, SpeckleMap, map_sequence, max_windows
from .errors import ConfigurationError, ConstraintError, DegenerateInputError, InputError
from .events import EventStream
from .filtering import FilterSpec, band_irfft2, nyquist_radius, passband, transfer_function

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObjectiveWeights:
    alpha: float = 1.0
    beta: float = 0.2
    gamma: float = 5.0
    epsilon: float = 1e-6

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ConfigurationError("objective weights must be non-negative")
        if not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive")


@dataclass(frozen=True)
class SearchDomain:
    n_set: tuple = tuple(range(1, 11))
    omega_set: tuple = tuple(range(20, 61))

    def __post_init__(self):
        n_set = tuple(sorted({int(v) for v in self.n_set}))
        omega_set = tuple(sorted({int(v) for v in self.omega_set}))
        if not n_set or not omega_set:
            raise ConfigurationError("search domain must be nonempty")
        if n_set[0] < 1 or omega_set[0] < 1:
            raise ConfigurationError("n and omega must be positive")
        object.__setattr__(self, "n_set", n_set)
        object.__setattr__(self, "omega_set", omega_set)

    @classmethod
    def span(cls, n_lo: int, n_hi: int, w_lo: int, w_hi: int) -> "SearchDomain":
        return cls(tuple(range(n_lo, n_hi + 1)), tuple(range(w_lo, w_hi + 1)))

    def check(self, width: int, height: int, tau: float, min_window: float = 1e-6) -> None:
        if self.omega_set[-1] > nyquist_radius(width, height):
            raise ConfigurationError(f"omega {self.omega_set[-1]} exceeds the Nyquist radius")
        if tau / self.n_set[-1] < min_window:
            raise ConfigurationError(f"n = {self.n_set[-1]} gives a window below {min_window} s")


@dataclass(frozen=True)
class OMEConstraint:
    """Feasibility ``v_max * tau / n < d_ome``: the per-window travel stays within the memory effect."""

    v_max: float
    tau: float
    d_ome: float
    px_per_mm: float = 7.5

    def feasible(self, n: int) -> bool:
        return self.v_max * self.tau / n < self.d_ome

    def min_n(self) -> int:
        return int(np.floor(self.v_max * self.tau / self.d_ome)) + 1


# --- statistics -------------------------------------------------------------

def _values(m) -> np.ndarray:
    return np.asarray(m.values if isinstance(m, SpeckleMap) else m, dtype=float)


def _box_sums(a: np.ndarray, w: int) -> np.ndarray:
    c = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
    c[1:, 1:] = a.cumsum(0).cumsum(1)
    return c[w:, w:] - c[:-w, w:] - c[w:, :-w] + c[:-w, :-w]


def local_contrast(smap, window_w: int = 7, epsilon: float = 1e-6) -> float:
    """Mean over every fully interior ``w x w`` window of ``sigma / (|mu| + epsilon)``.

    ``sigma`` is the population standard deviation of the window.
    """
    a = _values(smap)
    w = int(window_w)
    if w < 2:
        raise InputError("contrast window must be at least 2 pixels")
    if a.ndim != 2 or a.shape[0] < w or a.shape[1] < w:
        raise InputError(f"map of shape {a.shape} is smaller than the {w}x{w} window")
    # shift by the global mean so the integral-image variance does not cancel badly
    c0 = a.mean()
    b = a - c0
    n = w * w
    mu = _box_sums(b, w) / n
    var = np.maximum(_box_sums(b * b, w) / n - mu * mu, 0.0)
    return float(np.mean(np.sqrt(var) / (np.abs(mu + c0) + epsilon)))


def gradient_energy(smap) -> float:
    """Mean of ``(dS/dx)^2 + (dS/dy)^2`` over interior pixels, central differences."""
    a = _values(smap)
    if a.ndim != 2 or min(a.shape) < 3:
        raise InputError("gradient energy needs a map at least 3x3")
    gx = (a[1:-1, 2:] - a[1:-1, :-2]) / 2.0
    gy = (a[2:, 1:-1] - a[:-2, 1:-1]) / 2.0
    return float(np.mean(gx * gx + gy * gy))


def temporal_correlation(map_a, map_b) -> float:
    """Pearson correlation over all pixels of two equally sized maps."""
    a, b = _values(map_a), _values(map_b)
    if a.shape != b.shape:
        raise InputError(f"map shapes differ: {a.shape} vs {b.shape}")
    da, db = a - a.mean(), b - b.mean()
    va, vb = np.sum(da * da), np.sum(db * db)
    if va == 0 or vb == 0:
        raise DegenerateInputError("temporal correlation of a zero-variance map")
    return float(np.clip(np.sum(da * db) / np.sqrt(va * vb), -1.0, 1.0))


def _normalize(a: np.ndarray) -> np.ndarray:
    m = np.max(np.abs(a))
    return a / m if m > 0 else a


@dataclass(frozen=True)
class ObjectiveTerms:
    K: float
    G: float
    M: float
    J: float


def composite_objective(maps, weights: ObjectiveWeights = ObjectiveWeights(),
                        window_w: int = 7) -> ObjectiveTerms:
    """K and G averaged over the maps, M over consecutive pairs, then the weighted sum."""
    arrs = [_normalize(_values(m)) for m in maps]
    if len(arrs) < 2:
        raise InputError("composite objective needs at least two maps")
    K = float(np.mean([local_contrast(a, window_w, weights.epsilon) for a in arrs]))
    G = float(np.mean([gradient_energy(a) for a in arrs]))
    M = float(np.mean([temporal_correlation(a, b) for a, b in zip(arrs[:-1], arrs[1:])]))
    return ObjectiveTerms(K, G, M, weights.alpha * K + weights.beta * G + weights.gamma * M)


# --- search -----------------------------------------------------------------

@dataclass
class ObjectiveReport:
    """Every evaluated (n, omega) with its terms, the feasibility mask and the choice."""

    domain: SearchDomain
    table: dict = field(default_factory=dict)
    feasible: dict = field(default_factory=dict)
    best: tuple = (0, 0)
    coarse_best: tuple = (0, 0)

    @property
    def n_star(self) -> int:
        return self.best[0]

    @property
    def omega_star(self) -> int:
        return self.best[1]

    def grid(self, term: str = "J") -> np.ndarray:
        """Array over ``(n_set, omega_set)``; unevaluated or infeasible entries are NaN."""
        out = np.full((len(self.domain.n_set), len(self.domain.omega_set)), np.nan)
        for i, n in enumerate(self.domain.n_set):
            for j, w in enumerate(self.domain.omega_set):
                t = self.table.get((n, w))
                if t is not None:
                    out[i, j] = getattr(t, term)
        return out

    def to_dict(self) -> dict:
        return {
            "n_star": self.n_star,
            "omega_star": self.omega_star,
            "coarse_best": list(self.coarse_best),
            "feasible_n": [n for n in self.domain.n_set if self.feasible.get(n, True)],
            "evaluations": [
                {"n": n, "omega": w, "K": t.K, "G": t.G, "M": t.M, "J": t.J}
                for (n, w), t in sorted(self.table.items())
            ],
        }


def _rank(key: tuple, table: dict) -> tuple:
    # larger J wins; ties prefer smaller n, then smaller omega
    return (-table[key].J, key[0], key[1])


def _argmax(keys: Iterable[tuple], table: dict) -> tuple:
    return min(keys, key=lambda k: _rank(k, table))


class MapEvaluator:
    """Caches aggregated maps and their spectra per ``n``; evaluates J per ``(n, omega)``."""

    def __init__(self, stream: EventStream, tau: float = 0.040, maps_per_eval: int = 8,
                 weights: ObjectiveWeights = ObjectiveWeights(), window_w: int = 7,
                 shape: str = "ideal-circular"):
        self.stream = stream
        self.tau = tau
        self.maps_per_eval = maps_per_eval
        self.weights = weights
        self.window_w = window_w
        self.shape = shape
        self._spectra: dict = {}

    def spectra(self, n: int) -> np.ndarray:
        if n not in self._spectra:
            params = AggregationParams(n, self.tau)
            count = min(self.maps_per_eval, max_windows(self.stream, params))
            if count < 2:
                raise InputError(f"stream too short for two windows at n={n}")
            maps = map_sequence(self.stream, params.window / 2, count, params)
            stack = np.stack([m.values for m in maps]).astype(np.float32)
            self._spectra[n] = sfft.rfft2(stack, axes=(1, 2))
        return self._spectra[n]

    def __call__(self, n: int, omega: int) -> ObjectiveTerms:
        h, w = self.stream.height, self.stream.width
        H = transfer_function(FilterSpec(omega, self.shape), w, h)
        band = passband(H, h, w)
        Z = self.spectra(n)[:, :, : band[1]] * H[:, : band[1]].astype(np.float32)
        maps = band_irfft2(Z, (h, w), band)
        return composite_objective(list(maps), self.weights, self.window_w)


def optimize(stream: EventStream, domain: SearchDomain = SearchDomain(),
             weights: ObjectiveWeights = ObjectiveWeights(),
             constraint: Optional[OMEConstraint] = None, tau: float = 0.040,
             maps_per_eval: int = 8, exhaustive: bool = False,
             evaluate: Optional[Callable[[int, int], ObjectiveTerms]] = None,
             omega_stride: int = 5) -> ObjectiveReport:
    """Choose ``(n*, omega*)`` maximising J by a coarse lattice search and hill climbing.

    Parameters
    ----------
    stream : EventStream
        Sorted events long enough for two windows at every candidate ``n``.
    constraint : OMEConstraint, optional
        Removes every ``n`` with ``v_max * tau / n >= d_ome``.
    exhaustive : bool
        Evaluate the full grid and return its argmax instead of searching.
    evaluate : callable, optional
        Replacement for the map-based evaluation, ``(n, omega) -> ObjectiveTerms``.
    """
    domain.check(stream.width, stream.height, tau)
    report = ObjectiveReport(domain)
    for n in domain.n_set:
        report.feasible[n] = constraint.feasible(n) if constraint else True
    ns = [n for n in domain.n_set if report.feasible[n]]
    if not ns:
        raise ConstraintError(
            f"no feasible n: v_max*tau/n < d_ome needs n >= {constraint.min_n()} "
            f"(v_max={constraint.v_max} mm/s, tau={constraint.tau} s, d_ome={constraint.d_ome} mm)")
    ws = list(domain.omega_set)
    f = evaluate or MapEvaluator(stream, tau, maps_per_eval, weights)
    table = report.table

    def J(key):
        if key not in table:
            table[key] = f(*key)
        return table[key]

    if exhaustive:
        for n in ns:
            for w in ws:
                J((n, w))
        report.best = report.coarse_best = _argmax(table, table)
        return report

    lattice = [(n, w) for n in ns for w in ws[::omega_stride]]
    for key in lattice:
        J(key)
    cur = report.coarse_best = _argmax(lattice, table)
    while True:
        i, j = ns.index(cur[0]), ws.index(cur[1])
        moves = [(ns[a], cur[1]) for a in (i - 1, i + 1) if 0 <= a < len(ns)]
        moves += [(cur[0], ws[b]) for b in (j - 1, j + 1) if 0 <= b < len(ws)]
        for key in moves:
            J(key)
        nxt = _argmax([cur] + moves, table)
        if nxt == cur:
            break
        cur = nxt
    report.best = cur
    log.info("optimum n=%d omega=%d J=%.4f after %d evaluations", cur[0], cur[1],
             table[cur].J, len(table))
    return report
