"""Greedy secondary-source placement minimizing expected synthesis error.

The cost of a candidate subset S is the expected regularized regional
reproduction error over a statistical prior of desired fields,

    J(S) = E_b[ min_d (C_S d - b)^H W (C_S d - b) + lam ||d||^2 ]
         = tr(W R) - tr(A_S T_SS),

with G = C^H W C, T = C^H W R W C, A_S = (G_SS + lam I)^{-1}, and
R = Sigma + mu mu^H the second moment of the prior on the desired-field
coefficients b. Only (mu, Sigma) enter J, so any two-moment-matched
distribution gives the same cost. Greedy selection adds one source at a
time, growing the cached inverse A by a bordered rank-one block update;
evaluating all candidates at step l costs O(N l^2) and a full run of L
picks O(N L^3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .synthesis import WeightMatrix
from .wavefield import (
    CircularRegion,
    ExpansionConfig,
    ExpansionCoeffs,
    Frequency,
    _as_points,
    _ipow,
)
from . import specfun

__all__ = [
    "NumericalBreakdown",
    "FieldPrior",
    "DirectionRangePrior",
    "prior_from_direction_range",
    "SelectionState",
    "placement_cost",
    "state_cost",
    "candidate_deltas",
    "extend_inverse",
    "rebuild_inverse",
    "PlacementResult",
    "BroadbandBin",
    "BroadbandSpec",
    "greedy_place",
    "greedy_place_broadband",
    "broadband_cost",
    "exhaustive_place",
    "regular_placement_a",
    "regular_placement_b",
    "predicted_work",
]

# rank-one growth fails when the effective pivot vanishes relative to the
# new diagonal entry; lam > 0 makes this rare but duplicate candidates at
# tiny lam can trigger it
BREAKDOWN_RTOL = 1e-12


class NumericalBreakdown(Exception):
    """Pivot too small for a stable rank-one inverse update."""


def _hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


# ---------------------------------------------------------------------------
# desired-field priors


@dataclass(frozen=True)
class FieldPrior:
    """First two moments of the desired-field expansion coefficients."""

    mean: np.ndarray
    covariance: np.ndarray
    second_moment: np.ndarray | None = None

    def __post_init__(self):
        mu = np.ascontiguousarray(self.mean, dtype=np.complex128)
        sig = np.ascontiguousarray(self.covariance, dtype=np.complex128)
        if mu.ndim != 1 or sig.shape != (mu.size, mu.size):
            raise ValueError("covariance shape must match the mean length")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sig))):
            raise ValueError("prior moments must be finite")
        scale = max(float(np.max(np.abs(sig))), float(np.max(np.abs(mu))) ** 2, 1e-300)
        if np.max(np.abs(sig - sig.conj().T)) > 1e-12 * scale:
            raise ValueError("covariance must be Hermitian")
        # near-degenerate priors: judge negativity against the overall
        # moment scale, not the (possibly vanishing) covariance trace
        if np.linalg.eigvalsh(sig)[0] < -1e-10 * scale:
            raise ValueError("covariance must be positive semidefinite")
        r = self.second_moment
        if r is None:
            r = sig + np.outer(mu, mu.conj())
        else:
            r = np.ascontiguousarray(r, dtype=np.complex128)
            if np.max(np.abs(r - (sig + np.outer(mu, mu.conj())))) > 1e-12 * scale:
                raise ValueError("second moment inconsistent with mean and covariance")
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "covariance", sig)
        object.__setattr__(self, "second_moment", _hermitize(r))

    @classmethod
    def fixed_field(cls, coeffs) -> "FieldPrior":
        """Point-mass prior: one known desired field, zero covariance."""
        b = np.asarray(coeffs.values if isinstance(coeffs, ExpansionCoeffs) else coeffs)
        return cls(b, np.zeros((b.size, b.size), dtype=np.complex128))

    @property
    def size(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class DirectionRangePrior:
    """Plane-wave desired field with direction uniform on [angle_min, angle_max]."""

    angle_min: float
    angle_max: float
    amplitude: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not (math.isfinite(self.angle_min) and math.isfinite(self.angle_max)):
            raise ValueError("angle range must be finite")
        if not self.angle_min < self.angle_max:
            raise ValueError("angle_min must be strictly below angle_max")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")

    @property
    def width(self) -> float:
        return self.angle_max - self.angle_min

    @property
    def mean_angle(self) -> float:
        return 0.5 * (self.angle_min + self.angle_max)


def _interval_phase_mean(q, lo: float, hi: float) -> np.ndarray:
    """(1/(hi-lo)) * int_lo^hi e^{-j q phi} dphi for integer arrays q.

    Written as e^{-j q mid} sinc(q w / 2) so narrow intervals do not
    cancel catastrophically.
    """
    q = np.asarray(q, dtype=np.float64)
    half = 0.5 * (hi - lo)
    return np.exp(-1j * q * (0.5 * (lo + hi))) * np.sinc(q * half / np.pi)


def prior_from_direction_range(
    p: DirectionRangePrior, cfg: ExpansionConfig, freq: Frequency
) -> FieldPrior:
    """Closed-form moments of plane-wave coefficients over a direction range.

    The phase-average integrals reduce to elementary exponentials; a
    non-origin expansion center additionally mixes in a Jacobi-Anger
    series of the center phase factor e^{j k . center} (DLMF 10.12.2),
    truncated well past its k*|center| transition. The second moment is
    center-independent because the center phase has unit modulus.
    """
    m = cfg.orders
    lo, hi = p.angle_min, p.angle_max
    amp = complex(p.amplitude)
    cx, cy = cfg.center
    rho_c = math.hypot(cx, cy)
    if rho_c < 1e-15:
        mu = amp * _ipow(m) * _interval_phase_mean(m, lo, hi)
    else:
        k_rho = freq.wavenumber * rho_c
        phi_c = math.atan2(cy, cx)
        top = int(math.ceil(k_rho)) + 20
        q = np.arange(-top, top + 1)
        j_pos = specfun.bessel_j_orders(top, np.asarray([k_rho]))[:, 0]
        j_q = np.where(q >= 0, j_pos[np.abs(q)], j_pos[np.abs(q)] * (1.0 - 2.0 * (np.abs(q) % 2)))
        weights = _ipow(q) * j_q * np.exp(-1j * q * phi_c)
        phase_mean = _interval_phase_mean(m[:, None] - q[None, :], lo, hi)
        mu = amp * _ipow(m) * (phase_mean @ weights)
    r = (abs(amp) ** 2) * _ipow(m[:, None] - m[None, :]) * _interval_phase_mean(
        m[:, None] - m[None, :], lo, hi
    )
    sigma = _hermitize(r - np.outer(mu, mu.conj()))
    return FieldPrior(mu, sigma, second_moment=_hermitize(r))


# ---------------------------------------------------------------------------
# selection state and cost


class WorkCounter:
    """Mutable tally of complex multiply-accumulate work, from array shapes."""

    __slots__ = ("units",)

    def __init__(self):
        self.units = 0

    def add(self, n):
        self.units += int(n)


@dataclass(frozen=True)
class SelectionState:
    """Greedy-selection snapshot: indices, cached inverse, Gram blocks.

    gram = C^H W C and tmat = C^H W R W C are shared read-only across all
    states derived from one problem; a_inv tracks (gram_SS + lam I)^{-1}.
    """

    gram: np.ndarray
    tmat: np.ndarray
    j_empty: float
    lam: float
    selected: tuple[int, ...] = ()
    a_inv: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.complex128))
    work: WorkCounter = field(default_factory=WorkCounter)

    @classmethod
    def from_problem(cls, coeff_matrix, weight, prior: FieldPrior, lam: float) -> "SelectionState":
        if not (lam > 0.0 and math.isfinite(lam)):
            raise ValueError("regularization constant must be positive")
        c = np.ascontiguousarray(coeff_matrix, dtype=np.complex128)
        w = weight.entries if isinstance(weight, WeightMatrix) else np.asarray(weight)
        if c.ndim != 2 or w.shape != (c.shape[0], c.shape[0]):
            raise ValueError("coefficient and weight shapes are inconsistent")
        if prior.size != c.shape[0]:
            raise ValueError("prior dimension must match coefficient rows")
        wc = w @ c
        gram = _hermitize(c.conj().T @ wc)
        rwc = prior.second_moment @ wc
        tmat = _hermitize(wc.conj().T @ rwc)
        j_empty = float(np.sum(w * prior.second_moment.T).real)  # tr(W R)
        return cls(gram=gram, tmat=tmat, j_empty=j_empty, lam=lam)

    @property
    def n_candidates(self) -> int:
        return self.gram.shape[0]


def state_cost(state: SelectionState) -> float:
    """J for the state's current selection, via the cached inverse."""
    if not state.selected:
        return state.j_empty
    sel = list(state.selected)
    t_ss = state.tmat[np.ix_(sel, sel)]
    return state.j_empty - float(np.sum(state.a_inv * t_ss.T).real)


def candidate_deltas(state: SelectionState, candidates=None) -> np.ndarray:
    """Exact J decrease for adding each candidate; +inf where unusable.

    Uses the bordered-inverse identity: appending nu changes the trace
    term by (u^H T_SS u - 2 Re(u^H t) + tau) / rho with u = A a. Entries
    for already-selected candidates, or with a vanishing pivot rho, are
    masked with +inf. The T quadratic form is PSD, so each decrease is
    clipped at zero and J is exactly non-increasing along any greedy run.
    """
    n = state.n_candidates
    if candidates is None:
        cand = np.setdiff1d(np.arange(n), np.array(state.selected, dtype=int))
    else:
        cand = np.asarray(candidates, dtype=int)
    out = np.full(n, np.inf)
    if cand.size == 0:
        return out
    l = len(state.selected)
    g_new = state.gram[cand, cand].real + state.lam
    tau = state.tmat[cand, cand].real
    if l == 0:
        rho = g_new.copy()
        bracket = tau.copy()
        state.work.add(5 * cand.size)
    else:
        sel = list(state.selected)
        a = state.gram[np.ix_(sel, cand)]
        u = state.a_inv @ a
        t_sc = state.tmat[np.ix_(sel, cand)]
        t_ss = state.tmat[np.ix_(sel, sel)]
        bracket = (
            np.einsum("ik,ij,jk->k", u.conj(), t_ss, u).real
            - 2.0 * np.einsum("ik,ik->k", u.conj(), t_sc).real
            + tau
        )
        rho = g_new - np.einsum("ik,ik->k", a.conj(), u).real
        state.work.add(cand.size * (2 * l * l + 3 * l + 5))
    ok = rho > BREAKDOWN_RTOL * g_new
    np.clip(bracket, 0.0, None, out=bracket)
    out[cand[ok]] = -bracket[ok] / rho[ok]
    return out


def extend_inverse(state: SelectionState, new_index: int) -> SelectionState:
    """Grow the cached inverse by one candidate in O(l^2)."""
    new_index = int(new_index)
    if not 0 <= new_index < state.n_candidates:
        raise ValueError("candidate index out of range")
    if new_index in state.selected:
        raise ValueError("candidate already selected")
    l = len(state.selected)
    g_new = state.gram[new_index, new_index].real + state.lam
    if l == 0:
        if g_new <= 0.0:
            raise NumericalBreakdown("nonpositive leading pivot")
        a_inv = np.array([[1.0 / g_new]], dtype=np.complex128)
    else:
        sel = list(state.selected)
        a = state.gram[sel, new_index]
        u = state.a_inv @ a
        rho = g_new - float((a.conj() @ u).real)
        if rho <= BREAKDOWN_RTOL * g_new:
            raise NumericalBreakdown(f"pivot {rho:.3e} too small for candidate {new_index}")
        a_inv = np.empty((l + 1, l + 1), dtype=np.complex128)
        a_inv[:l, :l] = state.a_inv + np.outer(u, u.conj()) / rho
        a_inv[:l, l] = -u / rho
        a_inv[l, :l] = -u.conj() / rho
        a_inv[l, l] = 1.0 / rho
    state.work.add(2 * l * l + 4 * l + 8)
    return replace(state, selected=state.selected + (new_index,), a_inv=a_inv)


def rebuild_inverse(state: SelectionState, selected=None) -> SelectionState:
    """Recompute the cached inverse directly; breakdown recovery path."""
    sel = tuple(int(i) for i in (state.selected if selected is None else selected))
    if len(set(sel)) != len(sel):
        raise ValueError("selected indices must be unique")
    g = state.gram[np.ix_(sel, sel)] + state.lam * np.eye(len(sel))
    a_inv = _hermitize(np.linalg.inv(_hermitize(g)))
    state.work.add(len(sel) ** 3)
    return replace(state, selected=sel, a_inv=a_inv)


def placement_cost(selected, prior: FieldPrior, coeff_matrix, weight, lam: float) -> float:
    """Reference J(S) by direct inversion: tr(D R), D = W - W C_S A C_S^H W."""
    c = np.asarray(coeff_matrix, dtype=np.complex128)
    w = weight.entries if isinstance(weight, WeightMatrix) else np.asarray(weight)
    sel = [int(i) for i in selected]
    if len(set(sel)) != len(sel) or any(not 0 <= i < c.shape[1] for i in sel):
        raise ValueError("selected indices must be unique and in range")
    if sel:
        cs = c[:, sel]
        wcs = w @ cs
        a = np.linalg.inv(_hermitize(cs.conj().T @ wcs) + lam * np.eye(len(sel)))
        d = w - wcs @ a @ wcs.conj().T
    else:
        d = w
    j = complex(np.sum(d * prior.second_moment.T))
    scale = max(abs(j), abs(float(np.sum(w * prior.second_moment.T).real)), 1e-300)
    if abs(j.imag) > 1e-9 * scale:
        raise ValueError("placement cost has a non-negligible imaginary part")
    return j.real


# ---------------------------------------------------------------------------
# greedy and exhaustive selection


@dataclass(frozen=True)
class PlacementResult:
    """Selection order, the J trace (J(empty set) first), and work tally."""

    indices: tuple[int, ...]
    cost_trace: np.ndarray
    work_units: int


@dataclass(frozen=True)
class BroadbandBin:
    """One frequency bin of a multi-frequency placement problem."""

    coeff_matrix: np.ndarray
    weight: WeightMatrix
    prior: FieldPrior
    gamma: float = 1.0
    frequency: Frequency | None = None

    def __post_init__(self):
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ValueError("bin weight gamma must be positive")


@dataclass(frozen=True)
class BroadbandSpec:
    bins: tuple[BroadbandBin, ...]

    def __post_init__(self):
        bins = tuple(self.bins)
        if not bins:
            raise ValueError("broadband spec needs at least one bin")
        n = bins[0].coeff_matrix.shape[1]
        if any(b.coeff_matrix.shape[1] != n for b in bins):
            raise ValueError("all bins must share one candidate list")
        object.__setattr__(self, "bins", bins)

    @property
    def n_candidates(self) -> int:
        return self.bins[0].coeff_matrix.shape[1]


def greedy_place_broadband(
    spec: BroadbandSpec,
    lam: float,
    n_select: int | None = None,
    min_decrease: float | None = None,
) -> PlacementResult:
    """Greedy selection on the gamma-weighted multi-bin cost sum.

    Stops after n_select picks, or earlier once the best available cost
    decrease falls below min_decrease relative to the empty-set cost.
    Ties go to the lowest candidate index.
    """
    n = spec.n_candidates
    if n == 0:
        raise ValueError("empty candidate set")
    if n_select is None and min_decrease is None:
        raise ValueError("a stopping rule is required")
    limit = n if n_select is None else int(n_select)
    if not 0 <= limit <= n:
        raise ValueError("n_select must lie in [0, n_candidates]")
    states = [
        SelectionState.from_problem(b.coeff_matrix, b.weight, b.prior, lam) for b in spec.bins
    ]
    gammas = [b.gamma for b in spec.bins]
    trace = [sum(g * s.j_empty for g, s in zip(gammas, states))]
    selected: list[int] = []
    for _ in range(limit):
        deltas = sum(g * candidate_deltas(s) for g, s in zip(gammas, states))
        pick = int(np.argmin(deltas))
        if not np.isfinite(deltas[pick]):
            # all pivots broke down: refresh every cached inverse and retry
            states = [rebuild_inverse(s) for s in states]
            deltas = sum(g * candidate_deltas(s) for g, s in zip(gammas, states))
            pick = int(np.argmin(deltas))
            if not np.isfinite(deltas[pick]):
                raise NumericalBreakdown("no candidate admits a stable update")
        if min_decrease is not None and -deltas[pick] < min_decrease * trace[0]:
            break
        grown = []
        for s in states:
            try:
                grown.append(extend_inverse(s, pick))
            except NumericalBreakdown:
                grown.append(rebuild_inverse(s, selected=s.selected + (pick,)))
        states = grown
        selected.append(pick)
        trace.append(trace[-1] + deltas[pick])
    work = sum(s.work.units for s in states)
    return PlacementResult(tuple(selected), np.asarray(trace), work)


def greedy_place(
    coeff_matrix,
    weight,
    prior: FieldPrior,
    lam: float,
    n_select: int | None = None,
    min_decrease: float | None = None,
) -> PlacementResult:
    """Single-frequency greedy placement; see greedy_place_broadband."""
    spec = BroadbandSpec((BroadbandBin(np.asarray(coeff_matrix, dtype=np.complex128), weight, prior),))
    return greedy_place_broadband(spec, lam, n_select=n_select, min_decrease=min_decrease)


def broadband_cost(spec: BroadbandSpec, selected, lam: float) -> float:
    """Gamma-weighted sum of per-bin placement costs."""
    return sum(
        b.gamma * placement_cost(selected, b.prior, b.coeff_matrix, b.weight, lam)
        for b in spec.bins
    )


def exhaustive_place(coeff_matrix, weight, prior: FieldPrior, lam: float, n_select: int):
    """Globally optimal n_select-subset by full enumeration (oracle scale).

    Returns (indices, cost); ties resolve to the lexicographically first
    subset. Guarded to at most 10^6 subsets.
    """
    c = np.asarray(coeff_matrix, dtype=np.complex128)
    n = c.shape[1]
    if not 1 <= n_select <= n:
        raise ValueError("n_select must lie in [1, n_candidates]")
    if math.comb(n, n_select) > 10 ** 6:
        raise ValueError("subset count exceeds the enumeration guard")
    ref = SelectionState.from_problem(c, weight, prior, lam)
    eye = lam * np.eye(n_select)
    best_idx, best_cost = None, np.inf
    for combo in combinations(range(n), n_select):
        sel = list(combo)
        a = np.linalg.inv(ref.gram[np.ix_(sel, sel)] + eye)
        cost = ref.j_empty - float(np.sum(a * ref.tmat[np.ix_(sel, sel)].T).real)
        if cost < best_cost:
            best_idx, best_cost = combo, cost
    return best_idx, best_cost


def predicted_work(n_candidates: int, n_select: int, n_bins: int = 1) -> int:
    """Closed-form complex-op prediction for a full greedy run, O(N L^3)."""
    total = 0
    for l in range(n_select):
        total += (n_candidates - l + 1) * (2 * l * l + 4 * l + 8)
    return n_bins * total


# ---------------------------------------------------------------------------
# equal-spacing baselines


def regular_placement_b(candidates, n_select: int) -> tuple[int, ...]:
    """Equal index spacing around the full candidate loop, starting at 0."""
    n = len(_as_points(candidates))
    if not 1 <= n_select <= n:
        raise ValueError("n_select must lie in [1, n_candidates]")
    return tuple((i * n) // n_select for i in range(n_select))


def _ray_loop_hit(pts, seg, seglen, s_pos, origin, direction):
    """Arc-length position where a ray first crosses the candidate loop."""
    d = np.asarray(direction, dtype=np.float64)
    rhs = pts - np.asarray(origin, dtype=np.float64)
    det = seg[:, 0] * d[1] - seg[:, 1] * d[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (seg[:, 0] * rhs[:, 1] - seg[:, 1] * rhs[:, 0]) / det
        w = (d[0] * rhs[:, 1] - d[1] * rhs[:, 0]) / det
    ok = (np.abs(det) > 1e-14) & (t > 1e-9) & (w >= -1e-12) & (w < 1.0 - 1e-12)
    if not np.any(ok):
        raise ValueError("ray does not cross the candidate loop")
    i = np.flatnonzero(ok)[np.argmin(t[ok])]
    return s_pos[i] + float(np.clip(w[i], 0.0, 1.0)) * seglen[i]


def regular_placement_a(
    candidates, region: CircularRegion, angles: DirectionRangePrior, n_select: int
) -> tuple[int, ...]:
    """Equal spacing along the boundary arc facing the incoming directions.

    The candidate list must trace a closed loop around the region. The
    admissible arc runs between the points where the loop meets the two
    region-tangent lines parallel to the extreme prior directions, on the
    side waves arrive from (the side not containing the exit point of the
    mean-direction ray). Degenerates to regular_placement_b for a
    full-circle prior.
    """
    pts = _as_points(candidates)
    n = len(pts)
    if angles.width >= 2.0 * math.pi * (1.0 - 1e-12):
        return regular_placement_b(pts, n_select)
    seg = pts[(np.arange(n) + 1) % n] - pts
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    s_pos = np.concatenate([[0.0], np.cumsum(seglen)])[:n]
    total = float(np.sum(seglen))
    center = np.array(region.center, dtype=np.float64)

    hits = []
    for theta, side in ((angles.angle_max, 1.0), (angles.angle_min, -1.0)):
        u = np.array([math.cos(theta), math.sin(theta)])
        normal = side * np.array([math.sin(theta), -math.cos(theta)])
        tangent_point = center + region.radius * normal
        hits.append(_ray_loop_hit(pts, seg, seglen, s_pos, tangent_point, -u))
    mean = angles.mean_angle
    exit_s = _ray_loop_hit(
        pts, seg, seglen, s_pos, center, np.array([math.cos(mean), math.sin(mean)])
    )

    start, end = hits
    if (exit_s - start) % total <= (end - start) % total:
        start, end = end, start
    width = (end - start) % total
    keys = (s_pos - start) % total
    admissible = np.flatnonzero(keys <= width + 1e-12)
    if admissible.size == 0:
        raise ValueError("no candidate lies on the admissible arc")
    ordered = admissible[np.argsort(keys[admissible], kind="stable")]
    if n_select > ordered.size:
        raise ValueError("n_select exceeds the admissible candidate count")
    picks = np.round(np.linspace(0.0, ordered.size - 1.0, n_select)).astype(int)
    return tuple(int(ordered[p]) for p in picks)
