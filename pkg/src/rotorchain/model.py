"""Core model: angles on the circle, Hamiltonian, gradient, winding number.

States are plain numpy arrays of shape (N,) holding angles wrapped to
(-pi, pi].  All functions here are pure; nothing mutates its input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

#: A bond is declared to sit exactly at pi (winding ill-defined) within this
#: tolerance.  The set is Lebesgue-null, so this never triggers in honest
#: simulation, but the API stays total.
TOL_PI = 1e-12

#: Consistency budget for the winding sum: the pre-rounding sum of wrapped
#: bond increments must be within RELATIVE_WINDING_TOL * N of an integer.
RELATIVE_WINDING_TOL = 1e-9


class IllDefined:
    """Marker for the measure-zero configurations with a bond exactly at pi."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ILL_DEFINED"


ILL_DEFINED = IllDefined()


def wrap(theta):
    """Wrap angles to the representative in (-pi, pi].

    Accepts scalars or arrays; values already in range pass through
    bit-identically (wrap is exactly idempotent).
    """
    arr = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("wrap: input must be finite")
    out_of_range = (arr <= -np.pi) | (arr > np.pi)
    if np.any(out_of_range):
        r = np.remainder(arr - np.pi, TWO_PI)  # in [0, 2 pi)
        wrapped = np.where(r == 0.0, np.pi, r - np.pi)
        arr = np.where(out_of_range, wrapped, arr)
    if np.isscalar(theta):
        return float(arr)
    return arr


@dataclass(frozen=True)
class ModelParams:
    """Chain size, coupling, noise amplitude and optional external field.

    ``sigma`` is the noise amplitude of the dynamics; the equilibrium
    measure has density proportional to exp(-H / (2 sigma^2)), so the bond
    concentration is kappa = J / (2 sigma^2).
    """

    N: int
    J: float
    sigma: float
    field_B: float = 0.0

    def __post_init__(self):
        if self.N < 3:
            raise ValueError("ModelParams: N must be >= 3")
        if not self.J > 0:
            raise ValueError("ModelParams: J must be > 0")
        if not self.sigma > 0:
            raise ValueError("ModelParams: sigma must be > 0")
        if self.field_B < 0:
            raise ValueError("ModelParams: field_B must be >= 0")

    @property
    def kappa(self) -> float:
        return self.J / (2.0 * self.sigma**2)

    @property
    def coupling_ratio(self) -> float:
        """J / sigma^2, the exponent scale of the exit-time laws."""
        return self.J / self.sigma**2


def validate_state(x: np.ndarray, p: ModelParams) -> np.ndarray:
    """Check the state invariants (length N, all angles in (-pi, pi])."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.N,):
        raise ValueError(f"state must have shape ({p.N},), got {x.shape}")
    if np.any((x <= -np.pi) | (x > np.pi)):
        raise ValueError("state holds angles outside (-pi, pi]")
    return x


def phase_minimizer(p: ModelParams, k: int) -> np.ndarray:
    """The energy minimizer of the winding-k sector, x_i = 2 pi k i / N."""
    if abs(k) >= p.N / 2:
        raise ValueError(f"no phase-{k} minimizer for N={p.N} (need |k| < N/2)")
    return wrap(TWO_PI * k * np.arange(p.N) / p.N)


def bond_increments(x: np.ndarray) -> np.ndarray:
    """Wrapped nearest-neighbour differences x_i - x_{i-1}, periodic."""
    x = np.asarray(x, dtype=float)
    return wrap(x - np.roll(x, 1))


def hamiltonian(x: np.ndarray, p: ModelParams) -> float:
    """-J sum_i cos(x_i - x_{i-1}) - B sum_i cos(x_i), periodic bonds."""
    x = np.asarray(x, dtype=float)
    h = -p.J * np.sum(np.cos(x - np.roll(x, 1)))
    if p.field_B:
        h -= p.field_B * np.sum(np.cos(x))
    return float(h)


def grad_hamiltonian(x: np.ndarray, p: ModelParams) -> np.ndarray:
    """Component i: J [sin(x_i - x_{i-1}) + sin(x_i - x_{i+1})] + B sin(x_i)."""
    x = np.asarray(x, dtype=float)
    g = p.J * (np.sin(x - np.roll(x, 1)) + np.sin(x - np.roll(x, -1)))
    if p.field_B:
        g = g + p.field_B * np.sin(x)
    return g


def winding_number(x: np.ndarray, tol_pi: float = TOL_PI):
    """Total number of turns (1 / 2 pi) sum_i wrap(x_i - x_{i-1}).

    Returns an int, or ILL_DEFINED when some bond sits at pi within
    ``tol_pi``.  Raises RuntimeError if the bond sum strays from an integer
    multiple of 2 pi by more than the consistency budget (that would mean
    the wrap arithmetic is broken, not a property of the input).
    """
    d = bond_increments(x)
    if np.any(np.abs(d) >= np.pi - tol_pi):
        return ILL_DEFINED
    total = float(d.sum()) / TWO_PI
    k = round(total)
    if abs(total - k) > RELATIVE_WINDING_TOL * len(d):
        raise RuntimeError(
            f"winding sum {total} is {abs(total - k):.3e} from integer "
            f"(budget {RELATIVE_WINDING_TOL * len(d):.3e}); wrap arithmetic broken"
        )
    return int(k)


def good_interval_count(x: np.ndarray, r: int, delta: float) -> int:
    """Number of disjoint blocks of r consecutive bonds with all |increments| <= 3 delta.

    The chain of N bonds is cut into floor(N/r) blocks; leftover bonds when
    r does not divide N belong to no block.  The bad event holds when the
    count falls below floor(N / (2 r)).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if not 1 <= r <= n:
        raise ValueError(f"good_interval_count: need 1 <= r <= N, got r={r}, N={n}")
    if not delta > 0:
        raise ValueError("good_interval_count: delta must be > 0")
    d = np.abs(bond_increments(x))
    nblocks = n // r
    good = d[: nblocks * r].reshape(nblocks, r) <= 3.0 * delta
    return int(np.sum(np.all(good, axis=1)))


def is_bad_event(x: np.ndarray, r: int, delta: float) -> bool:
    """Membership in the bad event: fewer than floor(N/(2r)) good blocks."""
    return good_interval_count(x, r, delta) < len(x) // (2 * r)


def midchain_correlation(x: np.ndarray) -> float:
    """cos(X_1 - X_{floor(N/2)}) with 1-based site labels."""
    x = np.asarray(x, dtype=float)
    return float(np.cos(x[0] - x[len(x) // 2 - 1]))


def magnetization(x: np.ndarray) -> float:
    """(1/N) sum_i cos(x_i)."""
    x = np.asarray(x, dtype=float)
    return float(np.mean(np.cos(x)))
