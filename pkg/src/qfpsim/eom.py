"""Single-tone electro-optic phase modulator as a bin-mixing operator.

A modulator driven with instantaneous phase ``depth * sin(Omega t + phase)``
scatters bin n to bin m with amplitude J_{m-n}(depth) * exp(i (m-n) phase),
so an upshift by one bin carries exp(i*phase).  Bessel functions are
evaluated locally (ascending power series for small arguments, Miller's
downward recurrence otherwise) and the two routes are cross-validated in
the test suite.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .lattice import FrequencyLattice

BESSEL_MAX_ARGUMENT = 50.0
TRUNCATION_POWER_TOL = 1e-14
DEFAULT_UNITARITY_TOL = 1e-10


def bessel_j_series(order: int, argument: float, tol: float = 1e-18) -> float:
    """J_order(argument) by the ascending power series.

    Accurate for |argument| < ~10 in double precision; intended for
    |argument| < 2 where it needs only a handful of terms.
    """
    n = abs(int(order))
    x = float(argument)
    sign = 1.0
    if order < 0 and n % 2 == 1:
        sign = -sign
    if x < 0:
        x = -x
        if n % 2 == 1:
            sign = -sign
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    half = x / 2.0
    # leading term half^n / n!
    term = 1.0
    for k in range(1, n + 1):
        term *= half / k
    total = term
    m = 0
    while True:
        m += 1
        term *= -(half * half) / (m * (m + n))
        total += term
        if abs(term) < tol * max(abs(total), 1e-300) or m > 200:
            break
    return sign * total


def bessel_j_recurrence(max_order: int, argument: float) -> np.ndarray:
    """J_0..J_max_order by Miller's downward recurrence with normalization."""
    x = abs(float(argument))
    nmax = int(max_order)
    if x == 0.0:
        out = np.zeros(nmax + 1)
        out[0] = 1.0
        return out
    # start well above both the requested order and the turning point
    start = nmax + int(x) + 22 + int(2.0 * np.sqrt(nmax + 1))
    if start % 2 == 1:
        start += 1
    fkp1 = 0.0
    fk = 1e-30
    vals = np.zeros(nmax + 1)
    even_sum = 0.0
    for k in range(start, 0, -1):
        fkm1 = (2.0 * k / x) * fk - fkp1
        fkp1 = fk
        fk = fkm1
        if k - 1 <= nmax:
            vals[k - 1] = fk
        if (k - 1) % 2 == 0 and k - 1 > 0:
            even_sum += fk
        if abs(fk) > 1e250:  # rescale to avoid overflow
            fk *= 1e-250
            fkp1 *= 1e-250
            vals *= 1e-250
            even_sum *= 1e-250
    norm = fk + 2.0 * even_sum  # J_0 + 2*sum_{k>=1} J_{2k} = 1
    vals /= norm
    if argument < 0:
        vals[1::2] *= -1.0
    return vals


def bessel_j(order: int, argument: float) -> float:
    """Bessel function of the first kind, J_order(argument).

    Raises:
        InvalidArgumentError: if |argument| exceeds the validated range.
    """
    if abs(argument) > BESSEL_MAX_ARGUMENT:
        raise InvalidArgumentError(
            f"|argument| = {abs(argument)} exceeds validated range {BESSEL_MAX_ARGUMENT}"
        )
    n = abs(int(order))
    sign = 1.0
    if order < 0 and n % 2 == 1:
        sign = -1.0
    if abs(argument) < 2.0:
        return sign * bessel_j_series(n, argument)
    return sign * float(bessel_j_recurrence(n, argument)[n])


def bessel_row(max_order: int, argument: float) -> np.ndarray:
    """J_0..J_max_order, choosing the evaluation route per |argument|."""
    if abs(argument) > BESSEL_MAX_ARGUMENT:
        raise InvalidArgumentError("argument outside validated range")
    if abs(argument) < 2.0:
        return np.array([bessel_j_series(k, argument) for k in range(max_order + 1)])
    return bessel_j_recurrence(max_order, argument)


def truncation_order(depth: float, tol: float = TRUNCATION_POWER_TOL) -> int:
    """Smallest K with sum_{|j|>K} J_j(depth)^2 < tol.

    Used as the interior guard margin: bins farther than K from the window
    edge see the operator as rigorously unitary.
    """
    if depth == 0.0:
        return 0
    row = bessel_row(int(np.ceil(depth)) + 60, depth)
    power = row**2
    total = power[0] + 2.0 * power[1:].sum()
    tail = total - power[0]
    k = 0
    while tail >= tol:
        k += 1
        if k >= len(row):
            raise InvalidArgumentError("truncation order not found; depth too large")
        tail -= 2.0 * power[k]
    return k


@dataclass(frozen=True)
class RfDrive:
    """Single-tone RF drive of a phase modulator.

    Attributes:
        depth: modulation depth in radians (>= 0).
        phase: RF phase in radians.
        frequency: tone frequency in Hz; must equal the lattice spacing.
        enabled: disabled drive is equivalent to depth 0.
    """

    depth: float
    phase: float = 0.0
    frequency: float | None = None
    enabled: bool = True

    def __post_init__(self):
        if self.depth < 0:
            raise InvalidArgumentError("modulation depth must be non-negative")

    @property
    def effective_depth(self) -> float:
        return self.depth if self.enabled else 0.0


@dataclass(frozen=True)
class ModeOperator:
    """Complex matrix over a lattice window, indexed (output bin, input bin)."""

    lattice: FrequencyLattice
    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        n = self.lattice.size
        if self.entries.shape != (n, n):
            raise InvalidArgumentError("operator dimensions must match the lattice window")

    def compose(self, other: "ModeOperator") -> "ModeOperator":
        """Matrix product self @ other (other acts first)."""
        if self.lattice != other.lattice:
            raise InvalidArgumentError("operators live on different lattices")
        return ModeOperator(self.lattice, self.entries @ other.entries,
                            label=f"{self.label}*{other.label}")

    def __matmul__(self, other: "ModeOperator") -> "ModeOperator":
        return self.compose(other)


def identity_operator(lattice: FrequencyLattice, label: str = "I") -> ModeOperator:
    return ModeOperator(lattice, np.eye(lattice.size, dtype=complex), label=label)


def eom_operator(drive: RfDrive, lattice: FrequencyLattice) -> ModeOperator:
    """Mode-mixing operator of a sinusoidally driven phase modulator.

    M[m, n] = J_{m-n}(depth) exp(i (m-n) phase).  The matrix keeps the full
    Toeplitz band across the window; only the finite window truncates, which
    keeps the interior (margin ``truncation_order(depth)``) unitary to well
    below the default tolerance.
    """
    if drive.frequency is not None and not np.isclose(drive.frequency, lattice.spacing,
                                                      rtol=1e-9, atol=0.0):
        raise InvalidArgumentError(
            f"drive frequency {drive.frequency} does not match lattice spacing {lattice.spacing}"
        )
    depth = drive.effective_depth
    bins = lattice.bins
    diff = bins[:, None] - bins[None, :]
    row = bessel_row(int(np.abs(diff).max()), depth)
    mag = row[np.abs(diff)]
    sign = np.where((diff < 0) & (np.abs(diff) % 2 == 1), -1.0, 1.0)
    entries = mag * sign * np.exp(1j * diff * drive.phase)
    return ModeOperator(lattice, entries, label=f"EOM(d={depth:.4g})")


def unitarity_deficit(op: ModeOperator, interior_margin: int) -> float:
    """max |(M^dag M - I)[m, n]| over bins at least ``interior_margin`` from the edge."""
    n = op.lattice.size
    if interior_margin >= (n - 1) // 2:
        raise InvalidArgumentError("interior margin must be smaller than the half window")
    g = op.entries.conj().T @ op.entries - np.eye(n)
    lo, hi = interior_margin, n - interior_margin
    return float(np.abs(g[lo:hi, lo:hi]).max())
