"""Linear time-invariant system primitives.

Transfer functions, partial fractions, fast/slow decomposition, zero-order-hold
discretization, and simulation. These are the building blocks used by the
signal generators, the estimators, and the filtering-subtraction pipeline.

Conventions:
    * Polynomial coefficients are stored constant term first: ``coeffs[k]``
      multiplies ``s**k`` for continuous-time systems and ``q**-k`` (the
      backward shift) for discrete-time systems.
    * A transfer function with ``sampling_time is None`` is continuous-time;
      ``sampling_time > 0`` means discrete-time.
    * Discrete denominators are normalized so the constant coefficient is 1,
      which makes every discrete model causal by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import signal as sps

from .dataset import TimeSeriesDataset
from .errors import AmbiguousSplitError, ArgumentError, UnsupportedStructureError

# Trailing coefficients below this relative size are treated as numerical noise.
_TRIM_RTOL = 1e-12
# Poles closer than this (relative) are treated as repeated.
_POLE_COINCIDENCE_RTOL = 1e-6


# =====================================================================
# Polynomials
# =====================================================================


class Polynomial:
    """A univariate polynomial with constant-term-first coefficients.

    The indeterminate is ``s`` in continuous time and ``q**-1`` in discrete
    time; the polynomial itself is agnostic. Trailing (highest-order)
    coefficients that are zero, or negligibly small relative to the largest
    coefficient, are stripped on construction, so ``degree`` is meaningful.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise ArgumentError("polynomial coefficients must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise ArgumentError("polynomial coefficients must be finite")
        c = _trim(c)
        c.flags.writeable = False
        self.coeffs = c

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial([0.0])
        return Polynomial(npoly.polyder(self.coeffs))

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(npoly.polymul(self.coeffs, other.coeffs))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(npoly.polyadd(self.coeffs, other.coeffs))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(npoly.polysub(self.coeffs, other.coeffs))

    def __neg__(self) -> "Polynomial":
        return Polynomial(-self.coeffs)

    def __repr__(self) -> str:
        return f"Polynomial({self.coeffs.tolist()})"


def _trim(c: np.ndarray) -> np.ndarray:
    """Strip trailing coefficients that are zero or roundoff-sized."""
    tol = _TRIM_RTOL * np.max(np.abs(c))
    keep = c.size
    while keep > 1 and abs(c[keep - 1]) <= tol:
        keep -= 1
    return np.array(c[:keep], dtype=float)


# =====================================================================
# Rational transfer functions
# =====================================================================


@dataclass(frozen=True, eq=False)
class RationalTransferFunction:
    """A proper rational transfer function, continuous or discrete.

    Args:
        num: numerator polynomial (constant term first).
        den: denominator polynomial (constant term first).
        sampling_time: ``None`` for continuous time, the sampling interval in
            seconds for discrete time.

    Continuous systems must be proper (numerator degree <= denominator
    degree). Discrete systems are normalized so the denominator's constant
    coefficient is 1; a zero constant coefficient would make the model
    non-causal and is rejected.
    """

    num: Polynomial
    den: Polynomial
    sampling_time: float | None = None

    def __post_init__(self):
        num = self.num if isinstance(self.num, Polynomial) else Polynomial(self.num)
        den = self.den if isinstance(self.den, Polynomial) else Polynomial(self.den)
        if den.is_zero():
            raise ArgumentError("denominator polynomial is zero")
        ts = self.sampling_time
        if ts is not None:
            ts = float(ts)
            if not ts > 0:
                raise ArgumentError(f"sampling_time must be positive, got {ts}")
            if den.coeffs[0] == 0.0:
                raise ArgumentError("discrete denominator needs a nonzero constant coefficient")
            if den.coeffs[0] != 1.0:
                scale = den.coeffs[0]
                num = Polynomial(num.coeffs / scale)
                den = Polynomial(den.coeffs / scale)
        else:
            if num.degree > den.degree:
                raise ArgumentError(
                    f"improper continuous-time system: numerator degree {num.degree} "
                    f"> denominator degree {den.degree}"
                )
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "sampling_time", ts)

    # -- basic queries -------------------------------------------------

    @property
    def is_discrete(self) -> bool:
        return self.sampling_time is not None

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, other: "RationalTransferFunction") -> "RationalTransferFunction":
        return parallel_add(self, other)

    def __mul__(self, other: "RationalTransferFunction") -> "RationalTransferFunction":
        return series_multiply(self, other)

    def __sub__(self, other: "RationalTransferFunction") -> "RationalTransferFunction":
        return parallel_add(self, -other)

    def __neg__(self) -> "RationalTransferFunction":
        return RationalTransferFunction(-self.num, self.den, self.sampling_time)

    def __repr__(self) -> str:
        ts = "continuous" if self.sampling_time is None else f"Ts={self.sampling_time}"
        return (
            f"RationalTransferFunction(num={self.num.coeffs.tolist()}, "
            f"den={self.den.coeffs.tolist()}, {ts})"
        )


def rtf(num, den, sampling_time: float | None = None) -> RationalTransferFunction:
    """Shorthand constructor from plain coefficient sequences."""
    return RationalTransferFunction(Polynomial(num), Polynomial(den), sampling_time)


def zero_tf(sampling_time: float | None = None) -> RationalTransferFunction:
    """The identically-zero system."""
    return rtf([0.0], [1.0], sampling_time)


def _require_same_domain(a: RationalTransferFunction, b: RationalTransferFunction):
    if (a.sampling_time is None) != (b.sampling_time is None):
        raise ArgumentError("cannot combine continuous and discrete systems")
    if a.sampling_time is not None:
        if abs(a.sampling_time - b.sampling_time) > 1e-12 * max(a.sampling_time, b.sampling_time):
            raise ArgumentError(
                f"sampling times differ: {a.sampling_time} vs {b.sampling_time}"
            )


def parallel_add(
    a: RationalTransferFunction, b: RationalTransferFunction
) -> RationalTransferFunction:
    """Sum of two systems driven by the same input (parallel connection)."""
    _require_same_domain(a, b)
    num = a.num * b.den + b.num * a.den
    den = a.den * b.den
    return RationalTransferFunction(num, den, a.sampling_time)


def series_multiply(
    a: RationalTransferFunction, b: RationalTransferFunction
) -> RationalTransferFunction:
    """Cascade of two systems (series connection)."""
    _require_same_domain(a, b)
    return RationalTransferFunction(a.num * b.num, a.den * b.den, a.sampling_time)


# =====================================================================
# Poles, gain, frequency response, stability
# =====================================================================


def poles(tf: RationalTransferFunction) -> np.ndarray:
    """All denominator roots, with multiplicity.

    For continuous systems these are roots in the s-plane; for discrete
    systems, roots in the z-plane. Computed as companion-matrix eigenvalues.

    Raises:
        ArgumentError: if the denominator has degree 0 (no poles to return).
    """
    a = tf.den.coeffs
    if a.size < 2:
        raise ArgumentError("denominator degree is 0; the system has no poles")
    if tf.is_discrete:
        # a0 + a1 q^-1 + ... + an q^-n has z-plane poles equal to the roots
        # of a0 z^n + a1 z^(n-1) + ... + an, i.e. the coefficients read
        # highest-power-first are exactly the stored order.
        return np.roots(a)
    return np.roots(a[::-1])


def _poles_or_empty(tf: RationalTransferFunction) -> np.ndarray:
    if tf.den.coeffs.size < 2:
        return np.empty(0, dtype=complex)
    return poles(tf)


def is_stable(tf: RationalTransferFunction) -> bool:
    """Strict stability: all poles in the open left half-plane / open unit disk."""
    p = _poles_or_empty(tf)
    if p.size == 0:
        return True
    if tf.is_discrete:
        return bool(np.all(np.abs(p) < 1.0))
    return bool(np.all(p.real < 0.0))


def dc_gain(tf: RationalTransferFunction) -> float:
    """Steady-state gain: value at s=0 (continuous) or z=1 (discrete)."""
    if tf.is_discrete:
        num, den = np.sum(tf.num.coeffs), np.sum(tf.den.coeffs)
    else:
        num, den = tf.num.coeffs[0], tf.den.coeffs[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(num / den)


def frequency_response(tf: RationalTransferFunction, w) -> np.ndarray:
    """Response at angular frequencies ``w`` (rad/s).

    Continuous systems are evaluated at ``s = jw``; discrete systems at
    ``z = exp(jw*Ts)``.

    Args:
        w: scalar or array of angular frequencies in rad/s.

    Returns:
        Complex response with the same shape as ``w``.
    """
    w = np.asarray(w, dtype=float)
    if tf.is_discrete:
        x = np.exp(-1j * w * tf.sampling_time)  # x = q^-1 on the unit circle
    else:
        x = 1j * w
    return npoly.polyval(x, tf.num.coeffs) / npoly.polyval(x, tf.den.coeffs)


# =====================================================================
# Partial fractions and fast/slow decomposition
# =====================================================================


@dataclass(frozen=True, eq=False)
class PoleResidueForm:
    """Parallel first-order decomposition: ``direct + sum_j residues[j]/(s - poles[j])``.

    Complex poles appear in conjugate pairs with conjugate residues so the
    recombined system is real.
    """

    poles: np.ndarray
    residues: np.ndarray
    direct: float = 0.0

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.poles, dtype=complex))
        r = np.atleast_1d(np.asarray(self.residues, dtype=complex))
        if p.shape != r.shape:
            raise ArgumentError("poles and residues must have equal length")
        order = np.lexsort((p.imag, p.real))
        p, r = p[order], r[order]
        _check_conjugate_symmetry(p, r)
        p.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "poles", p)
        object.__setattr__(self, "residues", r)
        object.__setattr__(self, "direct", float(self.direct))

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        out = np.full(s.shape, self.direct, dtype=complex)
        for p, r in zip(self.poles, self.residues):
            out = out + r / (s - p)
        return out

    def to_transfer_function(self) -> RationalTransferFunction:
        """Recombine the terms over a common (monic) denominator."""
        return _recombine(self.poles, self.residues, self.direct)


def _check_conjugate_symmetry(p: np.ndarray, r: np.ndarray, tol: float = 1e-8):
    scale_p = max(1.0, float(np.max(np.abs(p))) if p.size else 1.0)
    scale_r = max(1.0, float(np.max(np.abs(r))) if r.size else 1.0)
    unmatched = list(range(p.size))
    for i in list(unmatched):
        if i not in unmatched:
            continue
        if abs(p[i].imag) <= tol * scale_p:
            unmatched.remove(i)
            continue
        partner = None
        for j in unmatched:
            if j == i:
                continue
            if abs(p[j] - np.conj(p[i])) <= tol * scale_p and abs(
                r[j] - np.conj(r[i])
            ) <= tol * scale_r:
                partner = j
                break
        if partner is None:
            raise ArgumentError(
                f"complex pole {p[i]} lacks a conjugate partner with conjugate residue"
            )
        unmatched.remove(i)
        unmatched.remove(partner)


def _recombine(p: np.ndarray, r: np.ndarray, direct: float) -> RationalTransferFunction:
    den = np.array([1.0 + 0j])
    for pk in p:
        den = npoly.polymul(den, np.array([-pk, 1.0]))
    num = np.zeros(1, dtype=complex)
    for j in range(p.size):
        term = np.array([r[j]])
        for i in range(p.size):
            if i != j:
                term = npoly.polymul(term, np.array([-p[i], 1.0]))
        num = npoly.polyadd(num, term)
    num = npoly.polyadd(num, direct * den)
    # Conjugate symmetry makes both real up to roundoff.
    return rtf(num.real, den.real, None)


def partial_fraction(tf: RationalTransferFunction) -> PoleResidueForm:
    """Expand a continuous-time system into parallel first-order terms.

    Uses the residue formula ``K_j = N(p_j) / D'(p_j)``, valid for distinct
    poles only.

    Raises:
        UnsupportedStructureError: for discrete-time input or repeated poles.
        ArgumentError: if the denominator has degree 0.
    """
    if tf.is_discrete:
        raise UnsupportedStructureError(
            "partial fractions are defined here for continuous-time systems; "
            "convert with undiscretize_zoh first"
        )
    p = poles(tf)
    _require_distinct(p)
    if tf.num.degree == tf.den.degree:
        direct = tf.num.coeffs[-1] / tf.den.coeffs[-1]
    else:
        direct = 0.0
    dden = Polynomial(npoly.polyder(tf.den.coeffs))
    residues = tf.num(p) / dden(p)
    return PoleResidueForm(p, residues, float(direct))


def _require_distinct(p: np.ndarray):
    for i in range(p.size):
        for j in range(i + 1, p.size):
            scale = max(1.0, abs(p[i]), abs(p[j]))
            if abs(p[i] - p[j]) < _POLE_COINCIDENCE_RTOL * scale:
                raise UnsupportedStructureError(
                    f"repeated pole near {p[i]}: partial fractions support distinct poles only"
                )


def split_fast_slow(
    tf: RationalTransferFunction, threshold: float | None = None
) -> tuple[RationalTransferFunction, RationalTransferFunction]:
    """Decompose a continuous-time system into fast + slow parallel parts.

    Poles with ``|Re p| >= threshold`` go to the fast part, the rest to the
    slow part; any direct feedthrough goes to the fast part. The parts sum
    back to the original system.

    Args:
        tf: continuous-time system with distinct poles.
        threshold: split frequency in rad/s. Defaults to the geometric mean
            of the nonzero ``|Re p|`` values.

    Returns:
        ``(fast, slow)`` transfer functions.

    Raises:
        AmbiguousSplitError: if any ``|Re p|`` lies within ±5% of the
            threshold, or all poles land on one side.
    """
    prf = partial_fraction(tf)
    re = np.abs(prf.poles.real)
    if threshold is None:
        nonzero = re[re > 0]
        if nonzero.size == 0:
            raise AmbiguousSplitError("all poles are on the imaginary axis; no scale separation")
        threshold = float(np.exp(np.mean(np.log(nonzero))))
    if threshold <= 0:
        raise ArgumentError(f"threshold must be positive, got {threshold}")
    near = (re >= 0.95 * threshold) & (re <= 1.05 * threshold)
    if np.any(near):
        raise AmbiguousSplitError(
            f"pole with |Re p| = {re[near][0]:.6g} lies within 5% of threshold {threshold:.6g}"
        )
    fast_mask = re >= threshold
    if not np.any(fast_mask) and prf.direct == 0.0:
        fast = zero_tf()
    else:
        fast = _recombine(prf.poles[fast_mask], prf.residues[fast_mask], prf.direct)
    if np.all(fast_mask):
        slow = zero_tf()
    else:
        slow = _recombine(prf.poles[~fast_mask], prf.residues[~fast_mask], 0.0)
    return fast, slow


# =====================================================================
# Discretization
# =====================================================================


def discretize_zoh(tf: RationalTransferFunction, sampling_time: float) -> RationalTransferFunction:
    """Zero-order-hold discretization of a continuous-time system.

    Exact for inputs that are piecewise constant over each sampling interval
    (steps, GBN signals): the discrete simulation then reproduces the
    continuous response at the sample instants. Preserves the steady-state
    gain and maps each pole p to exp(p*Ts).

    Args:
        tf: continuous-time system.
        sampling_time: sampling interval in seconds, > 0.
    """
    if tf.is_discrete:
        raise ArgumentError("system is already discrete")
    if not sampling_time > 0:
        raise ArgumentError(f"sampling_time must be positive, got {sampling_time}")
    if tf.den.degree == 0:
        return rtf(tf.num.coeffs / tf.den.coeffs[0], [1.0], sampling_time)
    num_c = tf.num.coeffs[::-1]
    den_c = tf.den.coeffs[::-1]
    (num_d, den_d, _) = sps.cont2discrete((num_c, den_c), sampling_time, method="zoh")
    num_d = np.atleast_2d(num_d)[0]
    # scipy returns z-plane polynomials highest power first with equal
    # lengths; dividing through by z^n reads them directly as powers of q^-1.
    return rtf(num_d, den_d, sampling_time)


def undiscretize_zoh(tf: RationalTransferFunction) -> RationalTransferFunction:
    """Invert a zero-order-hold discretization (exact per-pole map).

    Expands the system into z-plane partial fractions, maps each pole
    ``z0 -> log(z0)/Ts`` and each residue by the inverse of the first-order
    hold formula, and reassembles a continuous-time system. Round-tripping
    through ``discretize_zoh`` at the same sampling time reproduces the input.

    Raises:
        UnsupportedStructureError: for poles where the map is invalid
            (magnitude ~0, on the negative real axis, or repeated).
    """
    if not tf.is_discrete:
        raise ArgumentError("system is already continuous")
    ts = tf.sampling_time
    b, a = tf.num.coeffs, tf.den.coeffs
    if a.size < 2:
        return rtf(b / a[0], [1.0], None)
    m = max(b.size, a.size) - 1
    num_z = np.zeros(m + 1)
    num_z[: b.size] = b  # highest power first: b[k] multiplies z^(m-k)
    den_z = np.zeros(m + 1)
    den_z[: a.size] = a
    p_z = np.roots(den_z)
    _require_distinct(p_z)
    if np.any(np.abs(p_z) <= 1e-8):
        raise UnsupportedStructureError("z-plane pole at the origin has no continuous image")
    neg_real = (np.abs(p_z.imag) <= 1e-12 * np.abs(p_z)) & (p_z.real < 0)
    if np.any(neg_real):
        raise UnsupportedStructureError(
            "negative real z-plane pole has no real continuous image"
        )
    dden_z = npoly.polyder(den_z[::-1])[::-1]  # derivative, highest power first
    residues_z = npoly.polyval(p_z, num_z[::-1]) / npoly.polyval(p_z, dden_z[::-1])
    direct = num_z[0] / den_z[0]
    p_c = np.log(p_z) / ts
    # Inverse of K/(s-p) -> K*(e^{pTs}-1)/p * q^-1/(1 - e^{pTs} q^-1):
    # K = R * p/(z0 - 1), taken as R * phi/Ts with phi = log(z0)/(z0-1) -> 1
    # as z0 -> 1 so poles at z=1 (integrators) stay finite.
    phi = np.ones_like(p_z)
    away = np.abs(p_z - 1.0) > 1e-12
    phi[away] = np.log(p_z[away]) / (p_z[away] - 1.0)
    residues_c = residues_z * phi / ts
    return _recombine(p_c, residues_c, float(direct))


def resample_zoh(
    tf: RationalTransferFunction, sampling_time: float
) -> RationalTransferFunction:
    """Re-express a discrete system at a different sampling time.

    Goes through the exact inverse-ZOH map and back; subject to the same
    structural restrictions as :func:`undiscretize_zoh`.
    """
    return discretize_zoh(undiscretize_zoh(tf), sampling_time)


# =====================================================================
# Simulation
# =====================================================================


def simulate(tf: RationalTransferFunction, u) -> np.ndarray:
    """Response of a discrete-time system to an input sequence.

    Direct-form difference equation with zero initial conditions.

    Args:
        tf: discrete-time system.
        u: input samples, 1-D.

    Returns:
        Output samples, same length as ``u``. An unstable system is simulated
        anyway but a ``RuntimeWarning`` is emitted.
    """
    if not tf.is_discrete:
        raise ArgumentError("simulate needs a discrete-time system; use discretize_zoh first")
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ArgumentError("input must be 1-D")
    if not is_stable(tf):
        warnings.warn("simulating an unstable system; output may grow without bound",
                      RuntimeWarning, stacklevel=2)
    return sps.lfilter(tf.num.coeffs, tf.den.coeffs, u)


def step_response(
    tf: RationalTransferFunction,
    horizon: float,
    sampling_time: float | None = None,
) -> TimeSeriesDataset:
    """Unit-step response over ``[0, horizon]`` seconds.

    Continuous systems are ZOH-discretized at ``sampling_time`` first, which
    is exact for a step input. For discrete systems ``sampling_time`` must be
    omitted or equal to the system's own.

    Returns:
        Dataset with the step as input channel and the response as output.
    """
    if not horizon > 0:
        raise ArgumentError(f"horizon must be positive, got {horizon}")
    if tf.is_discrete:
        if sampling_time is not None and abs(sampling_time - tf.sampling_time) > 1e-12:
            raise ArgumentError("sampling_time differs from the system's own")
        d = tf
    else:
        if sampling_time is None:
            raise ArgumentError("continuous system needs a sampling_time for the step response")
        d = discretize_zoh(tf, sampling_time)
    ts = d.sampling_time
    n = int(np.floor(horizon / ts + 1e-9)) + 1
    u = np.ones(n)
    y = simulate(d, u)
    return TimeSeriesDataset(sampling_time=ts, inputs=[u], outputs=[y])


# =====================================================================
# Transfer matrices
# =====================================================================


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """A rectangular array of transfer functions sharing one time domain.

    ``entries[i][j]`` maps input channel j to output channel i.
    """

    entries: tuple = field(default=())

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.entries)
        if not rows or not rows[0]:
            raise ArgumentError("transfer matrix must have at least one entry")
        width = len(rows[0])
        ref = rows[0][0]
        for row in rows:
            if len(row) != width:
                raise ArgumentError("transfer matrix rows must have equal length")
            for entry in row:
                _require_same_domain(ref, entry)
        object.__setattr__(self, "entries", rows)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    @property
    def sampling_time(self) -> float | None:
        return self.entries[0][0].sampling_time

    def __getitem__(self, key: tuple[int, int]) -> RationalTransferFunction:
        i, j = key
        return self.entries[i][j]

    def discretize(self, sampling_time: float) -> "TransferMatrix":
        return TransferMatrix(
            tuple(
                tuple(discretize_zoh(g, sampling_time) for g in row) for row in self.entries
            )
        )

    def simulate(self, inputs) -> np.ndarray:
        """Outputs for a bank of input channels: ``y_i = sum_j G_ij u_j``.

        Args:
            inputs: array-like of shape (n_inputs, N).

        Returns:
            Array of shape (n_outputs, N).
        """
        u = np.atleast_2d(np.asarray(inputs, dtype=float))
        n_out, n_in = self.shape
        if u.shape[0] != n_in:
            raise ArgumentError(f"expected {n_in} input channels, got {u.shape[0]}")
        y = np.zeros((n_out, u.shape[1]))
        for i in range(n_out):
            for j in range(n_in):
                if not self.entries[i][j].is_zero():
                    y[i] += simulate(self.entries[i][j], u[j])
        return y
