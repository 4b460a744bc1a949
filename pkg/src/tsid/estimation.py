"""Prediction-error estimation of discrete-time transfer-function models.

Two model structures over SISO data ``y = (B/A) u + v``:

* output error (OE): ``v`` is left unmodeled; the loss is the mean squared
  simulation error ``y - (B/A) u``.
* Box-Jenkins (BJ): ``v = (C/D) e`` with monic C, D; the loss is the mean
  squared one-step prediction error ``(D/C) (y - (B/A) u)``, which equals the
  OE residual filtered by the inverse noise model.

Both are minimized by a damped Gauss-Newton (Levenberg-Marquardt) iteration
whose Jacobian columns are computed analytically by filtering the data
through sensitivity filters. Initialization fits a high-order equation-error
model and reduces it to the requested order by an input-spectrum-weighted
iterative rational fit of its frequency response.

Model quality metrics: the relative error RE = var(y0 - yhat)/var(y0) on
noise-free data, and the order-selection criterion
FOE = (N + d)/(N - d) * mean squared simulation error, whose minimum over a
range of orders picks the model order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as sps

from .dataset import TimeSeriesDataset
from .errors import ArgumentError, IdentifiabilityError
from .lti import RationalTransferFunction, rtf, simulate

# =====================================================================
# Options and results
# =====================================================================


@dataclass(frozen=True)
class EstimationOptions:
    """Optimizer settings shared by OE and BJ estimation.

    Args:
        max_iterations: iteration cap for the Gauss-Newton loop.
        loss_tolerance: stop when the relative loss decrease of an accepted
            step falls below this.
        stability_enforcement: project unstable process poles back inside the
            unit circle during iteration. Noise-model poles and zeros are
            always projected, independent of this flag.
        init_order: order of the equation-error model used for
            initialization; default picks ``max(5*order, 20)`` capped by the
            data length.
        initial_model: user-supplied starting point for the process model;
            skips the equation-error initialization. Must be discrete with
            numerator and denominator degrees at most the requested order.
    """

    max_iterations: int = 200
    loss_tolerance: float = 1e-9
    stability_enforcement: bool = True
    init_order: int | None = None
    initial_model: RationalTransferFunction | None = None


@dataclass(frozen=True, eq=False)
class ModelEstimate:
    """Result of an OE or BJ fit.

    Attributes:
        process_model: estimated ``B/A`` as a discrete transfer function.
        noise_model: estimated ``C/D`` (None for OE).
        loss_value: final mean squared residual over the evaluated samples.
        iterations_used: accepted Gauss-Newton iterations performed.
        converged: True when the loss-decrease tolerance was reached before
            the iteration cap.
        loss_history: loss after each accepted iteration (non-increasing).
        stability_projected: True if any pole/zero reflection was applied.
        n_parameters: number of estimated parameters (enters the FOE).
        sample_offset: first sample index included in the loss.
    """

    process_model: RationalTransferFunction
    noise_model: RationalTransferFunction | None
    loss_value: float
    iterations_used: int
    converged: bool
    loss_history: tuple = field(repr=False, default=())
    stability_projected: bool = False
    n_parameters: int = 0
    sample_offset: int = 0


@dataclass(frozen=True, eq=False)
class FitReport:
    """Flat summary of a fit, serializable to key-value text plus a residual CSV."""

    method: str
    order: int
    noise_order: int
    n_parameters: int
    loss_value: float
    foe_value: float
    iterations_used: int
    converged: bool
    relative_error: float | None
    residuals: np.ndarray = field(repr=False, default=None)

    def to_key_values(self) -> dict:
        pairs = {
            "method": self.method,
            "order": str(self.order),
            "noise_order": str(self.noise_order),
            "n_parameters": str(self.n_parameters),
            "loss": repr(self.loss_value),
            "foe": repr(self.foe_value),
            "iterations": str(self.iterations_used),
            "converged": "true" if self.converged else "false",
        }
        if self.relative_error is not None:
            pairs["relative_error"] = repr(self.relative_error)
        return pairs


# =====================================================================
# Small numeric helpers
# =====================================================================


def _shift(x: np.ndarray, k: int) -> np.ndarray:
    """x delayed by k samples, zero-padded at the front."""
    if k == 0:
        return x
    out = np.zeros_like(x)
    out[k:] = x[:-k]
    return out


def _reflect_roots(poly: np.ndarray, limit: float = 1.0 - 1e-7) -> tuple[np.ndarray, bool]:
    """Reflect roots of a monic-constant q^-1 polynomial into the unit disk.

    ``poly`` is [1, p1, ..., pn]; its z-plane roots are the roots of the same
    list read highest power first. Roots with magnitude above ``limit`` are
    replaced by their reflection 1/conj(z), clipped just inside the circle.
    """
    if poly.size < 2:
        return poly, False
    roots = np.roots(poly)
    mags = np.abs(roots)
    if np.all(mags <= limit):
        return poly, False
    bad = mags > limit
    reflected = roots.copy()
    reflected[bad] = roots[bad] / mags[bad] ** 2
    mags_new = np.abs(reflected[bad])
    too_close = mags_new > limit
    if np.any(too_close):
        idx = np.where(bad)[0][too_close]
        reflected[idx] *= limit / np.abs(reflected[idx])
    out = np.real(np.poly(reflected))
    return out, True


def _lagged(x: np.ndarray, lags, t0: int) -> np.ndarray:
    """Columns x(t - k) for k in lags, rows t = t0 .. N-1. Requires t0 >= max(lags)."""
    n = x.size
    return np.stack([x[t0 - k : n - k] for k in lags], axis=1)


def _check_excitation(u: np.ndarray) -> None:
    if float(np.std(u)) <= 1e-12 * max(1.0, float(np.abs(np.mean(u)))):
        raise IdentifiabilityError("input signal is not exciting (near-zero variance)")


def _siso(data: TimeSeriesDataset) -> tuple[np.ndarray, np.ndarray]:
    if data.n_inputs != 1 or data.n_outputs != 1:
        raise ArgumentError(
            f"estimation expects single-input single-output data, got "
            f"{data.n_inputs} inputs / {data.n_outputs} outputs"
        )
    return np.asarray(data.inputs[0]), np.asarray(data.outputs[0])


# =====================================================================
# Initialization: high-order equation-error fit + rational reduction
# =====================================================================


def _arx(u: np.ndarray, y: np.ndarray, na: int, nb: int, t0: int) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares equation-error fit A y = B u; returns (b, a_full)."""
    t0 = max(t0, na, nb)
    phi = np.hstack([-_lagged(y, range(1, na + 1), t0), _lagged(u, range(0, nb + 1), t0)])
    theta, *_ = np.linalg.lstsq(phi, y[t0:], rcond=None)
    a_full = np.concatenate(([1.0], theta[:na]))
    b = theta[na:]
    return b, a_full


def _ar(x: np.ndarray, order: int, t0: int) -> np.ndarray:
    """Least-squares autoregression D x = e; returns the monic D."""
    t0 = max(t0, order)
    phi = -_lagged(x, range(1, order + 1), t0)
    theta, *_ = np.linalg.lstsq(phi, x[t0:], rcond=None)
    return np.concatenate(([1.0], theta))


def _input_spectrum_weight(u: np.ndarray, ts: float, w: np.ndarray) -> np.ndarray:
    """Smoothed input amplitude spectrum sampled on the grid ``w`` (rad/s)."""
    nper = int(min(u.size, 16384))
    freqs, pxx = sps.welch(u, fs=2.0 * np.pi / ts, nperseg=nper)
    amp = np.sqrt(np.maximum(pxx, 0.0))
    wgt = np.interp(w, freqs, amp)
    floor = 1e-3 * np.max(wgt) if np.max(wgt) > 0 else 1.0
    return np.maximum(wgt, floor)


def _rational_reduce(
    b_high: np.ndarray,
    a_high: np.ndarray,
    order: int,
    ts: float,
    w: np.ndarray,
    weight: np.ndarray,
    iterations: int = 10,
) -> tuple[np.ndarray, np.ndarray]:
    """Fit an order-n rational model to a frequency response by iterative
    weighted linear least squares (the denominator of the previous pass
    reweights the next, converging toward the output-error geometry)."""
    x = np.exp(-1j * w * ts)
    target = np.polyval(b_high[::-1], x) / np.polyval(a_high[::-1], x)
    powers = np.stack([x**k for k in range(order + 1)], axis=1)  # x^0 .. x^n
    b = np.zeros(order + 1)
    a_full = np.concatenate(([1.0], np.zeros(order)))
    for _ in range(iterations):
        denom_prev = np.abs(np.polyval(a_full[::-1], x))
        wgt = weight / np.maximum(denom_prev, 1e-12)
        cols_b = powers * wgt[:, None]
        cols_a = -(target * wgt)[:, None] * powers[:, 1:]
        rhs = target * wgt
        design = np.hstack([cols_b, cols_a])
        design_ri = np.vstack([design.real, design.imag])
        rhs_ri = np.concatenate([rhs.real, rhs.imag])
        theta, *_ = np.linalg.lstsq(design_ri, rhs_ri, rcond=None)
        b = theta[: order + 1]
        a_full = np.concatenate(([1.0], theta[order + 1 :]))
        a_full, _ = _reflect_roots(a_full)
    return b, a_full


def _initial_process_model(
    u: np.ndarray,
    y: np.ndarray,
    order: int,
    ts: float,
    t0: int,
    options: EstimationOptions,
) -> tuple[np.ndarray, np.ndarray]:
    n = u.size
    nh = options.init_order
    if nh is None:
        nh = max(5 * order, 20)
    nh = int(np.clip(nh, order, max(order, (n - t0) // 10)))
    b_high, a_high = _arx(u, y, nh, nh, t0)
    if nh == order:
        a_stab, _ = _reflect_roots(a_high)
        return b_high, a_stab
    w_max = 0.99 * np.pi / ts
    w_min = max(2.0 * np.pi / (n * ts), w_max * 1e-6)
    w = np.geomspace(w_min, w_max, 200)
    weight = _input_spectrum_weight(u, ts, w)
    b, a_full = _rational_reduce(b_high, a_high, order, ts, w, weight)
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(a_full))):
        b, a_full = _arx(u, y, order, order, t0)
        a_full, _ = _reflect_roots(a_full)
    return b, a_full


def _user_initial(
    model: RationalTransferFunction, order: int, ts: float
) -> tuple[np.ndarray, np.ndarray]:
    """Validate a user-supplied starting model and pad it to the fit order."""
    if not model.is_discrete:
        raise ArgumentError("initial_model must be discrete-time")
    if not np.isclose(model.sampling_time, ts, rtol=1e-9):
        raise ArgumentError(
            f"initial_model sampling time {model.sampling_time} does not match "
            f"the data ({ts})"
        )
    b = np.asarray(model.num.coeffs, dtype=float)
    a = np.asarray(model.den.coeffs, dtype=float)
    if b.size > order + 1 or a.size > order + 1:
        raise ArgumentError(
            f"initial_model degree exceeds the requested order {order}"
        )
    if a[0] == 0.0:
        raise ArgumentError("initial_model denominator must have a nonzero leading coefficient")
    b = np.concatenate([b, np.zeros(order + 1 - b.size)]) / a[0]
    a = np.concatenate([a, np.zeros(order + 1 - a.size)]) / a[0]
    return b, a


# =====================================================================
# The Gauss-Newton / Levenberg-Marquardt engine
# =====================================================================


class _PemProblem:
    """Shared machinery for OE (noise_order=0) and BJ (noise_order>=1)."""

    def __init__(self, u, y, order, noise_order, t0, options):
        self.u = u
        self.y = y
        self.n = order
        self.nn = noise_order
        self.t0 = t0
        self.options = options
        self.projected = False

    # parameter vector layout: [b0..bn, a1..an, c1..cnn, d1..dnn]

    def unpack(self, theta):
        n, nn = self.n, self.nn
        b = theta[: n + 1]
        a = np.concatenate(([1.0], theta[n + 1 : 2 * n + 1]))
        c = np.concatenate(([1.0], theta[2 * n + 1 : 2 * n + 1 + nn]))
        d = np.concatenate(([1.0], theta[2 * n + 1 + nn : 2 * n + 1 + 2 * nn]))
        return b, a, c, d

    def pack(self, b, a, c, d):
        return np.concatenate([b, a[1:], c[1:], d[1:]])

    def project(self, theta):
        """Reflect unstable roots; returns the (possibly) adjusted vector."""
        b, a, c, d = self.unpack(theta)
        changed = False
        if self.options.stability_enforcement:
            a, ch = _reflect_roots(a)
            changed |= ch
        if self.nn:
            c, ch1 = _reflect_roots(c)
            d, ch2 = _reflect_roots(d)
            changed |= ch1 or ch2
        if changed:
            self.projected = True
        return self.pack(b, a, c, d)

    def residual(self, theta):
        """Prediction residual over the evaluated samples and its mean square."""
        b, a, c, d = self.unpack(theta)
        v = self.y - sps.lfilter(b, a, self.u)
        eps = sps.lfilter(d, c, v) if self.nn else v
        r = eps[self.t0 :]
        if not np.all(np.isfinite(r)):
            return r, np.inf
        return r, float(np.mean(r**2))

    def jacobian(self, theta):
        """d residual / d theta, one column per parameter."""
        b, a, c, d = self.unpack(theta)
        u, y, t0 = self.u, self.y, self.t0
        n, nn = self.n, self.nn
        gu = sps.lfilter(b, a, u)
        if nn:
            ca = np.convolve(c, a)
            x_b = sps.lfilter(d, ca, u)
            x_a = sps.lfilter(d, ca, gu)
            v = y - gu
            eps = sps.lfilter(d, c, v)
            x_c = sps.lfilter([1.0], c, eps)
            x_d = sps.lfilter([1.0], c, v)
        else:
            x_b = sps.lfilter([1.0], a, u)
            x_a = sps.lfilter([1.0], a, gu)
        cols = []
        cols += [-_shift(x_b, k)[t0:] for k in range(0, n + 1)]
        cols += [_shift(x_a, k)[t0:] for k in range(1, n + 1)]
        if nn:
            cols += [-_shift(x_c, k)[t0:] for k in range(1, nn + 1)]
            cols += [_shift(x_d, k)[t0:] for k in range(1, nn + 1)]
        return np.stack(cols, axis=1)


def _levenberg_marquardt(problem: _PemProblem, theta0: np.ndarray):
    opts = problem.options
    theta = problem.project(theta0)
    r, loss = problem.residual(theta)
    if not np.isfinite(loss):
        raise IdentifiabilityError("initial model evaluates to a non-finite loss")
    history = [loss]
    lam = 1e-3
    converged = False
    iterations = 0
    for _ in range(opts.max_iterations):
        jac = problem.jacobian(theta)
        gram = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(gram).copy()
        diag[diag <= 0] = 1.0
        accepted = False
        for _trial in range(40):
            try:
                delta = np.linalg.solve(gram + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                delta = None
            if delta is not None and np.all(np.isfinite(delta)):
                cand = problem.project(theta + delta)
                r_c, loss_c = problem.residual(cand)
                if loss_c < loss:
                    theta, r = cand, r_c
                    prev = loss
                    loss = loss_c
                    lam = max(lam / 4.0, 1e-12)
                    accepted = True
                    break
            lam *= 8.0
            if lam > 1e14:
                break
        if not accepted:
            converged = True  # no descent direction improves the loss
            break
        iterations += 1
        history.append(loss)
        if (prev - loss) <= opts.loss_tolerance * max(prev, 1e-300):
            converged = True
            break
    return theta, loss, iterations, converged, history


def _estimate(
    data: TimeSeriesDataset,
    order: int,
    noise_order: int,
    options: EstimationOptions | None,
) -> ModelEstimate:
    options = options or EstimationOptions()
    u, y = _siso(data)
    if order < 1:
        raise ArgumentError(f"order must be >= 1, got {order}")
    if noise_order < 0:
        raise ArgumentError(f"noise_order must be >= 0, got {noise_order}")
    _check_excitation(u)
    n_params = (2 * order + 1) + 2 * noise_order
    t0 = max(order, noise_order, data.burn_in)
    if u.size - t0 <= 10 * n_params:
        raise IdentifiabilityError(
            f"need more than {10 * n_params + t0} samples for order {order} "
            f"(have {u.size})"
        )
    ts = data.sampling_time
    if options.initial_model is not None:
        b0, a0 = _user_initial(options.initial_model, order, ts)
    else:
        b0, a0 = _initial_process_model(u, y, order, ts, t0, options)
    if noise_order:
        v = y - sps.lfilter(b0, a0, u)
        d0, _ = _reflect_roots(_ar(v, noise_order, t0))
        c0 = np.concatenate(([1.0], np.zeros(noise_order)))
    else:
        c0 = d0 = np.array([1.0])
    problem = _PemProblem(u, y, order, noise_order, t0, options)
    theta0 = problem.pack(b0, a0, c0, d0)
    theta, loss, iterations, converged, history = _levenberg_marquardt(problem, theta0)
    b, a, c, d = problem.unpack(theta)
    process = rtf(b, a, ts)
    noise = rtf(c, d, ts) if noise_order else None
    return ModelEstimate(
        process_model=process,
        noise_model=noise,
        loss_value=loss,
        iterations_used=iterations,
        converged=converged,
        loss_history=tuple(history),
        stability_projected=problem.projected,
        n_parameters=n_params,
        sample_offset=t0,
    )


def estimate_oe(
    data: TimeSeriesDataset, order: int, options: EstimationOptions | None = None
) -> ModelEstimate:
    """Fit an output-error model ``y = (B/A) u + v`` of the given order.

    B has degree ``order`` (constant term included), A is monic of degree
    ``order``; the loss is the mean squared simulation error starting after
    ``max(order, burn_in)`` samples.

    Args:
        data: SISO dataset.
        order: model order, >= 1.
        options: optimizer settings.

    Returns:
        The estimate; ``converged`` is False when the iteration cap was hit
        while the loss was still decreasing.

    Raises:
        IdentifiabilityError: unexciting input or too little data.
    """
    return _estimate(data, order, 0, options)


def estimate_bj(
    data: TimeSeriesDataset,
    order: int,
    noise_order: int = 1,
    options: EstimationOptions | None = None,
) -> ModelEstimate:
    """Fit a Box-Jenkins model ``y = (B/A) u + (C/D) e``.

    The loss is the mean squared one-step prediction error
    ``(D/C)(y - (B/A) u)``; with ``noise_order=0`` this reduces exactly to
    :func:`estimate_oe`. The returned noise model is stable and inversely
    stable (roots of C and D inside the unit circle) by projection.
    """
    return _estimate(data, order, noise_order, options)


# =====================================================================
# Model-quality metrics
# =====================================================================


def _process_tf(model) -> RationalTransferFunction:
    if isinstance(model, ModelEstimate):
        return model.process_model
    if isinstance(model, RationalTransferFunction):
        return model
    raise ArgumentError(f"expected a ModelEstimate or transfer function, got {type(model)!r}")


def prediction_residuals(model, data: TimeSeriesDataset) -> np.ndarray:
    """Residuals of the model on a dataset.

    For a BJ estimate these are the one-step prediction errors (the OE
    residual filtered by the inverse noise model); otherwise the plain
    simulation errors. The full-length sequence is returned; loss sums skip
    the first ``sample_offset`` samples.
    """
    u, y = _siso(data)
    tf = _process_tf(model)
    eps = y - simulate(tf, u)
    if isinstance(model, ModelEstimate) and model.noise_model is not None:
        h = model.noise_model
        eps = sps.lfilter(h.den.coeffs, h.num.coeffs, eps)
    return eps


def relative_error(model, clean_data: TimeSeriesDataset) -> float:
    """RE = var(y0 - yhat) / var(y0) against noise-free data.

    Args:
        model: estimate or plain discrete transfer function.
        clean_data: SISO dataset carrying ``clean_outputs`` (simulation
            truth); the model is simulated on its input.

    Raises:
        ArgumentError: if clean outputs are absent or have zero variance.
    """
    if clean_data.clean_outputs is None:
        raise ArgumentError("relative_error needs a dataset with clean outputs")
    if clean_data.n_inputs != 1 or len(clean_data.clean_outputs) != 1:
        raise ArgumentError("relative_error expects SISO data")
    u = np.asarray(clean_data.inputs[0])
    y0 = np.asarray(clean_data.clean_outputs[0])
    denom = float(np.var(y0))
    if denom <= 0.0:
        raise ArgumentError("clean output has zero variance")
    yhat = simulate(_process_tf(model), u)
    return float(np.var(y0 - yhat) / denom)


def foe_criterion(model, data: TimeSeriesDataset, n_parameters: int | None = None) -> float:
    """Final output error: ``(N + d)/(N - d)`` times the mean squared
    simulation error, penalizing parameter count d.

    Args:
        model: estimate (d taken from it) or plain transfer function
            (``n_parameters`` required then).
        data: dataset the criterion is evaluated on.
        n_parameters: override for d.

    Raises:
        ArgumentError: if d is unknown or d >= N.
    """
    tf = _process_tf(model)
    if n_parameters is None:
        if isinstance(model, ModelEstimate):
            n_parameters = model.n_parameters
        else:
            raise ArgumentError("n_parameters is required for a bare transfer function")
    u, y = _siso(data)
    t0 = max(tf.den.degree, tf.num.degree, data.burn_in)
    res = (y - simulate(tf, u))[t0:]
    m = res.size
    if n_parameters < 0 or n_parameters >= m:
        raise ArgumentError(f"parameter count {n_parameters} must be in [0, {m})")
    mse = float(np.mean(res**2))
    return (m + n_parameters) / (m - n_parameters) * mse


@dataclass(frozen=True)
class OrderScanRow:
    order: int
    foe: float
    loss: float
    n_parameters: int
    converged: bool


@dataclass(frozen=True)
class OrderScanResult:
    """FOE values across candidate orders; ``selected_order`` minimizes FOE,
    with ties resolved toward the smaller order."""

    rows: tuple
    selected_order: int


def select_order_foe(
    data: TimeSeriesDataset,
    orders,
    method: str = "oe",
    noise_order: int = 1,
    options: EstimationOptions | None = None,
) -> OrderScanResult:
    """Fit one model per candidate order and rank them by FOE.

    Candidates are fitted in ascending order and each fit after the first
    starts from the previous candidate's process model padded with zero
    coefficients. Starting an over-ordered candidate at the embedded
    lower-order optimum keeps the extra pole-zero pair in the local basin,
    where its loss gain stays on the chi-square scale the parsimony factor
    anticipates; a fresh start at every order lets the optimizer hunt for
    noise-carving placements whose gain beats the factor at any N.

    Args:
        data: SISO dataset.
        orders: iterable of candidate orders (>= 1).
        method: ``"oe"`` or ``"bj"``.
        noise_order: noise-model order when method is ``"bj"``.
        options: optimizer settings; ``initial_model`` (if set) seeds the
            smallest candidate only.
    """
    orders = sorted(set(int(o) for o in orders))
    if not orders:
        raise ArgumentError("orders must be non-empty")
    if method not in ("oe", "bj"):
        raise ArgumentError(f"method must be 'oe' or 'bj', got {method!r}")
    rows = []
    best_order = None
    best_foe = np.inf
    previous = None
    for order in orders:
        if previous is None:
            step_options = options
        else:
            step_options = replace(
                options if options is not None else EstimationOptions(),
                initial_model=previous,
            )
        if method == "bj":
            est = estimate_bj(data, order, noise_order, step_options)
        else:
            est = estimate_oe(data, order, step_options)
        previous = est.process_model
        foe = foe_criterion(est, data)
        rows.append(
            OrderScanRow(
                order=order,
                foe=foe,
                loss=est.loss_value,
                n_parameters=est.n_parameters,
                converged=est.converged,
            )
        )
        if foe < best_foe:
            best_foe = foe
            best_order = order
    return OrderScanResult(rows=tuple(rows), selected_order=best_order)


def make_fit_report(
    est: ModelEstimate,
    data: TimeSeriesDataset,
    clean_data: TimeSeriesDataset | None = None,
    method: str | None = None,
) -> FitReport:
    """Assemble the flat report for a fit: loss, FOE, optional RE, residuals."""
    noise_order = est.noise_model.num.degree if est.noise_model is not None else 0
    if method is None:
        method = "bj" if noise_order else "oe"
    re_value = None
    if clean_data is not None and clean_data.clean_outputs is not None:
        re_value = relative_error(est, clean_data)
    return FitReport(
        method=method,
        order=est.process_model.den.degree,
        noise_order=noise_order,
        n_parameters=est.n_parameters,
        loss_value=est.loss_value,
        foe_value=foe_criterion(est, data),
        iterations_used=est.iterations_used,
        converged=est.converged,
        relative_error=re_value,
        residuals=prediction_residuals(est, data),
    )
