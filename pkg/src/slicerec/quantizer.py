"""Slice quantizer design and efficiency analysis.

A quantizer with m slices cuts the real line into 2^m cells using 2^m - 1
strictly increasing boundaries (unit-variance units).  The label of a cell
is its index in natural binary; slice i is the i-th least significant label
bit.  Slice 1 flips between adjacent cells and is therefore the noisiest
layer; the top slice behaves like a sign bit and is the cleanest.  Decoding
runs slice 1 upward, each layer conditioned on the ones below it, so the
per-layer quantities here are all of the form H(Q_i | Y, Q_1..Q_{i-1}).

Efficiency bookkeeping, in bits per symbol with I = 0.5*log2(1 + snr):

    C_i       = 1 - H(Q_i | Y, Q_{<i})     per-layer code-rate ceiling
    beta_disc = (H(Q) - m + sum C_i) / I   quantization-only efficiency
    gamma     = (sum C_i) / I              code-loss amplification factor
    beta      = beta_disc - (1 - beta_c) * gamma   with codes of quality beta_c

All integrals over the observation y use composite Gauss-Legendre panels on
|y| <= 8 sigma_Y with panel doubling until the requested absolute tolerance
is met; cell probabilities come from Gaussian CDF differences, never from
sampling.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtr

from .gaussmodel import mutual_info_awgn

__all__ = [
    "SliceQuantizer",
    "QuantizerMetrics",
    "QuadratureError",
    "constant_step_quantizer",
    "cell_probabilities",
    "label_entropy",
    "bit_prior_entropies",
    "slice_conditional_entropy",
    "metrics",
    "overall_efficiency",
    "optimize_constant_step",
    "optimize_free_boundaries",
    "snr_shift_efficiency",
    "repetition_efficiency",
    "save_quantizer",
    "load_quantizer",
]

_Y_RANGE_SIGMAS = 8.0
_QUAD_TOL = 1e-7


class QuadratureError(RuntimeError):
    """Raised when the y-integral fails to reach its tolerance."""

    def __init__(self, achieved, tol):
        super().__init__(
            f"quadrature did not converge: achieved {achieved:.3e}, wanted {tol:.3e}"
        )
        self.achieved = achieved
        self.tol = tol


@dataclass(frozen=True)
class SliceQuantizer:
    """m slice functions stored as 2^m - 1 ordered cell boundaries.

    quantize() maps a real sample to the index of its cell, which is
    monotone non-decreasing in the sample.  Cell j covers
    [b_j, b_{j+1}) with b_0 = -inf and b_{2^m} = +inf.
    """

    m: int
    boundaries: np.ndarray

    def __post_init__(self):
        if not 1 <= int(self.m) <= 8:
            raise ValueError("slice count m must be in 1..8")
        b = np.array(self.boundaries, dtype=float, copy=True)
        b.setflags(write=False)
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "boundaries", b)
        if b.shape != (2**self.m - 1,):
            raise ValueError(f"expected {2**self.m - 1} boundaries, got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("boundaries must be finite")
        if not np.all(np.diff(b) > 0):
            raise ValueError("boundaries must be strictly increasing")

    @property
    def cells(self):
        return 2**self.m

    def quantize(self, x):
        """Cell index of x; slice i bit is the i-th LSB of the index."""
        arr = np.asarray(x)
        if np.any(np.isnan(arr)):
            raise ValueError("cannot quantize NaN")
        idx = np.searchsorted(self.boundaries, arr, side="right")
        return int(idx) if arr.ndim == 0 else idx

    def slice_bits(self, labels, i):
        """Extract slice i (1-based, LSB first) from integer labels."""
        if not 1 <= i <= self.m:
            raise ValueError("slice index out of range")
        return (np.asarray(labels) >> (i - 1)) & 1

    def to_text(self):
        buf = io.StringIO()
        buf.write(f"{self.m}\n")
        buf.write(" ".join(f"{b:.17g}" for b in self.boundaries))
        buf.write("\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if len(lines) != 2:
            raise ValueError("quantizer text must have two lines: m, boundaries")
        m = int(lines[0])
        b = np.array([float(tok) for tok in lines[1].split()])
        return cls(m=m, boundaries=b)


def save_quantizer(q, path):
    with open(path, "w") as fh:
        fh.write(q.to_text())


def load_quantizer(path):
    with open(path) as fh:
        return SliceQuantizer.from_text(fh.read())


def constant_step_quantizer(m, step):
    """Quantizer whose 2^m - 1 boundaries are equally spaced around 0."""
    if not step > 0:
        raise ValueError("step must be positive")
    half = 2 ** (m - 1)
    return SliceQuantizer(m=m, boundaries=step * np.arange(-(half - 1), half))


def cell_probabilities(q):
    """Source-cell probabilities under X ~ N(0,1), via Gaussian CDF diffs."""
    cdf = np.concatenate(([0.0], ndtr(q.boundaries), [1.0]))
    return np.diff(cdf)


def _entropy_bits(p, axis=None):
    # 0 * log 0 := 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return t.sum(axis=axis)


def label_entropy(q):
    """H(Q(X)) in bits for the unit-variance Gaussian source."""
    return float(_entropy_bits(cell_probabilities(q)))


def bit_prior_entropies(q):
    """H(Q_i | Q_{<i}) for each slice, from cell probabilities alone.

    Computed as H(low i bits) - H(low i-1 bits); these are the no-side-info
    layer entropies that the chain rule pairs with the conditional ones.
    """
    p = cell_probabilities(q)
    h_low = [0.0]
    for i in range(1, q.m + 1):
        grouped = p.reshape(2 ** (q.m - i), 2**i).sum(axis=0)
        h_low.append(float(_entropy_bits(grouped)))
    return np.diff(np.array(h_low))


# ---------------------------------------------------------------------------
# quadrature over the observation y


@lru_cache(maxsize=8)
def _leggauss(nodes):
    return np.polynomial.legendre.leggauss(nodes)


def _integrate_y(fn, snr, tol=_QUAD_TOL, nodes=24, max_panels=256):
    """Integrate fn(y) (vectorized, includes the p(y) weight) over +-8 sigma_Y."""
    sig_y = np.sqrt(1.0 + 1.0 / snr)
    lo, hi = -_Y_RANGE_SIGMAS * sig_y, _Y_RANGE_SIGMAS * sig_y
    x0, w0 = _leggauss(nodes)
    prev = None
    panels = 8
    while panels <= max_panels:
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * (edges[1] - edges[0])
        mids = 0.5 * (edges[:-1] + edges[1:])
        y = (mids[:, None] + half * x0[None, :]).ravel()
        w = np.tile(w0 * half, panels)
        val = float(np.dot(w, fn(y)))
        if prev is not None and abs(val - prev) < tol:
            return val
        prev = val
        panels *= 2
    raise QuadratureError(achieved=abs(val - prev), tol=tol)


def _posterior_cells(q, snr, y):
    """P(cell j | y) for each node: CDF differences of the posterior of X."""
    mu = y * (snr / (1.0 + snr))
    sigma = np.sqrt(1.0 / (1.0 + snr))
    z = (q.boundaries[None, :] - mu[:, None]) / sigma
    cdf = ndtr(z)
    pc = np.empty((len(y), q.cells))
    pc[:, 0] = cdf[:, 0]
    pc[:, 1:-1] = np.diff(cdf, axis=1)
    pc[:, -1] = 1.0 - cdf[:, -1]
    return np.clip(pc, 0.0, 1.0)


def _pdf_y(snr, y):
    var = 1.0 + 1.0 / snr
    return np.exp(-0.5 * y * y / var) / np.sqrt(2.0 * np.pi * var)


def _cond_entropy_integrand(q, snr, i):
    m = q.m

    def fn(y):
        pc = _posterior_cells(q, snr, y)
        # cell index j = high*2^i + bit*2^(i-1) + low
        grp = pc.reshape(len(y), 2 ** (m - i), 2, 2 ** (i - 1)).sum(axis=1)
        m0, m1 = grp[:, 0, :], grp[:, 1, :]
        tot = m0 + m1
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = np.where(m0 > 0, m0 * (np.log2(np.where(tot > 0, tot, 1.0)) - np.log2(np.where(m0 > 0, m0, 1.0))), 0.0)
            t1 = np.where(m1 > 0, m1 * (np.log2(np.where(tot > 0, tot, 1.0)) - np.log2(np.where(m1 > 0, m1, 1.0))), 0.0)
        return _pdf_y(snr, y) * (t0 + t1).sum(axis=1)

    return fn


def _label_cond_entropy_integrand(q, snr):
    def fn(y):
        pc = _posterior_cells(q, snr, y)
        return _pdf_y(snr, y) * _entropy_bits(pc, axis=1)

    return fn


def slice_conditional_entropy(q, snr, i, tol=_QUAD_TOL):
    """H(Q_i(X) | Y, Q_1..Q_{i-1}(X)) in bits, by numerical integration.

    For each y the 2^m cell posteriors are grouped by their low i-1 label
    bits and the binary entropy of slice i is averaged over those groups.
    """
    if not 1 <= i <= q.m:
        raise ValueError("slice index out of range")
    if not snr > 0:
        raise ValueError("snr must be positive")
    return _integrate_y(_cond_entropy_integrand(q, snr, i), snr, tol=tol)


def label_conditional_entropy(q, snr, tol=_QUAD_TOL):
    """H(Q(X) | Y) in bits, integrated directly over the cell posteriors."""
    if not snr > 0:
        raise ValueError("snr must be positive")
    return _integrate_y(_label_cond_entropy_integrand(q, snr), snr, tol=tol)


@dataclass(frozen=True)
class QuantizerMetrics:
    """Per-layer and aggregate efficiency figures of a quantizer at one SNR."""

    snr: float
    label_entropy: float
    cond_entropies: np.ndarray  # H(Q_i | Y, Q_{<i})
    layer_capacities: np.ndarray  # C_i = 1 - H(Q_i | Y, Q_{<i})
    optimal_rates: np.ndarray  # R_i* = C_i
    quantized_mi: float  # I(Q(X); Y), from the direct H(Q|Y) integral
    beta_disc: float
    gamma: float


def metrics(q, snr, tol=_QUAD_TOL):
    """All efficiency figures of a quantizer at one SNR.

    quantized_mi comes from its own H(Q|Y) integral rather than from the
    per-slice sum, so the chain-rule identity is a genuine cross-check.
    """
    h_label = label_entropy(q)
    cond = np.array([slice_conditional_entropy(q, snr, i, tol=tol) for i in range(1, q.m + 1)])
    caps = 1.0 - cond
    i_xy = mutual_info_awgn(snr)
    quantized_mi = h_label - label_conditional_entropy(q, snr, tol=tol)
    beta_disc = (h_label - q.m + caps.sum()) / i_xy
    gamma = caps.sum() / i_xy
    return QuantizerMetrics(
        snr=float(snr),
        label_entropy=h_label,
        cond_entropies=cond,
        layer_capacities=caps,
        optimal_rates=caps.copy(),
        quantized_mi=quantized_mi,
        beta_disc=float(beta_disc),
        gamma=float(gamma),
    )


def overall_efficiency(q, snr, beta_c):
    """beta = beta_disc - (1 - beta_c) * gamma for codes of quality beta_c."""
    if not 0 < beta_c <= 1:
        raise ValueError("beta_c must be in (0, 1]")
    met = metrics(q, snr)
    return met.beta_disc - (1.0 - beta_c) * met.gamma


# ---------------------------------------------------------------------------
# optimizers

_OBJECTIVES = ("mi", "efficiency")


def _objective_value(q, snr, objective, beta_c, tol=_QUAD_TOL):
    # Both objectives only need H(Q) and the single direct H(Q|Y) integral:
    #   mi:         I(Q;Y)  = H(Q) - H(Q|Y)
    #   efficiency: beta    = (H(Q) - m + beta_c * (m - H(Q|Y))) / I(X;Y)
    h_label = label_entropy(q)
    h_cond = label_conditional_entropy(q, snr, tol=tol)
    if objective == "mi":
        return h_label - h_cond
    i_xy = mutual_info_awgn(snr)
    return (h_label - q.m + beta_c * (q.m - h_cond)) / i_xy


def optimize_constant_step(m, snr, objective="mi", beta_c=0.95, step_bounds=(5e-3, 4.0),
                           coarse=48, xatol=1e-6):
    """Best constant step for a 2^m-cell quantizer at one SNR.

    objective "mi" maximizes I(Q(X); Y); objective "efficiency" maximizes
    the overall efficiency beta_disc - (1 - beta_c)*gamma, which penalizes
    fine steps through gamma and is the operating point used by the
    efficiency tables and key-rate curves.

    A geometric coarse grid brackets the maximum (the landscape is
    unimodal in the step), then golden-section refines it.  Returns
    (step, quantizer).
    """
    if objective not in _OBJECTIVES:
        raise ValueError(f"objective must be one of {_OBJECTIVES}")
    if not snr > 0:
        raise ValueError("snr must be positive")

    def value(step):
        return _objective_value(constant_step_quantizer(m, step), snr, objective, beta_c)

    grid = np.geomspace(step_bounds[0], step_bounds[1], coarse)
    vals = np.array([value(s) for s in grid])
    k = int(np.argmax(vals))
    if k == 0 or k == len(grid) - 1:
        raise RuntimeError(
            f"constant-step optimum at search bound (step={grid[k]:.4g}); widen step_bounds"
        )
    res = minimize_scalar(
        lambda t: -value(t),
        bounds=(grid[k - 1], grid[k + 1]),
        method="bounded",
        options={"xatol": xatol},
    )
    if not res.success:
        raise RuntimeError(f"constant-step search failed: {res.message}")
    step = float(res.x)
    return step, constant_step_quantizer(m, step)


def optimize_free_boundaries(m, snr, objective="mi", beta_c=0.95, max_sweeps=60,
                             ftol=1e-9, span=10.0):
    """Free-boundary quantizer via cyclic 1-D line searches.

    Starts from the constant-step optimum and sweeps each boundary in turn,
    maximizing the same objective inside the open interval delimited by its
    neighbours.  The objective is non-decreasing across sweeps; if the sweep
    cap is hit before the improvement drops below ftol, the best-so-far
    quantizer is returned with a warning.
    """
    import warnings

    _, q0 = optimize_constant_step(m, snr, objective=objective, beta_c=beta_c)
    b = np.array(q0.boundaries, dtype=float, copy=True)

    def value(bnd):
        return _objective_value(SliceQuantizer(m=m, boundaries=bnd), snr, objective, beta_c)

    best = value(b)
    for _ in range(max_sweeps):
        improved = best
        for k in range(len(b)):
            lo = b[k - 1] if k > 0 else -span
            hi = b[k + 1] if k < len(b) - 1 else span
            pad = 1e-9 * max(1.0, hi - lo)

            def line(t, k=k):
                trial = b.copy()
                trial[k] = t
                return -value(trial)

            res = minimize_scalar(line, bounds=(lo + pad, hi - pad), method="bounded",
                                  options={"xatol": 1e-7})
            cand = -res.fun
            if cand > best:
                best = cand
                b[k] = float(res.x)
        if best - improved < ftol:
            return SliceQuantizer(m=m, boundaries=b)
    warnings.warn("free-boundary search hit the sweep cap; returning best so far",
                  RuntimeWarning, stacklevel=2)
    return SliceQuantizer(m=m, boundaries=b)


# ---------------------------------------------------------------------------
# efficiency transport between SNRs


def snr_shift_efficiency(beta_s0, s0, s):
    """Efficiency of reusing a code built for SNR s0 at a higher SNR s.

    A rate-R binary code extracting beta_s0 * log(1+s0) at its design point
    extracts the same absolute amount at s, hence the log ratio.  Using the
    code below its design SNR would exceed its threshold, so s >= s0.
    """
    if not s0 > 0:
        raise ValueError("s0 must be positive")
    if s < s0:
        raise ValueError("code threshold violated: target SNR below design SNR")
    return beta_s0 * np.log1p(s0) / np.log1p(s)


def repetition_efficiency(beta_s0, s0, k):
    """Efficiency after combining the s0-design code with a length-k repetition code.

    Repetition over k uses turns one symbol at SNR s0/k into one at s0, so
    the scheme operates at s = s0/k with
    beta_s = beta_s0 * s * log(1+s0) / (s0 * log(1+s)), which approaches
    beta_s0 as s0 -> 0.
    """
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise ValueError("k must be an integer >= 1")
    if not s0 > 0:
        raise ValueError("s0 must be positive")
    s = s0 / k
    return beta_s0 * (s * np.log1p(s0)) / (s0 * np.log1p(s))
