"""Elliptic-beam channel model for low-altitude drone links.

The received beam is described by the 5-tuple ``(x0, y0, W1^2, W2^2, theta)``.
Its statistics follow from up-/down-link moment formulas driven by the
SLC-D low-altitude C_n^2 branch; random tuples are pushed through the
elliptic-aperture transmittance integral to estimate the probability
distribution of transmittance (PDT).

Random numbers are drawn in fixed blocks of :data:`BLOCK_SIZE` samples.
Block ``b`` of a run with seed ``s`` always uses the stream
``SeedSequence(s, spawn_key=(b,))``, so results do not depend on how
blocks are scheduled across workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, erfc

from .attenuation import ExtinctionProfile, atm_transmissivity
from .errors import (
    InputError,
    InvalidGeometry,
    NonPositiveDefiniteCovariance,
    QuadratureFailure,
    ValidityRangeWarning,
)
from .geometry import (
    DEFAULT_ALPHA_P,
    DEFAULT_ALTITUDE_RANGE,
    DEFAULT_BETA,
    DEFAULT_N0_DAY,
    DEFAULT_N0_NIGHT,
    ChannelGeometry,
)
from .turbulence import TurbulenceProfile, cn2 as profile_cn2, fresnel, rytov_sq

BLOCK_SIZE = 8192
MIN_PDT_SAMPLES = 1000
PDT_DECIMALS = 5

DIRECTIONS = ("uplink", "downlink")
POINTING_VARIANCE_MODES = ("printed", "squared")
W_SQ_DISTRIBUTIONS = ("lognormal", "truncnormal")

# Quadrature settings for the semi-analytic transmittance evaluator.
_WINDOW_SIGMAS = 10.0
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(48)
_MAX_PANELS = 64
_ATOL = 1e-13


def low_altitude_cn2(daytime, altitude):
    """Low-altitude C_n^2 used by the hybrid model (day: 3.13e-13/h, night: 4.008e-13/h^1.054)."""
    if altitude <= 0:
        raise InvalidGeometry("altitude must be positive")
    if daytime:
        return 3.13e-13 / altitude
    return 4.008e-13 / altitude**1.054


@dataclass(frozen=True)
class LinkCondition:
    """Weather and link-direction settings.

    Attributes
    ----------
    direction : {"uplink", "downlink"}
    daytime : bool
    n0 : float, optional
        Scattering particle density [m^-3]; defaults to 0.01 (day) or 0.61 (night).
    alpha_p : float
        Angular pointing error [rad], used by downlinks.
    profile : TurbulenceProfile, optional
        Replaces the tabulated day/night C_n^2 branch, e.g. to extend the
        model above 240 m with a full piecewise profile.
    beta : float
        Extinction parameter; see :func:`default_chi_ext`.
    pointing_variance : {"printed", "squared"}
        Downlink centroid variance as ``alpha_p * z`` ("printed") or
        ``(alpha_p * z)**2`` ("squared", dimensionally m^2).
    w_sq_distribution : {"lognormal", "truncnormal"}
        Family used for the squared semi-axes.
    """

    direction: str = "downlink"
    daytime: bool = True
    n0: float | None = None
    alpha_p: float = DEFAULT_ALPHA_P
    profile: TurbulenceProfile | None = None
    beta: float = DEFAULT_BETA
    pointing_variance: str = "printed"
    w_sq_distribution: str = "lognormal"

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise InputError(f"direction must be one of {DIRECTIONS}")
        if self.n0 is None:
            object.__setattr__(self, "n0", DEFAULT_N0_DAY if self.daytime else DEFAULT_N0_NIGHT)
        if self.n0 < 0 or self.alpha_p < 0 or self.beta < 0:
            raise InputError("n0, alpha_p and beta must be non-negative")
        if self.pointing_variance not in POINTING_VARIANCE_MODES:
            raise InputError(f"pointing_variance must be one of {POINTING_VARIANCE_MODES}")
        if self.w_sq_distribution not in W_SQ_DISTRIBUTIONS:
            raise InputError(f"w_sq_distribution must be one of {W_SQ_DISTRIBUTIONS}")

    def cn2(self, altitude):
        if self.profile is None:
            return low_altitude_cn2(self.daytime, altitude)
        return profile_cn2(self.profile, altitude)


def default_chi_ext(geom, beta=DEFAULT_BETA):
    """Extinction factor for ``geom`` when none is given explicitly.

    Beer-Lambert along the slant path with a constant extinction
    ``alpha = beta / h`` (``h`` in km), which integrates to
    ``exp(-beta / cos(phi))``.
    """
    if geom.chi_ext is not None:
        return geom.chi_ext
    alpha = beta / (geom.altitude / 1000.0)
    return atm_transmissivity(ExtinctionProfile.constant(alpha), geom)


@dataclass(frozen=True)
class BeamMoments:
    centroid_var: float
    mean_w_sq: float
    cov_w_sq: np.ndarray = field(repr=False)
    rytov_sq: float = 0.0
    fresnel: float = 0.0
    distance: float = 0.0

    def as_tuple(self):
        return (self.centroid_var, self.mean_w_sq, self.cov_w_sq)


def beam_moments(cond, geom):
    """First and second moments of the beam parameters at the receiver.

    Returns centroid variance <x0^2> = <y0^2>, mean squared semi-axis
    <W_i^2> and the 2x2 covariance <dW_i^2 dW_j^2>. Centroid means are zero.
    """
    if not isinstance(geom, ChannelGeometry):
        raise InvalidGeometry("geom must be a ChannelGeometry")
    lo, hi = DEFAULT_ALTITUDE_RANGE
    if not lo <= geom.altitude <= hi:
        warnings.warn(
            f"altitude {geom.altitude:g} m outside tabulated range [{lo:g}, {hi:g}] m",
            ValidityRangeWarning,
            stacklevel=2,
        )
    z = geom.distance
    w_d = geom.w_d
    s2 = rytov_sq(cond.cn2(geom.altitude), geom.wavelength, z)
    om = fresnel(geom.wavelength, w_d, z)
    if cond.direction == "uplink":
        scatter = 1.0 + (math.pi / 8.0) * z * cond.n0 * w_d**2
        centroid_var = 0.419 * s2 * w_d**2 * om ** (-7.0 / 6.0)
        mean_w_sq = (w_d**2 / om**2) * (scatter + 2.6 * s2 * om ** (5.0 / 6.0))
        k = (w_d**4 / om ** (19.0 / 6.0)) * scatter * s2
    else:
        scatter = 1.0 + (math.pi / 24.0) * z * cond.n0 * w_d**2
        centroid_var = cond.alpha_p * z
        if cond.pointing_variance == "squared":
            centroid_var = centroid_var**2
        mean_w_sq = (w_d**2 / om**2) * (scatter + 1.6 * s2 * om ** (5.0 / 6.0))
        k = 0.375 * (w_d**4 / om ** (19.0 / 6.0)) * scatter * s2
    cov = k * (2.0 * np.eye(2) - 0.8)
    return BeamMoments(centroid_var, mean_w_sq, cov, s2, om, z)


@dataclass(frozen=True)
class BeamParams:
    x0: float
    y0: float
    w1_sq: float
    w2_sq: float
    theta: float

    def __post_init__(self):
        if not (self.w1_sq > 0 and self.w2_sq > 0):
            raise InputError("squared semi-axes must be positive")


def _block_rng(seed, block, attempt=0):
    key = (block,) if attempt == 0 else (block, attempt)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def standard_variates(seed, start, stop):
    """Standard draws for samples ``start..stop``: columns (z_x, z_y, z_w1, z_w2, u).

    Sample ``i`` always receives the same row for a given seed.
    """
    first, last = start // BLOCK_SIZE, (stop - 1) // BLOCK_SIZE
    parts = []
    for b in range(first, last + 1):
        rng = _block_rng(seed, b)
        normals = rng.standard_normal((BLOCK_SIZE, 4))
        u = rng.random(BLOCK_SIZE)
        block = np.column_stack([normals, u])
        lo = max(start - b * BLOCK_SIZE, 0)
        hi = min(stop - b * BLOCK_SIZE, BLOCK_SIZE)
        parts.append(block[lo:hi])
    return np.concatenate(parts, axis=0)


def _check_cov(cov):
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
        raise NonPositiveDefiniteCovariance("covariance must be a symmetric 2x2 matrix")
    eig = np.linalg.eigvalsh(cov)
    scale = max(abs(eig).max(), 1e-300)
    if eig.min() < -1e-12 * scale:
        raise NonPositiveDefiniteCovariance(f"covariance has negative eigenvalue {eig.min():g}")
    return cov


def _psd_sqrt(m):
    eig, vec = np.linalg.eigh(m)
    return vec * np.sqrt(np.clip(eig, 0.0, None))


def _w_sq_from_variates(moments, zw, distribution, seed, block_ids):
    mean = moments.mean_w_sq
    cov = _check_cov(moments.cov_w_sq)
    n = zw.shape[0]
    if not np.any(cov):
        return np.full(n, mean), np.full(n, mean)
    if distribution == "lognormal":
        s = np.log1p(cov / mean**2)
        if s[0, 0] * s[1, 1] - s[0, 1] ** 2 < -1e-15 * s[0, 0] ** 2 or s[0, 0] < 0:
            raise NonPositiveDefiniteCovariance("log-normal match produces an indefinite log-covariance")
        root = _psd_sqrt(s)
        mu = math.log(mean) - 0.5 * np.diag(s)
        w = np.exp(mu + zw @ root.T)
        return w[:, 0], w[:, 1]
    root = _psd_sqrt(cov)
    w = mean + zw @ root.T
    bad = np.any(w <= 0, axis=1)
    # redraw rejected rows from a per-block auxiliary stream
    for b in np.unique(block_ids[bad]):
        rows = np.flatnonzero(bad & (block_ids == b))
        rng = _block_rng(seed, int(b), attempt=1)
        for r in rows:
            for _ in range(10000):
                cand = mean + root @ rng.standard_normal(2)
                if np.all(cand > 0):
                    w[r] = cand
                    break
            else:
                raise NonPositiveDefiniteCovariance("truncated normal rejection sampling failed")
    return w[:, 0], w[:, 1]


def sample_beam_arrays(moments, n, seed, start=0, distribution="lognormal"):
    """Vectorised beam-parameter draws for samples ``start..start+n``.

    Returns arrays ``(x0, y0, w1_sq, w2_sq, theta)``.
    """
    if moments.centroid_var < 0 or moments.mean_w_sq <= 0:
        raise NonPositiveDefiniteCovariance("centroid variance must be >= 0 and mean W^2 > 0")
    v = standard_variates(seed, start, start + n)
    sd = math.sqrt(moments.centroid_var)
    x0 = sd * v[:, 0]
    y0 = sd * v[:, 1]
    block_ids = (np.arange(start, start + n) // BLOCK_SIZE).astype(np.int64)
    w1, w2 = _w_sq_from_variates(moments, v[:, 2:4], distribution, seed, block_ids)
    theta = 0.5 * math.pi * v[:, 4]
    return x0, y0, w1, w2, theta


def sample_beam_params(moments, rng_seed, index=0, distribution="lognormal"):
    """Draw the beam-parameter tuple of sample ``index`` for seed ``rng_seed``."""
    x0, y0, w1, w2, th = sample_beam_arrays(moments, 1, rng_seed, start=index, distribution=distribution)
    return BeamParams(float(x0[0]), float(y0[0]), float(w1[0]), float(w2[0]), float(th[0]))


def _erf_diff(hi, lo):
    """erf(hi) - erf(lo) for hi >= lo without cancellation in the tails."""
    out = erf(hi) - erf(lo)
    pos = lo > 0
    neg = hi < 0
    out = np.where(pos, erfc(lo) - erfc(hi), out)
    return np.where(neg, erfc(-hi) - erfc(-lo), out)


def _ellipse_coefficients(x0, y0, w1_sq, w2_sq, theta):
    rho0 = np.hypot(x0, y0)
    phi0 = np.arctan2(y0, x0)
    d = theta - phi0
    c2, s2 = np.cos(d) ** 2, np.sin(d) ** 2
    a = c2 / w1_sq + s2 / w2_sq
    b = s2 / w1_sq + c2 / w2_sq
    c = (1.0 / w1_sq - 1.0 / w2_sq) * np.sin(2.0 * d)
    return rho0, a, b, c


def _panel_integral(t_lo, t_hi, panels, rho0, a, b, c, a_r):
    """Composite Gauss-Legendre over t in [t_lo, t_hi] with x = a_r sin t.

    For each abscissa the inner y-integral of the Gaussian over the chord
    |y| <= a_r cos t is done in closed form with error functions.
    """
    width = (t_hi - t_lo) / panels
    j = np.arange(panels)
    left = t_lo[:, None] + width[:, None] * j[None, :]
    t = left[:, :, None] + 0.5 * width[:, None, None] * (_NODES + 1.0)[None, None, :]
    x = a_r * np.sin(t)
    half_chord = a_r * np.cos(t)
    dx = x - rho0[:, None, None]
    bb = b[:, None, None]
    sqrt2b = np.sqrt(2.0 * bb)
    shift = c[:, None, None] * dx / (2.0 * bb)
    inner = 0.5 * np.sqrt(math.pi / (2.0 * bb)) * _erf_diff(sqrt2b * (half_chord + shift), sqrt2b * (shift - half_chord))
    reduced = (a - c**2 / (4.0 * b))[:, None, None]
    f = np.exp(-2.0 * reduced * dx**2) * inner * half_chord
    return np.sum(f @ _WEIGHTS, axis=1) * 0.5 * width


def transmittance_array(x0, y0, w1_sq, w2_sq, theta, a_r, chi_ext=1.0, rtol=1e-6):
    """Elliptic-beam transmittance through a centred circular aperture, vectorised.

    The disk integral is rewritten as an outer integral along the centroid
    direction (Gauss-Legendre, restricted to +-10 sigma around the beam)
    and an inner chord integral in closed form. Panels are doubled per
    sample until two successive estimates agree to ``rtol``.
    """
    x0, y0, w1_sq, w2_sq, theta = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (x0, y0, w1_sq, w2_sq, theta))
    )
    shape = x0.shape
    x0, y0, w1_sq, w2_sq, theta = (v.ravel() for v in (x0, y0, w1_sq, w2_sq, theta))
    if a_r <= 0:
        raise InputError("aperture radius must be positive")
    if np.any(~(w1_sq > 0)) or np.any(~(w2_sq > 0)):
        raise InputError("squared semi-axes must be positive")
    rho0, a, b, c = _ellipse_coefficients(x0, y0, w1_sq, w2_sq, theta)
    # marginal std along the centroid direction: sqrt(B W1^2 W2^2 / 4)
    sx = 0.5 * np.sqrt(b * w1_sq * w2_sq)
    lo = np.clip(rho0 - _WINDOW_SIGMAS * sx, -a_r, a_r)
    hi = np.clip(rho0 + _WINDOW_SIGMAS * sx, -a_r, a_r)
    t_lo, t_hi = np.arcsin(lo / a_r), np.arcsin(hi / a_r)
    norm = 2.0 / (math.pi * np.sqrt(w1_sq * w2_sq))

    result = np.zeros_like(rho0)
    todo = np.flatnonzero(hi > lo)
    panels = 1
    prev = _panel_integral(t_lo[todo], t_hi[todo], panels, rho0[todo], a[todo], b[todo], c[todo], a_r) * norm[todo]
    while todo.size:
        panels *= 2
        cur = _panel_integral(t_lo[todo], t_hi[todo], panels, rho0[todo], a[todo], b[todo], c[todo], a_r) * norm[todo]
        err = np.abs(cur - prev)
        done = err <= np.maximum(rtol * np.abs(cur), _ATOL)
        result[todo[done]] = cur[done]
        todo, prev = todo[~done], cur[~done]
        if todo.size and panels >= _MAX_PANELS:
            worst = float(np.max(err[~done] / np.maximum(np.abs(cur[~done]), 1e-300)))
            raise QuadratureFailure(f"{todo.size} transmittance integrals did not converge", rtol, worst)
    return (chi_ext * np.clip(result, 0.0, 1.0)).reshape(shape)


def _polar_transmittance(params, a_r, chi_ext, rtol, n_rad, n_ang, max_level):
    rho0, a, b, c = (float(v[0]) for v in _ellipse_coefficients(
        np.array([params.x0]), np.array([params.y0]), np.array([params.w1_sq]),
        np.array([params.w2_sq]), np.array([params.theta])))
    xr, wr = np.polynomial.legendre.leggauss(n_rad)
    xa, wa = np.polynomial.legendre.leggauss(n_ang)
    norm = 2.0 * chi_ext / (math.pi * math.sqrt(params.w1_sq * params.w2_sq))

    def tensor(panels):
        r_edges = np.linspace(0.0, a_r, panels + 1)
        p_edges = np.linspace(0.0, 2.0 * math.pi, panels + 1)
        rh = 0.5 * np.diff(r_edges)
        ph = 0.5 * np.diff(p_edges)
        r = ((r_edges[:-1] + rh)[:, None] + rh[:, None] * xr).ravel()
        w_r = (rh[:, None] * wr).ravel()
        p = ((p_edges[:-1] + ph)[:, None] + ph[:, None] * xa).ravel()
        w_p = (ph[:, None] * wa).ravel()
        u = r[:, None] * np.cos(p)[None, :] - rho0
        v = r[:, None] * np.sin(p)[None, :]
        f = np.exp(-2.0 * (a * u**2 + b * v**2 + c * u * v))
        return norm * float(w_r @ (r[:, None] * f) @ w_p)

    prev = tensor(1)
    for level in range(1, max_level + 1):
        cur = tensor(2**level)
        err = abs(cur - prev)
        if err <= max(rtol * abs(cur), _ATOL):
            return min(max(cur, 0.0), chi_ext)
        prev = cur
    raise QuadratureFailure("polar tensor-product quadrature did not converge", rtol, err / max(abs(cur), 1e-300))


def elliptic_transmittance(params, a_r, chi_ext=1.0, rtol=1e-6, method="chord"):
    """Transmittance of one elliptic beam through an aperture of radius ``a_r``.

    ``method="chord"`` uses the semi-analytic evaluator of
    :func:`transmittance_array`; ``method="polar"`` integrates the
    Gaussian directly on a tensor-product Gauss-Legendre grid
    (64 radial x 128 angular nodes per panel, panels doubled until
    converged). The two are independent and agree to ``rtol``.
    """
    if not 0.0 <= chi_ext <= 1.0:
        raise InputError("chi_ext must lie in [0, 1]")
    if method == "chord":
        return float(transmittance_array(params.x0, params.y0, params.w1_sq, params.w2_sq, params.theta,
                                         a_r, chi_ext, rtol))
    if method == "polar":
        if a_r <= 0:
            raise InputError("aperture radius must be positive")
        return _polar_transmittance(params, a_r, chi_ext, rtol, 64, 128, max_level=6)
    raise InputError(f"unknown quadrature method {method!r}")


def _sample_block(args):
    moments, geom_a_r, chi, seed, start, stop, distribution = args
    x0, y0, w1, w2, th = sample_beam_arrays(moments, stop - start, seed, start=start, distribution=distribution)
    return transmittance_array(x0, y0, w1, w2, th, geom_a_r, chi)


def sample_transmittance(cond, geom, n_samples, seed, workers=1):
    """Raw Monte Carlo transmittance samples for one link configuration.

    Output is bit-identical for any ``workers`` value.
    """
    if n_samples < 1:
        raise InputError("n_samples must be positive")
    moments = beam_moments(cond, geom)
    chi = default_chi_ext(geom, cond.beta)
    starts = range(0, n_samples, BLOCK_SIZE)
    jobs = [(moments, geom.a_r, chi, seed, s, min(s + BLOCK_SIZE, n_samples), cond.w_sq_distribution)
            for s in starts]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sample_block, jobs))
    else:
        parts = [_sample_block(j) for j in jobs]
    return np.concatenate(parts)


@dataclass(frozen=True)
class PdtHistogram:
    bin_edges: np.ndarray
    probabilities: np.ndarray
    n_samples: int
    seed: int
    mean: float
    stderr: float

    @property
    def bin_centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def mode(self):
        return float(self.bin_centers[int(np.argmax(self.probabilities))])


def pdt(cond, geom, n_samples=1_000_000, bins=100, seed=0, workers=1):
    """Probability distribution of transmittance from ``n_samples`` Monte Carlo draws.

    Samples are rounded to five decimals before being binned on ``[0, 1]``.
    """
    if n_samples < MIN_PDT_SAMPLES:
        raise InputError(f"PDT needs at least {MIN_PDT_SAMPLES} samples")
    if bins < 1:
        raise InputError("bins must be positive")
    eta = sample_transmittance(cond, geom, n_samples, seed, workers=workers)
    counts, edges = np.histogram(np.round(eta, PDT_DECIMALS), bins=bins, range=(0.0, 1.0))
    return PdtHistogram(
        bin_edges=edges,
        probabilities=counts / n_samples,
        n_samples=n_samples,
        seed=seed,
        mean=float(eta.mean()),
        stderr=float(eta.std(ddof=1) / math.sqrt(n_samples)),
    )


@dataclass(frozen=True)
class SurfaceGrid:
    altitudes: np.ndarray
    zeniths: np.ndarray
    mean: np.ndarray  # shape (len(altitudes), len(zeniths))
    stderr: np.ndarray
    n_samples: int
    seed: int

    def rows(self):
        for i, h in enumerate(self.altitudes):
            for j, phi in enumerate(self.zeniths):
                yield float(h), float(phi), float(self.mean[i, j]), float(self.stderr[i, j])


def transmittance_surface(cond, altitudes, zeniths, n_samples=1000, seed=0, base_geometry=None, workers=1):
    """Mean transmittance over an altitude x zenith grid.

    Every cell reuses the same seed, so neighbouring cells are driven by
    identical standard variates (paired comparison).
    """
    altitudes = np.asarray(altitudes, dtype=float)
    zeniths = np.asarray(zeniths, dtype=float)
    if altitudes.size == 0 or zeniths.size == 0:
        raise InputError("altitude and zenith grids must be non-empty")
    if n_samples < 2:
        raise InputError("need at least two samples per cell for a standard error")
    base = base_geometry or ChannelGeometry(altitude=float(altitudes[0]))
    mean = np.empty((altitudes.size, zeniths.size))
    stderr = np.empty_like(mean)
    for i, h in enumerate(altitudes):
        for j, phi in enumerate(zeniths):
            geom = ChannelGeometry(float(h), float(phi), base.wavelength, base.w_d, base.a_r, base.chi_ext)
            eta = sample_transmittance(cond, geom, n_samples, seed, workers=workers)
            mean[i, j] = eta.mean()
            stderr[i, j] = eta.std(ddof=1) / math.sqrt(n_samples)
    return SurfaceGrid(altitudes, zeniths, mean, stderr, n_samples, seed)
