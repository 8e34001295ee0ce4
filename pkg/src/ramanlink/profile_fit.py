"""Two-exponential loss-profile fitting.

The normalized power evolution of a channel, viewed from the span start
(direction 1) or span end (direction 2), is fitted with

    rho(z) = exp(-2 * (alpha0 * z + (alpha1 / sigma) * (1 - exp(-sigma * z))))

i.e. a field loss alpha0 + alpha1 * exp(-sigma * z).  The fit is done on log
power, which is linear in (alpha0, alpha1) for fixed sigma; sigma itself is
found by a log-spaced grid search plus golden-section refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import FitError
from .link_model import Options, ValidatedLink
from .raman_solver import PowerEvolution, SpanSolution

# basis vectors are treated as collinear below this (1 - r^2) threshold
_COLLINEARITY_EPS = 1e-12


@dataclass(frozen=True)
class FittedLossProfile:
    channel: int        # 1-based channel index
    direction: int      # 1 = forward (z=0 at span start), 2 = backward
    alpha0: float       # 1/m, >= alpha0_min
    alpha1: float       # 1/m, any sign
    sigma: float        # 1/m, > 0
    mse: float          # mean squared log-power residual
    window: float       # m

    def model(self, z: np.ndarray) -> np.ndarray:
        """Fitted normalized power profile; exactly 1 at z=0."""
        z = np.asarray(z, dtype=float)
        return np.exp(-2.0 * (self.alpha0 * z
                              + self.alpha1 / self.sigma
                              * (1.0 - np.exp(-self.sigma * z))))


def normalized_profile(evo: PowerEvolution, channel: int, direction: int,
                       window: float | None = None):
    """Return (z, rho) samples for one channel and direction.

    Direction 1 normalizes to the span-entry power; direction 2 walks from
    the span end toward the start, normalized to the span-exit power.  The
    first sample is 1 in both cases.
    """
    if not 1 <= channel <= evo.n_channels:
        raise ValueError(f"channel {channel} not in evolution (1..{evo.n_channels})")
    if direction not in (1, 2):
        raise ValueError("direction must be 1 or 2")
    p = evo.powers[channel - 1]
    if direction == 1:
        rho = p / p[0]
    else:
        rho = p[::-1] / p[-1]
    z = evo.z
    if window is not None and window < z[-1]:
        keep = z <= window
        z, rho = z[keep], rho[keep]
    return z, rho


def _basis(z: np.ndarray, sigma) -> tuple[np.ndarray, np.ndarray]:
    sigma = np.asarray(sigma, dtype=float)
    b1 = -2.0 * z
    if sigma.ndim == 0:
        b2 = -2.0 * (1.0 - np.exp(-float(sigma) * z)) / float(sigma)
    else:
        b2 = -2.0 * (1.0 - np.exp(-sigma[:, None] * z[None, :])) / sigma[:, None]
    return b1, b2


def _solve_for_sigma(z: np.ndarray, y: np.ndarray, sigma: float,
                     alpha0_min: float) -> tuple[float, float, float]:
    """LLS for (alpha0, alpha1) at fixed sigma, alpha0 clamped from below."""
    b1, b2 = _basis(z, sigma)
    b11 = float(b1 @ b1)
    b22 = float(b2 @ b2)
    b12 = float(b1 @ b2)
    det = b11 * b22 - b12 * b12
    if det <= _COLLINEARITY_EPS * b11 * b22:
        raise FitError(f"ill-conditioned basis at sigma = {sigma:g} 1/m")
    c1 = float(b1 @ y)
    c2 = float(b2 @ y)
    a0 = (b22 * c1 - b12 * c2) / det
    a1 = (b11 * c2 - b12 * c1) / det
    if a0 < alpha0_min:
        a0 = alpha0_min
        a1 = float(b2 @ (y - a0 * b1)) / b22
    res = y - (a0 * b1 + a1 * b2)
    return a0, a1, float(res @ res) / y.size


def ls_alpha_given_sigma(z: np.ndarray, rho: np.ndarray, sigma: float,
                         alpha0_min: float = Options.alpha0_min
                         ) -> tuple[float, float, float]:
    """Best (alpha0, alpha1, mse) for the given sigma, on log power."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z = np.asarray(z, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if z.size < 3:
        raise ValueError("need at least 3 samples")
    if np.any(rho <= 0):
        raise ValueError("profile samples must be positive")
    return _solve_for_sigma(z, np.log(rho), sigma, alpha0_min)


class _SigmaGridScanner:
    """Precomputed sigma-grid basis, reusable across profiles on one grid."""

    def __init__(self, z: np.ndarray, sigmas: np.ndarray, alpha0_min: float):
        self.sigmas = sigmas
        self.alpha0_min = alpha0_min
        self.b1, self.b2 = _basis(z, sigmas)
        self.b11 = float(self.b1 @ self.b1)
        self.b22 = np.einsum("sk,sk->s", self.b2, self.b2)
        self.b12 = self.b2 @ self.b1
        self.det = self.b11 * self.b22 - self.b12 ** 2
        self.ok = self.det > _COLLINEARITY_EPS * self.b11 * self.b22

    def scan(self, y: np.ndarray):
        """Inner solve over the grid; ill-conditioned points get mse inf."""
        c1 = float(self.b1 @ y)
        c2 = self.b2 @ y
        with np.errstate(divide="ignore", invalid="ignore"):
            a0 = (self.b22 * c1 - self.b12 * c2) / self.det
            a1 = (self.b11 * c2 - self.b12 * c1) / self.det
        a0 = np.where(self.ok, a0, 0.0)
        a1 = np.where(self.ok, a1, 0.0)
        clamp = self.ok & (a0 < self.alpha0_min)
        if np.any(clamp):
            a0 = np.where(clamp, self.alpha0_min, a0)
            a1 = np.where(clamp, (c2 - self.alpha0_min * self.b12) / self.b22, a1)
        res = y[None, :] - (a0[:, None] * self.b1[None, :] + a1[:, None] * self.b2)
        mse = np.einsum("sk,sk->s", res, res) / y.size
        return a0, a1, np.where(self.ok, mse, np.inf)


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def fit_profile(z: np.ndarray, rho: np.ndarray, options: Options = Options(),
                channel: int = 0, direction: int = 1,
                _scanner: _SigmaGridScanner | None = None) -> FittedLossProfile:
    """Fit (alpha0, alpha1, sigma) to one normalized profile.

    Sigma is scanned on a log-spaced grid, then refined by golden section in
    the bracket around the best grid point; the best parameter set seen
    anywhere is returned.
    """
    z = np.asarray(z, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if z.size < 3:
        raise FitError("need at least 3 profile samples")
    if np.any(rho <= 0):
        raise FitError("profile samples must be positive")
    y = np.log(rho)

    if _scanner is None:
        _scanner = _SigmaGridScanner(
            z, np.geomspace(options.sigma_min, options.sigma_max,
                            options.sigma_grid_points), options.alpha0_min)
    sigmas = _scanner.sigmas
    a0g, a1g, mseg = _scanner.scan(y)
    if not np.any(np.isfinite(mseg)):
        raise FitError("all sigma grid points are ill-conditioned")
    i = int(np.argmin(mseg))
    best = (float(mseg[i]), float(sigmas[i]), float(a0g[i]), float(a1g[i]))

    lo = sigmas[max(i - 1, 0)]
    hi = sigmas[min(i + 1, sigmas.size - 1)]

    def evaluate(s: float):
        nonlocal best
        try:
            a0, a1, mse = _solve_for_sigma(z, y, s, options.alpha0_min)
        except FitError:
            return math.inf
        if mse < best[0]:
            best = (mse, s, a0, a1)
        return mse

    # golden section on log(sigma)
    a, b = math.log(lo), math.log(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = evaluate(math.exp(c)), evaluate(math.exp(d))
    while (b - a) > options.sigma_refine_rel_width:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = evaluate(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = evaluate(math.exp(d))

    mse, sigma, a0, a1 = best
    return FittedLossProfile(channel=channel, direction=direction, alpha0=a0,
                             alpha1=a1, sigma=sigma, mse=mse,
                             window=float(z[-1]))


@dataclass(frozen=True)
class SpanProfiles:
    """All fitted profiles of one span, canonical order: channel asc, then
    direction."""

    span_index: int
    profiles: tuple[FittedLossProfile, ...]

    def direction_arrays(self, direction: int):
        """(alpha0, alpha1, sigma) arrays over channels for one direction."""
        sel = [p for p in self.profiles if p.direction == direction]
        sel.sort(key=lambda p: p.channel)
        return (np.array([p.alpha0 for p in sel]),
                np.array([p.alpha1 for p in sel]),
                np.array([p.sigma for p in sel]))


def fit_span(evo: PowerEvolution, options: Options = Options()) -> SpanProfiles:
    """Fit both directions of every channel in one span solution."""
    window = options.fit_window_m
    fits = []
    scanner = None
    for ch in range(1, evo.n_channels + 1):
        if evo.powers[ch - 1, 0] == 0.0:
            # dark channel: profile undefined, NLI contribution is zero
            # anyway; emit a placeholder satisfying the parameter bounds
            for direction in (1, 2):
                fits.append(FittedLossProfile(
                    channel=ch, direction=direction,
                    alpha0=options.alpha0_min, alpha1=0.0,
                    sigma=options.sigma_min, mse=0.0,
                    window=float(evo.z[-1])))
            continue
        for direction in (1, 2):
            z, rho = normalized_profile(evo, ch, direction, window)
            if scanner is None:
                # grid is identical for every channel and direction of a span
                scanner = _SigmaGridScanner(
                    z, np.geomspace(options.sigma_min, options.sigma_max,
                                    options.sigma_grid_points),
                    options.alpha0_min)
            fits.append(fit_profile(z, rho, options, channel=ch,
                                    direction=direction, _scanner=scanner))
    return SpanProfiles(span_index=evo.span_index, profiles=tuple(fits))


def fit_chain(chain: list[SpanSolution], vlink: ValidatedLink,
              options: Options | None = None) -> list[SpanProfiles]:
    """Fit every span of a chained solution; identical span solutions
    (shared power arrays from the chain cache) are fitted once."""
    options = options or vlink.options
    cache: dict[int, SpanProfiles] = {}
    out = []
    for sol in chain:
        key = id(sol.evolution.powers)
        hit = cache.get(key)
        if hit is None:
            hit = fit_span(sol.evolution, options)
            cache[key] = hit
        out.append(replace(hit, span_index=sol.span_index))
    return out
