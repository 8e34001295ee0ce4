"""Exact per-channel power evolution inside a span.

Solves the coupled scalar Raman power equations (pump-pump, pump-signal and
signal-signal interactions, photon-energy factor on the donor side) as a
two-point boundary-value problem: forward waves are fixed at z=0, backward
pumps at z=L.  The BVP is solved by alternating forward/backward fixed-step
RK4 sweeps until the free endpoints stop moving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .link_model import Options, SpanSpec, ValidatedLink


def scale_raman_gain(span: SpanSpec, f_pump: float, f_signal: float) -> float:
    """Gain efficiency (1/(W m)) for a pump/signal pair.

    The measured curve g_ref(delta_f) was taken with the pump at
    span.pump_ref.  Translation to other pump frequencies: linear scaling
    with pump frequency, plus arithmetic-mean effective-area normalization
    relative to the measurement condition.  At f_pump == pump_ref this is an
    exact identity; with a flat Aeff it reduces to g_ref * f_pump/pump_ref.
    """
    df = f_pump - f_signal
    g = span.raman_gain(df)
    if g == 0.0:
        return 0.0
    a_bar = 0.5 * (span.aeff(f_pump) + span.aeff(f_signal))
    a_bar_ref = 0.5 * (span.aeff(span.pump_ref) + span.aeff(span.pump_ref - df))
    return g * (f_pump / span.pump_ref) * (a_bar_ref / a_bar)


@dataclass(frozen=True)
class SpanWaves:
    """Per-span wave system: channels first (link order), then pumps."""

    frequencies: np.ndarray     # (N,) Hz
    alpha: np.ndarray           # (N,) field loss 1/m
    is_forward: np.ndarray      # (N,) bool
    coupling: np.ndarray        # (N, N); see raman_rhs
    n_channels: int

    @classmethod
    def build(cls, span: SpanSpec, channel_frequencies: np.ndarray) -> "SpanWaves":
        freqs = list(map(float, channel_frequencies))
        fwd = [True] * len(freqs)
        for p in span.pumps:
            freqs.append(p.frequency)
            fwd.append(p.direction == "forward")
        f = np.array(freqs)
        n = len(f)

        # vectorized pairwise gain efficiency; same rule as scale_raman_gain
        df = np.abs(f[None, :] - f[:, None])
        g = span.raman_gain(df)
        eff = np.zeros((n, n))
        hot = g > 0.0
        if np.any(hot):
            aeff_f = span.aeff(f)
            a_bar = 0.5 * (aeff_f[None, :] + aeff_f[:, None])
            a_ref_lo = span.aeff(span.pump_ref - df[hot])
            a_bar_ref = 0.5 * (span.aeff(span.pump_ref) + a_ref_lo)
            f_hi = np.maximum(f[None, :], f[:, None])
            eff[hot] = g[hot] * (f_hi[hot] / span.pump_ref) \
                * (a_bar_ref / a_bar[hot])
        # eff[v, u] (symmetric) is the pump->signal efficiency for the pair;
        # receivers see +eff, donors -(f_v/f_u)*eff
        c = np.where(f[None, :] > f[:, None], eff, 0.0) \
            - np.where(f[None, :] < f[:, None],
                       (f[:, None] / np.where(f[None, :] == 0.0, 1.0, f[None, :]))
                       * eff, 0.0)
        for arr in (f, c):
            arr.setflags(write=False)
        alpha = span.attenuation(f)
        alpha.setflags(write=False)
        is_forward = np.array(fwd)
        is_forward.setflags(write=False)
        return cls(frequencies=f, alpha=alpha, is_forward=is_forward,
                   coupling=c, n_channels=len(channel_frequencies))


def raman_rhs(powers: np.ndarray, waves: SpanWaves) -> np.ndarray:
    """dP/dz (W/m) for every wave at instantaneous powers.

    For wave v with direction sign s_v:
        dP_v/dz = s_v * P_v * (-2 alpha_v + sum_u coupling[v, u] * P_u)
    where coupling holds +g for donors above f_v and -(f_v/f_u) g for
    receivers below f_v (photon-number conserving pair terms).
    """
    sign = np.where(waves.is_forward, 1.0, -1.0)
    return sign * powers * (-2.0 * waves.alpha + waves.coupling @ powers)


@dataclass(frozen=True)
class PowerEvolution:
    """Sampled solution of the span BVP; channels first, then pumps."""

    z: np.ndarray               # (K+1,) m, uniform
    powers: np.ndarray          # (N, K+1) W
    frequencies: np.ndarray     # (N,) Hz
    is_forward: np.ndarray      # (N,) bool
    n_channels: int
    span_index: int
    residual_history: tuple[float, ...]
    warnings: tuple[str, ...]

    @property
    def length(self) -> float:
        return float(self.z[-1])

    def channel_powers(self) -> np.ndarray:
        return self.powers[:self.n_channels]


def _rk4_sweep(p0: np.ndarray, neg2alpha: np.ndarray, c_mm: np.ndarray,
               bg_nodes: np.ndarray, h: float) -> np.ndarray:
    """Integrate dP/ds = P*(neg2alpha + c_mm@P + bg(s)) over the grid.

    bg_nodes holds the frozen other-direction contribution at the nodes;
    midpoint values are interpolated with a cubic stencil so the background
    does not degrade the RK4 order (linear midpoints would cap the converged
    solution at O(h^2)).
    """
    n_steps = bg_nodes.shape[1] - 1
    out = np.empty((p0.size, n_steps + 1))
    out[:, 0] = p0
    if n_steps >= 3:
        b = bg_nodes
        bg_mid = np.empty((p0.size, n_steps))
        bg_mid[:, 1:-1] = (-b[:, :-3] + 9.0 * b[:, 1:-2]
                           + 9.0 * b[:, 2:-1] - b[:, 3:]) / 16.0
        bg_mid[:, 0] = (5.0 * b[:, 0] + 15.0 * b[:, 1]
                        - 5.0 * b[:, 2] + b[:, 3]) / 16.0
        bg_mid[:, -1] = (b[:, -4] - 5.0 * b[:, -3]
                         + 15.0 * b[:, -2] + 5.0 * b[:, -1]) / 16.0
    else:
        bg_mid = 0.5 * (bg_nodes[:, :-1] + bg_nodes[:, 1:])
    p = p0
    for k in range(n_steps):
        b0 = bg_nodes[:, k]
        bm = bg_mid[:, k]
        b1 = bg_nodes[:, k + 1]
        k1 = p * (neg2alpha + c_mm @ p + b0)
        p2 = p + (0.5 * h) * k1
        k2 = p2 * (neg2alpha + c_mm @ p2 + bm)
        p3 = p + (0.5 * h) * k2
        k3 = p3 * (neg2alpha + c_mm @ p3 + bm)
        p4 = p + h * k3
        k4 = p4 * (neg2alpha + c_mm @ p4 + b1)
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[:, k + 1] = p
    return out


def _relax(waves: SpanWaves, boundary: np.ndarray, powers: np.ndarray,
           h: float, rel_tol: float, max_iter: int) -> list[float]:
    """Alternating-sweep relaxation in place; returns the residual history.

    Raises ConvergenceError when the free endpoints are still moving after
    max_iter iterations.
    """
    fwd = waves.is_forward
    idx_f = np.flatnonzero(fwd)
    idx_b = np.flatnonzero(~fwd)
    neg2a_f = -2.0 * waves.alpha[idx_f]
    neg2a_b = -2.0 * waves.alpha[idx_b]
    c = waves.coupling
    c_ff = c[np.ix_(idx_f, idx_f)]
    c_fb = c[np.ix_(idx_f, idx_b)]
    c_bb = c[np.ix_(idx_b, idx_b)]
    c_bf = c[np.ix_(idx_b, idx_f)]

    tiny = 1e-30
    history: list[float] = []
    endpoints = np.concatenate([powers[idx_f, -1], powers[idx_b, 0]])
    for _ in range(max_iter):
        bg_f = c_fb @ powers[idx_b]
        powers[idx_f] = _rk4_sweep(boundary[idx_f], neg2a_f, c_ff, bg_f, h)
        if idx_b.size:
            # backward waves integrated along u = L - z against frozen
            # forward profiles; same RHS form with the sign absorbed
            bg_b = c_bf @ powers[idx_f, ::-1]
            sol = _rk4_sweep(boundary[idx_b], neg2a_b, c_bb, bg_b, h)
            powers[idx_b] = sol[:, ::-1]
        new_endpoints = np.concatenate([powers[idx_f, -1], powers[idx_b, 0]])
        residual = float(np.max(np.abs(new_endpoints - endpoints)
                                / np.maximum(np.abs(endpoints), tiny)))
        history.append(residual)
        endpoints = new_endpoints
        if residual < rel_tol:
            return history
    raise ConvergenceError(
        f"relaxation did not converge in {max_iter} iterations "
        f"(residual {history[-1]:.3e})", residual=history[-1])


# fine grids warm-start from a grid coarsened by this factor
_COARSEN_FACTOR = 10
_COARSEN_MIN_STEPS = 50


def solve_power_evolution(span: SpanSpec, channel_frequencies: np.ndarray,
                          launch_powers: np.ndarray,
                          options: Options = Options(),
                          span_index: int = 1) -> PowerEvolution:
    """Solve the span BVP by alternating relaxation sweeps.

    Forward waves (channels and forward pumps) satisfy their boundary value
    at z=0 exactly, backward pumps at z=L.  Iterates until the maximum
    relative change of any free endpoint drops below solver_rel_tol.  Fine
    grids are warm-started from a converged coarse-grid solution, which cuts
    the number of expensive fine iterations without changing the fixed point.
    """
    warnings: list[str] = []
    n_steps = max(1, math.ceil(span.length / options.grid_step_m))
    h = span.length / n_steps
    if abs(h - options.grid_step_m) > 1e-9 * options.grid_step_m:
        warnings.append(
            f"grid step adjusted from {options.grid_step_m:g} m to {h:g} m "
            f"to divide the span length")
    z = np.linspace(0.0, span.length, n_steps + 1)

    waves = SpanWaves.build(span, np.asarray(channel_frequencies, dtype=float))
    n = waves.frequencies.size
    fwd = waves.is_forward
    bwd = ~fwd

    boundary = np.zeros(n)
    boundary[:waves.n_channels] = np.asarray(launch_powers, dtype=float)
    for j, p in enumerate(span.pumps):
        boundary[waves.n_channels + j] = p.power

    # loss-only initial guess in each wave's own direction
    powers = np.empty((n, n_steps + 1))
    decay = np.exp(-2.0 * np.outer(waves.alpha, z))
    powers[fwd] = boundary[fwd, None] * decay[fwd]
    powers[bwd] = boundary[bwd, None] * decay[bwd, ::-1]

    if n_steps >= 2 * _COARSEN_MIN_STEPS:
        k_coarse = max(_COARSEN_MIN_STEPS, n_steps // _COARSEN_FACTOR)
        z_coarse = np.linspace(0.0, span.length, k_coarse + 1)
        coarse = np.empty((n, k_coarse + 1))
        coarse[fwd] = boundary[fwd, None] * np.exp(
            -2.0 * np.outer(waves.alpha[fwd], z_coarse))
        coarse[bwd] = (boundary[bwd, None] * np.exp(
            -2.0 * np.outer(waves.alpha[bwd], z_coarse)))[:, ::-1]
        try:
            _relax(waves, boundary, coarse, span.length / k_coarse,
                   options.solver_rel_tol, options.solver_max_iter)
            for w in range(n):
                powers[w] = np.interp(z, z_coarse, coarse[w])
        except ConvergenceError:
            pass    # fall through to the fine grid from the loss-only guess

    try:
        history = _relax(waves, boundary, powers, h, options.solver_rel_tol,
                         options.solver_max_iter)
    except ConvergenceError as exc:
        raise ConvergenceError(f"span {span_index}: {exc}",
                               residual=exc.residual) from exc

    powers.setflags(write=False)
    z.setflags(write=False)
    return PowerEvolution(z=z, powers=powers, frequencies=waves.frequencies,
                          is_forward=waves.is_forward,
                          n_channels=waves.n_channels, span_index=span_index,
                          residual_history=tuple(history),
                          warnings=tuple(warnings))


@dataclass(frozen=True)
class SpanSolution:
    span_index: int             # 1-based
    evolution: PowerEvolution
    p_in: np.ndarray            # (N_c,) channel power into the span (W)
    p_out: np.ndarray           # (N_c,) channel power out of the span (W)


def chain_spans(vlink: ValidatedLink,
                options: Options | None = None) -> list[SpanSolution]:
    """Propagate the comb through every span.

    Default inter-span condition is ideal power restoration to the span-1
    launch spectrum (all-Raman line, no EDFAs); a per-span launch override in
    the link file replaces the restored powers for that span.  Identical
    (span, launch) pairs are solved once and reused, which keeps the common
    homogeneous-link case cheap.
    """
    options = options or vlink.options
    base_launch = vlink.launch_powers
    cache: dict = {}
    out: list[SpanSolution] = []
    for k, span in enumerate(vlink.spans, start=1):
        if span.launch_override is not None:
            launch = span.launch_override(vlink.frequencies)
        else:
            launch = base_launch
        key = (span, tuple(launch))
        evo = cache.get(key)
        if evo is None:
            evo = solve_power_evolution(span, vlink.frequencies, launch,
                                        options, span_index=k)
            cache[key] = evo
        else:
            evo = PowerEvolution(z=evo.z, powers=evo.powers,
                                 frequencies=evo.frequencies,
                                 is_forward=evo.is_forward,
                                 n_channels=evo.n_channels, span_index=k,
                                 residual_history=evo.residual_history,
                                 warnings=evo.warnings)
        p_in = np.array(launch, dtype=float)
        p_out = evo.channel_powers()[:, -1].copy()
        for arr in (p_in, p_out):
            arr.setflags(write=False)
        out.append(SpanSolution(span_index=k, evolution=evo, p_in=p_in, p_out=p_out))
    return out
