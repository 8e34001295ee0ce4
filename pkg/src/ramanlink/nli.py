"""Closed-form per-span nonlinear-interference evaluation and GSNR assembly.

The per-channel NLI power of one span is a finite sum over interferer
channel m, span boundary i (launch side / exit side), sideband j and series
indices k, q, built from the fitted two-exponential loss profiles, the
pair-effective dispersion, and the frequency-dependent nonlinearity
coefficient.  Factorial and power factors are assembled in the log domain
with the sign tracked separately, so large series orders do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import yaml
from scipy.special import gammaln

from .errors import ConfigError, SingularityError
from .link_model import ChannelSpec, Options, SpanSpec
from .profile_fit import SpanProfiles
from .units import C_LIGHT


def effective_beta2(f_n: float, f_m: float, span: SpanSpec) -> float:
    """Pair-effective dispersion (s^2/m); symmetric in (f_n, f_m)."""
    dn = f_n - span.f0
    dm = f_m - span.f0
    return (span.beta2
            + math.pi * span.beta3 * (dn + dm)
            + (2.0 * math.pi ** 2 / 3.0) * span.beta4 * (dn * dn + dn * dm + dm * dm))


def gamma_nm(f_n: float, f_m: float, span: SpanSpec) -> float:
    """Frequency-dependent nonlinearity coefficient (1/(W m))."""
    return (2.0 * math.pi * f_n / C_LIGHT) * 2.0 * span.n2 \
        / (span.aeff(f_n) + span.aeff(f_m))


def series_order(alpha1: np.ndarray, sigma: np.ndarray,
                 q_cap: int = Options.q_cap) -> tuple[int, bool]:
    """Series order for one direction: max over channels of
    floor(10*|2*alpha1/sigma|) + 1, clamped to q_cap."""
    ratios = np.abs(2.0 * np.asarray(alpha1) / np.asarray(sigma))
    q = int(np.max(np.floor(10.0 * ratios))) + 1
    return (q_cap, True) if q > q_cap else (q, False)


def psi(f_n: float, f_m: float, r_n: float, r_m: float, j: int, k: int,
        alpha0_m: float, sigma_m: float, beta2_eff: float) -> float:
    """One asinh factor of the closed form (dimensionless, odd in beta2)."""
    num = math.pi ** 2 * beta2_eff * r_n * (f_m - f_n + (-1.0) ** j * r_m / 2.0)
    return math.asinh(num / (2.0 * alpha0_m + k * sigma_m))


# --------------------------------------------------------------------------
# modulation-format correction term
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RhoRecord:
    format: str
    rate_GBd: float
    disp_ps2_min: float
    disp_ps2_max: float
    rho: float


@dataclass(frozen=True)
class CorrectionModel:
    """Correction coefficient rho_m: identity by default, or a user-supplied
    table keyed by (format, symbol rate, accumulated-dispersion bucket)."""

    mode: str = "identity"          # "identity" | "table"
    records: tuple[RhoRecord, ...] = ()

    @classmethod
    def identity(cls) -> "CorrectionModel":
        return cls()

    @classmethod
    def from_table_text(cls, text: str) -> "CorrectionModel":
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"rho table: syntax error: {exc}") from exc
        if not isinstance(doc, list):
            raise ConfigError("rho table: expected a list of records")
        records = []
        for k, rec in enumerate(doc):
            if not isinstance(rec, dict):
                raise ConfigError(f"rho table[{k}]: expected a mapping")
            required = {"format", "rate_GBd", "disp_ps2_min", "disp_ps2_max", "rho"}
            if set(rec) != required:
                raise ConfigError(
                    f"rho table[{k}]: fields must be exactly {sorted(required)}")
            rho = float(rec["rho"])
            if not (math.isfinite(rho) and rho > 0):
                raise ConfigError(f"rho table[{k}]: rho must be finite and positive")
            records.append(RhoRecord(
                format=str(rec["format"]), rate_GBd=float(rec["rate_GBd"]),
                disp_ps2_min=float(rec["disp_ps2_min"]),
                disp_ps2_max=float(rec["disp_ps2_max"]), rho=rho))
        return cls(mode="table", records=tuple(records))


def correction_rho(model: CorrectionModel, channel: ChannelSpec,
                   accumulated_dispersion: float) -> float:
    """rho for one channel; accumulated_dispersion is signed, in s^2
    (sum of effective beta2 * length over all preceding spans)."""
    if model.mode == "identity":
        return 1.0
    if channel.format.lower() == "gaussian":
        # EGN correction vanishes for Gaussian modulation
        return 1.0
    rate_gbd = channel.symbol_rate / 1e9
    disp_ps2 = accumulated_dispersion / 1e-24
    for rec in model.records:
        if (rec.format.lower() == channel.format.lower()
                and math.isclose(rec.rate_GBd, rate_gbd, rel_tol=1e-9)
                and rec.disp_ps2_min <= disp_ps2 < rec.disp_ps2_max):
            return rec.rho
    raise ConfigError(
        f"rho table: no entry for bucket (format={channel.format}, "
        f"rate={rate_gbd:g} GBd, accumulated dispersion {disp_ps2:g} ps^2)")


# --------------------------------------------------------------------------
# per-span closed form
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NliBreakdown:
    span_index: int
    channel: int
    p_nli_total: float          # W
    p_nli_dir1: float           # W, launch-side contribution
    p_nli_dir2: float           # W, exit-side contribution
    q1: int
    q2: int
    rho: tuple[float, ...]      # rho_m applied, per contributing channel
    warnings: tuple[str, ...]

    @property
    def end_share(self) -> float:
        if self.p_nli_total == 0.0:
            return 0.0
        return self.p_nli_dir2 / self.p_nli_total


def _direction_weights(alpha0, alpha1, sigma, q: int):
    """Log-domain assembly of x^(k+q) / (k! q! (4 a0 + (k+q) sigma)).

    Returns wk[m, k] = sum_q of the above, with x = 2*alpha1/sigma and sign
    handled separately (alpha1 may be negative).
    """
    n = alpha0.size
    kk = np.arange(q + 1)
    kpq = kk[:, None] + kk[None, :]                      # (q+1, q+1)
    logfact = gammaln(kk + 1.0)
    x = 2.0 * alpha1 / sigma
    with np.errstate(divide="ignore"):
        logabsx = np.where(x == 0.0, -np.inf, np.log(np.abs(x)))
    # (n, q+1, q+1): |x|^(k+q) / (k! q!), zero beyond k+q=0 when x == 0
    with np.errstate(invalid="ignore"):    # -inf * 0 at x == 0, k+q == 0
        logw = (logabsx[:, None, None] * kpq[None, :, :]
                - logfact[None, :, None] - logfact[None, None, :])
    w = np.exp(logw)
    w[np.isnan(w)] = 0.0                                 # 0 * -inf at x == 0
    w[(x == 0.0)[:, None, None] & (kpq > 0)[None, :, :]] = 0.0
    w[x == 0.0, 0, 0] = 1.0
    sign = np.where((np.signbit(x)[:, None, None]) & ((kpq % 2 == 1)[None, :, :]),
                    -1.0, 1.0)
    denom = 4.0 * alpha0[:, None, None] + kpq[None, :, :] * sigma[:, None, None]
    wk = np.einsum("mkq,mkq->mk", sign * w, 1.0 / denom)
    assert wk.shape == (n, q + 1)
    return wk, x


def nli_span(span: SpanSpec, channels: Sequence[ChannelSpec],
             profiles: SpanProfiles, p_in: np.ndarray, p_out: np.ndarray,
             model: CorrectionModel = CorrectionModel.identity(),
             accumulated_dispersion: np.ndarray | None = None,
             options: Options = Options(),
             q_extra: int = 0) -> list[NliBreakdown]:
    """Evaluate the closed form for every channel of one span.

    p_in / p_out are the channel boundary powers (W) into and out of the
    span; profile parameters come from the fitted loss profiles of the same
    span.  Summation order is fixed (direction, interferer, sideband, k, q
    ascending), so results are bit-reproducible.
    """
    nc = len(channels)
    f = np.array([c.frequency for c in channels])
    rates = np.array([c.symbol_rate for c in channels])
    if accumulated_dispersion is None:
        accumulated_dispersion = np.zeros(nc)
    rho = np.array([correction_rho(model, c, accumulated_dispersion[j])
                    for j, c in enumerate(channels)])

    dn = f - span.f0
    beta2_mat = (span.beta2
                 + math.pi * span.beta3 * (dn[:, None] + dn[None, :])
                 + (2.0 * math.pi ** 2 / 3.0) * span.beta4
                 * (dn[:, None] ** 2 + dn[:, None] * dn[None, :] + dn[None, :] ** 2))
    small = np.abs(beta2_mat) < options.beta2_eps
    if np.any(small):
        n_bad, m_bad = np.argwhere(small)[0]
        raise SingularityError(
            f"span {profiles.span_index}: effective dispersion below "
            f"{options.beta2_eps:g} s^2/m for channel pair "
            f"(n={n_bad + 1}, m={m_bad + 1}); closed form is singular")

    aeff = span.aeff(f)
    gamma_mat = (2.0 * math.pi * f[:, None] / C_LIGHT) * 2.0 * span.n2 \
        / (aeff[:, None] + aeff[None, :])

    warnings: list[str] = []
    per_dir = np.zeros((2, nc))
    q_used = [0, 0]
    boundary_powers = {1: np.asarray(p_in, dtype=float),
                       2: np.asarray(p_out, dtype=float)}
    for i in (1, 2):
        a0, a1, sigma = profiles.direction_arrays(i)
        q, capped = series_order(a1, sigma, options.q_cap)
        q = min(q + q_extra, options.q_cap)     # q_extra: convergence checks
        q_used[i - 1] = q
        if capped:
            warnings.append(f"direction {i}: series order clamped to "
                            f"Q_cap = {options.q_cap}")
        wk, x = _direction_weights(a0, a1, sigma, q)
        p = boundary_powers[i]
        # n-independent pieces
        kk = np.arange(q + 1)
        psi_denom = 2.0 * a0[:, None] + kk[None, :] * sigma[:, None]   # (m, k)
        pref_m = p ** 2 * rho * np.exp(-2.0 * x) / (2.0 * math.pi * rates ** 2)
        for n in range(nc):
            b2 = beta2_mat[n]                                          # (m,)
            detune = f - f[n]
            arg0 = (math.pi ** 2 * rates[n]) * b2[:, None] \
                * (detune + rates / 2.0)[:, None] / psi_denom
            arg1 = (math.pi ** 2 * rates[n]) * b2[:, None] \
                * (detune - rates / 2.0)[:, None] / psi_denom
            jsum = np.arcsinh(arg0) - np.arcsinh(arg1)                 # (m, k)
            inner = np.einsum("mk,mk->m", jsum, wk)
            degeneracy = np.where(np.arange(nc) == n, 1.0, 2.0)
            terms = gamma_mat[n] ** 2 * p[n] * pref_m * degeneracy \
                * inner / b2
            per_dir[i - 1, n] += (16.0 / 27.0) * float(np.sum(terms))

    out = []
    wtuple = tuple(warnings)
    rtuple = tuple(rho)
    for n, c in enumerate(channels):
        d1 = float(per_dir[0, n])
        d2 = float(per_dir[1, n])
        out.append(NliBreakdown(
            span_index=profiles.span_index, channel=c.index,
            p_nli_total=d1 + d2, p_nli_dir1=d1, p_nli_dir2=d2,
            q1=q_used[0], q2=q_used[1], rho=rtuple, warnings=wtuple))
    return out


def accumulate_link(per_span: Sequence[Sequence[NliBreakdown]]) -> np.ndarray:
    """Total per-channel NLI power over the link: arithmetic sum per channel
    in fixed span order."""
    if not per_span:
        raise ValueError("no span breakdowns to accumulate")
    nc = len(per_span[0])
    total = np.zeros(nc)
    for spans in per_span:
        for j, b in enumerate(spans):
            total[j] += b.p_nli_total
    return total


# --------------------------------------------------------------------------
# GSNR assembly
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GsnrReport:
    """Per-channel SNR figures as linear ratios in the channel symbol-rate
    bandwidth; infinite when the corresponding noise power is zero."""

    channel: int
    frequency: float            # Hz
    osnr_ase: float
    snr_nli: float
    gsnr: float

    @property
    def osnr_ase_db(self) -> float:
        return _to_db(self.osnr_ase)

    @property
    def snr_nli_db(self) -> float:
        return _to_db(self.snr_nli)

    @property
    def gsnr_db(self) -> float:
        return _to_db(self.gsnr)


def _to_db(x: float) -> float:
    if math.isinf(x):
        return math.inf
    if x == 0.0:
        return -math.inf
    return 10.0 * math.log10(x)


def gsnr(channel: ChannelSpec, p_signal: float, p_ase: float,
         p_nli: float) -> GsnrReport:
    """Combine ASE and NLI powers (same reference bandwidth) into GSNR.

    A dark channel (zero signal power) reports all ratios as 0 rather than
    erroring, so zero-power combs remain representable end to end.
    """
    if p_signal < 0:
        raise ValueError("signal power must be non-negative")
    if p_signal == 0.0:
        return GsnrReport(channel=channel.index, frequency=channel.frequency,
                          osnr_ase=0.0, snr_nli=0.0, gsnr=0.0)
    if p_ase < 0 or p_nli < 0:
        raise ValueError("noise powers must be non-negative")
    osnr = p_signal / p_ase if p_ase > 0 else math.inf
    snr_nli = p_signal / p_nli if p_nli > 0 else math.inf
    total = p_ase + p_nli
    g = p_signal / total if total > 0 else math.inf
    return GsnrReport(channel=channel.index, frequency=channel.frequency,
                      osnr_ase=osnr, snr_nli=snr_nli, gsnr=g)


def gsnr_from_measurement(snr_meas: float, snr_bb: float) -> float:
    """Back out the propagation GSNR from a constellation SNR measurement
    and the transceiver back-to-back SNR floor."""
    if snr_meas <= 0 or snr_bb <= 0:
        raise ValueError("SNRs must be positive linear ratios")
    if snr_meas >= snr_bb:
        raise ValueError(
            "measured SNR is not below the back-to-back floor; "
            "measurement inconsistent")
    return snr_meas / (1.0 - snr_meas / snr_bb)
