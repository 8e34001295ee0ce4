"""Full evaluation pipeline: solve -> fit -> NLI -> GSNR."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .link_model import Curve, LinkDescription, Options, ValidatedLink, validate_link
from .nli import (CorrectionModel, GsnrReport, NliBreakdown, accumulate_link,
                  effective_beta2, gsnr, nli_span)
from .profile_fit import SpanProfiles, fit_chain
from .raman_solver import SpanSolution, chain_spans
from .units import db_to_lin


@dataclass(frozen=True)
class LinkReport:
    vlink: ValidatedLink
    offset_db: float
    chain: tuple[SpanSolution, ...]
    profiles: tuple[SpanProfiles, ...]
    breakdowns: tuple[tuple[NliBreakdown, ...], ...]   # [span][channel]
    nli_totals: np.ndarray                             # (N_c,) W at link end
    gsnr: tuple[GsnrReport, ...]
    warnings: tuple[str, ...]

    def end_share_link(self, channel_pos: int) -> float:
        """Link-aggregated exit-side NLI share for one channel (0-based)."""
        total = sum(s[channel_pos].p_nli_total for s in self.breakdowns)
        if total == 0.0:
            return 0.0
        return sum(s[channel_pos].p_nli_dir2 for s in self.breakdowns) / total


def _scale_launch(link: LinkDescription, factor: float) -> LinkDescription:
    channels = tuple(replace(c, launch_power=c.launch_power * factor)
                     for c in link.channels)
    spans = tuple(
        s if s.launch_override is None else replace(
            s, launch_override=Curve(
                s.launch_override.x,
                tuple(v * factor for v in s.launch_override.y)))
        for s in link.spans)
    return replace(link, spans=spans, channels=channels)


def run_pipeline(vlink: ValidatedLink, options: Options | None = None,
                 correction: CorrectionModel = CorrectionModel.identity(),
                 offset_db: float = 0.0) -> LinkReport:
    """Run the full model on a validated link.

    offset_db shifts every launch power (including per-span overrides) by a
    uniform amount; receiver ASE power stays fixed in watts, so OSNR moves
    with the offset while the NLI follows its cubic law plus any Raman
    profile change.
    """
    options = options or vlink.options
    # ASE powers in the channel bandwidth, anchored to the unshifted link
    p_ase = np.array([vlink.ase_power(c) for c in vlink.channels])

    if offset_db != 0.0:
        vrun = validate_link(_scale_launch(vlink.link, db_to_lin(offset_db)))
    else:
        vrun = vlink
    chain = chain_spans(vrun, options)
    profiles = fit_chain(chain, vrun, options)

    breakdowns = []
    acc_disp = np.zeros(len(vrun.channels))
    for sol, prof, span in zip(chain, profiles, vrun.spans):
        breakdowns.append(tuple(nli_span(
            span, vrun.channels, prof, sol.p_in, sol.p_out,
            model=correction, accumulated_dispersion=acc_disp,
            options=options)))
        acc_disp = acc_disp + np.array(
            [effective_beta2(c.frequency, c.frequency, span) * span.length
             for c in vrun.channels])

    totals = accumulate_link(breakdowns)
    reports = tuple(
        gsnr(c, c.launch_power, p_ase[j], totals[j])
        for j, c in enumerate(vrun.channels))

    warnings: list[str] = []
    seen = set()
    for sol in chain:
        for w in sol.evolution.warnings:
            msg = f"span {sol.span_index}: {w}"
            if msg not in seen:
                seen.add(msg)
                warnings.append(msg)
    for spans in breakdowns:
        for w in spans[0].warnings if spans else ():
            msg = f"span {spans[0].span_index}: {w}"
            if msg not in seen:
                seen.add(msg)
                warnings.append(msg)

    return LinkReport(vlink=vrun, offset_db=offset_db, chain=tuple(chain),
                      profiles=tuple(profiles), breakdowns=tuple(breakdowns),
                      nli_totals=totals, gsnr=reports,
                      warnings=tuple(warnings))
