"""Bundled reference link: 9 x ~60 km all-Raman C+L line.

Span count, pump frequencies/powers and the comb plan (32 GBaud, 50 GHz
grid, roll-off 0.1) follow the published experiment this package models.
The fiber curves (attenuation, Aeff, dispersion, Raman gain shape) are NOT
measured data from that experiment -- they are representative G.652D values,
since the experiment's own tables were never published.
"""

from __future__ import annotations

import math

import yaml

from .units import C_LIGHT

# [THz, mW], averaged over spans; all backward
PUMPS = [
    (210.6, 288.2),
    (208.9, 263.4),
    (206.7, 167.9),
    (204.5, 112.4),
    (200.6, 161.5),
]

RAMAN_PUMP_REF_THZ = 206.7

# representative G.652D power attenuation, dB/km vs THz
ATTENUATION_DB_PER_KM = [
    [184.0, 0.220], [186.0, 0.212], [188.0, 0.205], [190.0, 0.200],
    [192.0, 0.196], [194.0, 0.193], [196.0, 0.192], [198.0, 0.200],
    [200.0, 0.222], [202.0, 0.242], [204.0, 0.258], [206.0, 0.268],
    [208.0, 0.274], [210.0, 0.278], [212.0, 0.282], [214.0, 0.288],
]

# representative effective area, um^2 vs THz (larger toward longer wavelength)
AEFF_UM2 = [
    [180.0, 88.0], [184.0, 86.5], [188.0, 84.0], [192.0, 81.0],
    [196.0, 78.5], [200.0, 76.5], [204.0, 74.5], [208.0, 72.5],
    [212.0, 71.0], [214.0, 70.0],
]

# representative silica Raman gain efficiency, 1/(W km) vs pump-signal
# separation in THz, for a pump near 206.7 THz
RAMAN_GAIN_PER_W_PER_KM = [
    [0.0, 0.0], [1.0, 0.035], [2.0, 0.065], [3.0, 0.090], [4.0, 0.112],
    [5.0, 0.130], [6.0, 0.152], [7.0, 0.180], [8.0, 0.210], [9.0, 0.240],
    [10.0, 0.275], [11.0, 0.310], [12.0, 0.355], [13.0, 0.405],
    [13.2, 0.412], [14.0, 0.380], [14.5, 0.260], [15.0, 0.185],
    [15.5, 0.160], [16.0, 0.165], [17.0, 0.155], [18.0, 0.115],
    [19.0, 0.062], [20.0, 0.040], [21.0, 0.030], [22.0, 0.024],
    [23.0, 0.019], [24.0, 0.015], [25.0, 0.011], [26.0, 0.008],
    [28.0, 0.004], [30.0, 0.002], [32.0, 0.001], [35.0, 0.0],
]

BETA2_PS2_PER_KM = -21.3
BETA3_PS3_PER_KM = 0.12
BETA4_PS4_PER_KM = -5.0e-4
F0_THZ = 192.0

# SPM nonlinearity coefficient is 1.25 1/(W km) at 192 THz; with
# Aeff(192 THz) = 81 um^2 that pins n2.
GAMMA_REF_PER_W_PER_KM = 1.25
AEFF_AT_REF_UM2 = 81.0
N2_M2_PER_W = (GAMMA_REF_PER_W_PER_KM * 1e-3 * C_LIGHT * AEFF_AT_REF_UM2 * 1e-12
               / (2.0 * math.pi * 192.0e12))


def channel_plan(num_channels: int = 90):
    """50 GHz grid split into an L-band and a C-band block, in THz."""
    n_l = num_channels // 2
    n_c = num_channels - n_l
    freqs = [186.10 + 0.05 * k for k in range(n_l)]
    freqs += [191.35 + 0.05 * k for k in range(n_c)]
    return freqs


def paper_fixture(num_channels: int = 90, num_spans: int = 9,
                  span_length_km: float = 60.0, launch_dbm: float = 0.0,
                  osnr_db: float = 26.0, channel_format: str = "PM-32QAM",
                  options: dict | None = None) -> dict:
    """Human-schema link document for the 9-span all-Raman C+L line."""
    span = {
        "length_km": span_length_km,
        "attenuation_db_per_km": [list(p) for p in ATTENUATION_DB_PER_KM],
        "beta2_ps2_per_km": BETA2_PS2_PER_KM,
        "beta3_ps3_per_km": BETA3_PS3_PER_KM,
        "beta4_ps4_per_km": BETA4_PS4_PER_KM,
        "f0_THz": F0_THZ,
        "n2_m2_per_W": N2_M2_PER_W,
        "aeff_um2": [list(p) for p in AEFF_UM2],
        "raman_gain": {
            "pump_ref_THz": RAMAN_PUMP_REF_THZ,
            "table": [list(p) for p in RAMAN_GAIN_PER_W_PER_KM],
        },
        "pumps": [{"f_THz": f, "power_mW": p, "direction": "backward"}
                  for f, p in PUMPS],
    }
    doc = {
        "spans": [dict(span) for _ in range(num_spans)],
        "channels": [{"f_THz": round(f, 6), "rate_GBd": 32.0, "roll_off": 0.1,
                      "format": channel_format, "power_dBm": launch_dbm}
                     for f in channel_plan(num_channels)],
        "ase": {
            "ref_bandwidth_GHz": 12.5,
            "osnr_db": [[180.0, osnr_db], [214.0, osnr_db]],
        },
    }
    if options:
        doc["options"] = dict(options)
    return doc


def write_paper_fixture(path, **kwargs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(paper_fixture(**kwargs), fh, sort_keys=False)
