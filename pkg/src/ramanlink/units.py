"""Unit conversions between the human-facing config units and internal SI.

Internal convention everywhere in the package: Hz, W, m, s.  Attenuation is
stored as *field* loss (1/m), so power decays as exp(-2*alpha*z).
"""

import math

LN10 = math.log(10.0)

# speed of light, m/s
C_LIGHT = 299792458.0


def db_to_lin(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def lin_to_db(x: float) -> float:
    if x == 0.0:
        return -math.inf
    return 10.0 * math.log10(x)


def dbm_to_w(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def w_to_dbm(p_w: float) -> float:
    if p_w == 0.0:
        return -math.inf
    return 10.0 * math.log10(p_w) + 30.0


def db_per_km_to_field_per_m(x: float) -> float:
    """Power loss in dB/km -> field loss in 1/m (P ~ exp(-2*alpha*z))."""
    return x * LN10 / 2.0e4


def field_per_m_to_db_per_km(alpha: float) -> float:
    return alpha * 2.0e4 / LN10


def thz_to_hz(x: float) -> float:
    return x * 1e12


def hz_to_thz(x: float) -> float:
    return x * 1e-12
