"""Unit conversions. Everything internal is watts, hertz, bits and seconds."""

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

MBIT = 1e6
KBIT = 1e3


def db_to_linear(db):
    out = np.power(10.0, np.asarray(db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    out = 10.0 * np.log10(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


def dbm_to_watts(dbm):
    return db_to_linear(dbm) * 1e-3


def watts_to_dbm(w):
    return linear_to_db(w) + 30.0
