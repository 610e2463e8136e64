"""Desk-scale calibration of the bound constants on a fixed corpus."""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from .bounds import (
    AssumedFTable,
    CalibrationSample,
    ConstantsConfig,
    NSource,
    P_alpha_beta,
    RSource,
    calibrate,
    convention_index,
)
from .complexity import empirical_T_table
from .geometry import build_kite

# alpha, beta and pi are rationally independent for these kites
INDEPENDENT_KITES: Tuple[Tuple[str, str], ...] = (
    ("sqrt(2)/2", "sqrt(3)/3"),
    ("sqrt(5)/3", "sqrt(7)/3"),
    ("0.5*sqrt(2) + 0.1", "sqrt(3)/4"),
)
FRACTIONS = (0.17, 0.41, 0.63, 0.86)
CALIBRATION_MS = (2, 4, 8, 16, 32)
HORIZON = 10000


def corpus_directions(alpha, beta, fractions: Sequence[float] = FRACTIONS, base_side: int = 1) -> List[str]:
    """Directions at fixed fractions of the inward range, rounded to 4 decimals."""
    kite = build_kite(alpha, beta, base_side)
    lo, hi = (float(x) for x in kite.inward_range(base_side))
    return [f"{lo + f * (hi - lo):.4f}" for f in fractions]


def collect_samples(kites=INDEPENDENT_KITES, ms=CALIBRATION_MS, horizon: int = HORIZON,
                    f_const: int = 5) -> List[CalibrationSample]:
    F = AssumedFTable(f_const)
    out = []
    for a, b in kites:
        kite = build_kite(a, b)
        Ns = NSource(a, b)
        R = RSource(F, Ns)
        Rm = {m: R(m)[0] for m in ms}
        NP = {m: Ns(convention_index(P_alpha_beta(Fraction(1, m), F).value)) for m in ms}
        for th in corpus_directions(a, b):
            T = empirical_T_table(kite, th, ms, horizon)
            if any(v is None for v in T.values()):
                raise RuntimeError(f"unsplit cell for {a}, {b}, {th}; raise the horizon")
            out.append(CalibrationSample(Rm, NP, T))
    return out


def run_calibration(**kw) -> ConstantsConfig:
    return calibrate(collect_samples(**kw))


def constants_literal(c: ConstantsConfig) -> Dict[str, float]:
    """Values rounded up to 6 significant digits, so the rounded constants stay valid."""
    out = {}
    for k in ("C_dichotomy", "c_shear", "C_phi_arg", "C_generic", "C_lower"):
        v = getattr(c, k)
        s = float(f"{v:.6g}")
        if s < v:
            s = float(f"{v * (1 + 1e-6):.6g}")
        out[k] = s
    return out
