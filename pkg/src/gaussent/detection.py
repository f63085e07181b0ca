"""Imperfect homodyne detection, robustness regions and Monte Carlo reconstruction.

Homodyne outcomes for local-oscillator phase ``chi`` are samples of the rotated
quadrature ``x(chi) = q cos(chi) + p sin(chi)``, so ``chi = 0`` reads ``q`` and
``chi = pi/2`` reads ``p``. Samples are drawn with the true covariance ``V / 2``.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .covariance import (
    PHYSICAL_TOL,
    GaussentError,
    PatternMismatch,
    QuadratureMatrix,
    StandardFormV0,
    partial_transpose,
    symplectic_eigenvalues,
    to_standard_v0,
)
from .separability import Verdict, make_verdict, reid_drummond_epr

MIN_SHOTS = 100


class NonCommutingMeasurement(GaussentError, ValueError):
    """Two incompatible quadratures of one mode were requested in a single setting."""


@dataclass(frozen=True)
class EfficiencyModel:
    eta: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta!r}")


class RegionLabel(str, enum.Enum):
    S = "S"
    E = "E"
    E_PRIME = "E'"


def efficiency_channel(V: QuadratureMatrix, m: EfficiencyModel | float) -> QuadratureMatrix:
    """Equal-efficiency detectors: ``V -> eta V + (1 - eta) 1``."""
    if not isinstance(m, EfficiencyModel):
        m = EfficiencyModel(float(m))
    eta = m.eta
    out = eta * V.entries + (1 - eta) * np.eye(V.entries.shape[0])
    mean = None if V.mean is None else math.sqrt(eta) * V.mean
    return QuadratureMatrix(out, mean)


def detected_product(delta1: float, delta2: float, eta: float) -> float:
    """``delta1' * delta2'`` after the efficiency channel, as a polynomial in ``eta``."""
    return (
        eta**2 * (delta1 * delta2 - delta1 - delta2 + 1)
        + eta * (delta1 + delta2 - 2)
        + 1
    )


def detected_entanglement_condition(delta1: float, delta2: float, eta: float,
                                    tol: float = PHYSICAL_TOL) -> Verdict:
    if delta1 <= 0 or delta2 <= 0:
        raise ValueError(f"delta values must be positive, got ({delta1!r}, {delta2!r})")
    EfficiencyModel(eta)
    return make_verdict("detected_entanglement", detected_product(delta1, delta2, eta), 1.0, tol)


def detection_threshold(delta1: float, delta2: float) -> float:
    """Smallest efficiency above which the entanglement is still detected.

    Returns 0 for states in region E, ``inf`` for separable states, and the
    positive root of ``eta (a eta + b) = 0`` for region E'.
    """
    a = (delta1 - 1) * (delta2 - 1)
    b = delta1 + delta2 - 2
    if delta1 * delta2 >= 1:
        return math.inf
    if b < 0:
        return 0.0
    return b / -a


def region_of(delta1: float, delta2: float, tol: float = PHYSICAL_TOL) -> RegionLabel:
    if delta1 * delta2 >= 1 - tol:
        return RegionLabel.S
    if delta1 + delta2 < 2:
        return RegionLabel.E
    return RegionLabel.E_PRIME


def classify_region(f: StandardFormV0, tol: float = PHYSICAL_TOL) -> RegionLabel:
    f.check_physical()
    return region_of(f.delta1, f.delta2, tol)


def tap_beam_splitter_extend(V: QuadratureMatrix, mode: int = 0, check: bool = True) -> QuadratureMatrix:
    """Split ``mode`` on a 50:50 beam splitter with vacuum in the other port.

    The result has three modes: the two original ones (``mode`` replaced by its
    transmitted part) followed by the reflected part as mode 2. The untouched mode's
    marginal is unchanged.
    """
    if V.n_modes != 2:
        raise ValueError("tap extension applies to two-mode states")
    if mode not in (0, 1):
        raise ValueError(f"tapped mode must be 0 or 1, got {mode!r}")
    if check:
        V.check_physical()
    k, o = 2 * mode, 2 * (1 - mode)
    v = V.entries
    L = v[k : k + 2, k : k + 2]
    Lo = v[o : o + 2, o : o + 2]
    C = v[k : k + 2, o : o + 2]
    eye = np.eye(2)
    h = 1 / math.sqrt(2)
    out = np.zeros((6, 6))
    blocks = {
        (k, k): (L + eye) / 2,
        (k, o): h * C,
        (k, 4): (eye - L) / 2,
        (o, o): Lo,
        (o, 4): -h * C.T,
        (4, 4): (L + eye) / 2,
    }
    for (i, j), b in blocks.items():
        out[i : i + 2, j : j + 2] = b
        out[j : j + 2, i : i + 2] = b.T
    mean = None
    if V.mean is not None:
        mean = np.zeros(6)
        mean[o : o + 2] = V.mean[o : o + 2]
        mean[k : k + 2] = h * V.mean[k : k + 2]
        mean[4:6] = -h * V.mean[k : k + 2]
    return QuadratureMatrix(out, mean)


ChiSpec = Union[None, float, Sequence[float]]


@dataclass(frozen=True)
class HomodyneSetting:
    """Local-oscillator phases, one entry per mode of the measured register.

    ``None`` leaves a mode unmeasured. ``tapped_mode`` routes that mode of a
    two-mode state through the 50:50 tap first; the phases then refer to the
    three-mode register (original modes, then the tap output as mode 2).
    """

    chi_per_mode: tuple
    tapped_mode: Optional[int] = None

    def __post_init__(self):
        chis = []
        for k, chi in enumerate(self.chi_per_mode):
            if chi is not None and not isinstance(chi, (int, float, np.floating, np.integer)):
                phases = [float(c) for c in chi]
                if any(not _commute(phases[0], c) for c in phases[1:]):
                    raise NonCommutingMeasurement(
                        f"mode {k}: phases {phases} do not commute; route the mode through the tap"
                    )
                chi = phases[0]
            if chi is not None:
                chi = float(chi)
                if not math.isfinite(chi):
                    raise ValueError(f"mode {k}: phase must be finite")
            chis.append(chi)
        object.__setattr__(self, "chi_per_mode", tuple(chis))
        if self.tapped_mode is not None and self.tapped_mode not in (0, 1):
            raise ValueError(f"tapped_mode must be 0 or 1, got {self.tapped_mode!r}")
        if all(c is None for c in chis):
            raise ValueError("setting measures no mode")

    @property
    def measured_modes(self) -> list[int]:
        return [k for k, c in enumerate(self.chi_per_mode) if c is not None]

    def to_dict(self) -> dict:
        return {"chi_per_mode": list(self.chi_per_mode), "tapped_mode": self.tapped_mode}


def _commute(a: float, b: float) -> bool:
    # x(a) and x(b) of one mode commute iff sin(a - b) = 0
    return abs(math.sin(a - b)) < 1e-12


@dataclass(frozen=True, eq=False)
class SampleBatch:
    settings: HomodyneSetting
    outcomes: np.ndarray
    seed: int
    shots: int
    eta: float = 1.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["shot"] + [f"mode{k}" for k in self.settings.measured_modes])
        for i, row in enumerate(self.outcomes):
            w.writerow([i] + [format(float(x), ".17g") for x in row])
        return buf.getvalue()

    def sidecar(self) -> dict:
        return {
            "seed": self.seed,
            "setting": self.settings.to_dict(),
            "eta": self.eta,
            "shots": self.shots,
        }


def _measured_state(V: QuadratureMatrix, setting: HomodyneSetting) -> QuadratureMatrix:
    if setting.tapped_mode is not None:
        V = tap_beam_splitter_extend(V, setting.tapped_mode, check=False)
    if len(setting.chi_per_mode) != V.n_modes:
        raise ValueError(
            f"setting has {len(setting.chi_per_mode)} phases but register has {V.n_modes} modes"
        )
    return V


def sample_homodyne(V: QuadratureMatrix, setting: HomodyneSetting, shots: int, seed: int,
                    eta: float = 1.0) -> SampleBatch:
    """Draw joint homodyne outcomes for one setting.

    The efficiency channel is applied to the measured register (after any tap)
    before sampling.
    """
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    V.check_physical()
    W = efficiency_channel(_measured_state(V, setting), EfficiencyModel(eta))
    modes = setting.measured_modes
    M = np.zeros((len(modes), 2 * W.n_modes))
    for row, k in enumerate(modes):
        chi = setting.chi_per_mode[k]
        M[row, 2 * k] = math.cos(chi)
        M[row, 2 * k + 1] = math.sin(chi)
    cov = M @ (W.entries / 2) @ M.T
    mean = M @ W.mean_or_zero()
    rng = np.random.default_rng(seed)
    x = rng.multivariate_normal(mean, cov, size=shots, method="cholesky")
    return SampleBatch(setting, x, int(seed), int(shots), float(eta))


# Each entry: setting, then (i, j, column_a, column_b, scale) with V_ij = scale * cov(a, b)
_HALF_PI = math.pi / 2
SCHEDULE = [
    (HomodyneSetting((0.0, 0.0)), [(0, 0, 0, 0, 2), (2, 2, 1, 1, 2), (0, 2, 0, 1, 2)]),
    (HomodyneSetting((_HALF_PI, _HALF_PI)), [(1, 1, 0, 0, 2), (3, 3, 1, 1, 2), (1, 3, 0, 1, 2)]),
    (HomodyneSetting((0.0, _HALF_PI)), [(0, 3, 0, 1, 2)]),
    (HomodyneSetting((_HALF_PI, 0.0)), [(1, 2, 0, 1, 2)]),
    (HomodyneSetting((0.0, None, _HALF_PI), tapped_mode=0), [(0, 1, 0, 1, -4)]),
    (HomodyneSetting((None, 0.0, _HALF_PI), tapped_mode=1), [(2, 3, 0, 1, -4)]),
]


@dataclass(frozen=True, eq=False)
class Reconstruction:
    """Estimated quadrature matrix of the detected state (``eta V + (1 - eta) 1``)."""

    V_hat: np.ndarray
    se: np.ndarray
    eta: float
    shots_per_setting: int
    seed: int
    batch_seeds: tuple = field(default_factory=tuple)

    def corrected(self) -> tuple[np.ndarray, np.ndarray]:
        """Undo the known efficiency channel: ``(V_hat - (1 - eta) 1) / eta``."""
        if self.eta == 0:
            raise ValueError("cannot invert the channel at eta = 0")
        return (self.V_hat - (1 - self.eta) * np.eye(4)) / self.eta, self.se / self.eta


def reconstruct_quadrature_matrix(V_true: QuadratureMatrix, shots_per_setting: int,
                                  m: EfficiencyModel | float = 1.0, seed: int = 0) -> Reconstruction:
    """Run the six-setting joint-homodyne schedule and estimate all ten elements.

    Local off-diagonal elements come from the tap settings via
    ``<q' p_tap> = -V_offdiag / 4``. Settings draw from independent streams
    spawned from ``seed``.
    """
    if not isinstance(m, EfficiencyModel):
        m = EfficiencyModel(float(m))
    if shots_per_setting < MIN_SHOTS:
        raise ValueError(f"shots_per_setting must be >= {MIN_SHOTS}, got {shots_per_setting}")
    if V_true.n_modes != 2:
        raise ValueError("reconstruction expects a two-mode state")
    V_true.check_physical()
    children = np.random.SeedSequence(seed).spawn(len(SCHEDULE))
    V_hat = np.zeros((4, 4))
    se = np.zeros((4, 4))
    seeds = []
    for (setting, targets), child in zip(SCHEDULE, children):
        s = int(child.generate_state(1, np.uint64)[0])
        seeds.append(s)
        x = sample_homodyne(V_true, setting, shots_per_setting, s, m.eta).outcomes
        x = x - x.mean(axis=0)
        for i, j, a, b, scale in targets:
            prod = x[:, a] * x[:, b]
            V_hat[i, j] = V_hat[j, i] = scale * prod.mean()
            se[i, j] = se[j, i] = abs(scale) * prod.std(ddof=1) / math.sqrt(len(prod))
    return Reconstruction(V_hat, se, m.eta, int(shots_per_setting), int(seed), tuple(seeds))


_INDEPENDENT = [(i, j) for i in range(4) for j in range(i, 4)]


def propagated_se(func, V: np.ndarray, se: np.ndarray, h: float = 1e-6) -> float:
    """First-order standard error of ``func(V)`` from independent element errors."""
    total = 0.0
    for i, j in _INDEPENDENT:
        if se[i, j] == 0:
            continue
        dv = np.zeros_like(V)
        dv[i, j] = dv[j, i] = h
        grad = (func(V + dv) - func(V - dv)) / (2 * h)
        total += (grad * se[i, j]) ** 2
    return math.sqrt(total)


def _min_pt_eigenvalue(v: np.ndarray) -> float:
    return float(min(symplectic_eigenvalues(partial_transpose(QuadratureMatrix(v), 1))))


def _delta_product(v: np.ndarray) -> float:
    d1 = (v[0, 0] + v[2, 2]) / 2 - abs(v[0, 2])
    d2 = (v[1, 1] + v[3, 3]) / 2 - abs(v[1, 3])
    return d1 * d2


def _rd_margin(v: np.ndarray) -> float:
    n1 = (v[0, 0] + v[2, 2]) / 2
    n2 = (v[1, 1] + v[3, 3]) / 2
    c1, c2 = abs(v[0, 2]), abs(v[1, 3])
    return n1 * n2 / ((n1 + c1) * (n2 + c2)) - (n1 - c1) * (n2 - c2)


def reconstruction_verdicts(rec: Reconstruction, n_sigma: float = 3.0) -> list[Verdict]:
    """Verdicts on the raw estimate with a boundary band of ``n_sigma`` witness standard errors.

    The reported state is what the detectors see; the PPT test is always run and
    the diagonal-form tests are added when the estimate matches that pattern within
    ``4 * max(se)``.
    """
    v = 0.5 * (rec.V_hat + rec.V_hat.T)
    out = []
    band = max(n_sigma * propagated_se(_min_pt_eigenvalue, v, rec.se), PHYSICAL_TOL)
    out.append(make_verdict("simon_ppt", _min_pt_eigenvalue(v), 1.0, band))
    try:
        f = to_standard_v0(QuadratureMatrix(v), tol=4 * float(np.max(rec.se)))
    except PatternMismatch:
        return out
    band = max(n_sigma * propagated_se(_delta_product, v, rec.se), PHYSICAL_TOL)
    out.append(make_verdict("lemma1", f.delta1 * f.delta2, 1.0, band))
    band = max(n_sigma * propagated_se(_rd_margin, v, rec.se), PHYSICAL_TOL)
    out.append(reid_drummond_epr(f, tol=band, check=False))
    return out


def reconstruction_report(rec: Reconstruction, verdicts: list[Verdict] | None = None) -> dict:
    if verdicts is None:
        verdicts = reconstruction_verdicts(rec)
    return {
        "V_hat": rec.V_hat.tolist(),
        "SE": rec.se.tolist(),
        "eta": rec.eta,
        "shots_per_setting": rec.shots_per_setting,
        "seed": rec.seed,
        "verdicts": [v.to_dict() for v in verdicts],
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
