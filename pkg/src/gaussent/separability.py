"""Entanglement, EPR and purity tests on two-mode quadrature matrices."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .covariance import (
    PHYSICAL_TOL,
    GaussentError,
    QuadratureMatrix,
    StandardFormV0,
    StandardFormV1,
    partial_transpose,
    symplectic_eigenvalues,
)

# (label when the flag is set, label otherwise)
LABELS = {
    "lemma1": ("entangled", "separable"),
    "simon_v1": ("entangled", "separable"),
    "simon_v1_factored": ("entangled", "separable"),
    "simon_ppt": ("entangled", "separable"),
    "quadrature_correlation": ("entangled", "separable"),
    "detected_entanglement": ("entangled", "separable"),
    "entangler_closed_form": ("entangled", "separable"),
    "reid_drummond": ("violated", "not_violated"),
    "purity_inequality": ("violated", "satisfied"),
}


@dataclass(frozen=True)
class Verdict:
    """Outcome of one inequality test ``lhs >= rhs``.

    ``entangled_or_violated`` is set when ``lhs < rhs - tol``; ``margin = rhs - lhs``.
    Within ``|margin| < tol`` the flag stays clear and ``boundary_flag`` is set.
    """

    test_name: str
    entangled_or_violated: bool
    witness_lhs: float
    witness_rhs: float
    margin: float
    boundary_flag: bool

    @property
    def label(self) -> str:
        yes, no = LABELS.get(self.test_name, ("violated", "satisfied"))
        return yes if self.entangled_or_violated else no

    def to_dict(self) -> dict:
        return {
            "test": self.test_name,
            "verdict": self.label,
            "lhs": self.witness_lhs,
            "rhs": self.witness_rhs,
            "margin": self.margin,
            "boundary": self.boundary_flag,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        name = d["test"]
        yes, no = LABELS.get(name, ("violated", "satisfied"))
        if d["verdict"] not in (yes, no):
            raise ValueError(f"verdict {d['verdict']!r} is not valid for test {name!r}")
        return cls(
            name,
            d["verdict"] == yes,
            float(d["lhs"]),
            float(d["rhs"]),
            float(d["margin"]),
            bool(d["boundary"]),
        )


def make_verdict(name: str, lhs: float, rhs: float, tol: float = PHYSICAL_TOL) -> Verdict:
    margin = rhs - lhs
    return Verdict(name, margin >= tol, float(lhs), float(rhs), float(margin), abs(margin) < tol)


class InconsistentCriteria(GaussentError, RuntimeError):
    """Two algebraically equivalent forms of a criterion disagreed."""


def lemma1_separability(f: StandardFormV0, tol: float = PHYSICAL_TOL, check: bool = True) -> Verdict:
    """Separable iff ``delta1 * delta2 >= 1``."""
    if check:
        f.check_physical()
    return make_verdict("lemma1", f.delta1 * f.delta2, 1.0, tol)


def simon_v1_inequality(f: StandardFormV1, tol: float = PHYSICAL_TOL) -> Verdict:
    """Simon's inequality on the symmetric form, cross-checked against its factorization."""
    n, c, cp = f.n, f.c, f.c_prime
    lhs = (n * n - c * c) * (n * n - cp * cp)
    rhs = 2 * n * n + 2 * abs(c * cp) - 1
    v = make_verdict("simon_v1", lhs, rhs, tol)
    fac = simon_v1_factored(f, tol)
    if not (v.boundary_flag or fac.boundary_flag) and v.entangled_or_violated != fac.entangled_or_violated:
        raise InconsistentCriteria(
            f"expanded ({lhs!r} vs {rhs!r}) and factored ({fac.witness_lhs!r}) forms disagree"
        )
    return v


def simon_v1_factored(f: StandardFormV1, tol: float = PHYSICAL_TOL) -> Verdict:
    """``[(n - c_a)^2 - (1 + c_d^2)] [(n + c_a)^2 - (1 + c_d^2)] >= 0``."""
    n, ca, cd = f.n, f.c_a, f.c_d
    lhs = ((n - ca) ** 2 - (1 + cd * cd)) * ((n + ca) ** 2 - (1 + cd * cd))
    return make_verdict("simon_v1_factored", lhs, 0.0, tol)


def simon_general_ppt(V: QuadratureMatrix, tol: float = PHYSICAL_TOL, check: bool = True) -> Verdict:
    """PPT test for any two-mode state: separable iff the partial transpose is physical.

    The witness is the smallest symplectic eigenvalue of the partially transposed matrix.
    """
    if V.n_modes != 2:
        raise ValueError("the PPT test here is for two-mode states")
    if check:
        V.check_physical()
    nu_min = float(min(symplectic_eigenvalues(partial_transpose(V, 1))))
    return make_verdict("simon_ppt", nu_min, 1.0, tol)


def _moments(f: StandardFormV0) -> dict[str, float]:
    # true second moments are half of the quadrature matrix elements
    return {
        "q1q1": f.n1 / 2, "q2q2": f.n1 / 2, "q1q2": f.c1 / 2,
        "p1p1": f.n2 / 2, "p2p2": f.n2 / 2, "p1p2": f.c2 / 2,
    }


def _correlation_product(m: dict[str, float]) -> float:
    return (m["q1q1"] + m["q2q2"] - 2 * abs(m["q1q2"])) * (
        m["p1p1"] + m["p2p2"] - 2 * abs(m["p1p2"])
    )


_VACUUM = StandardFormV0(1.0, 1.0, 0.0, 0.0)


def quadrature_correlation_form(f: StandardFormV0, tol: float = PHYSICAL_TOL, check: bool = True) -> Verdict:
    """Compare the quadrature correlation product of the state with that of the vacuum."""
    if check:
        f.check_physical()
    lhs = _correlation_product(_moments(f))
    rhs = _correlation_product(_moments(_VACUUM))
    return make_verdict("quadrature_correlation", lhs, rhs, tol)


def reid_drummond_epr(f: StandardFormV0, tol: float = PHYSICAL_TOL, check: bool = True) -> Verdict:
    """EPR inference-variance bound; violated when ``d1 d2 < n1 n2 / ((n1+|c1|)(n2+|c2|))``."""
    if check:
        f.check_physical()
    lhs = f.delta1 * f.delta2
    rhs = f.n1 * f.n2 / ((f.n1 + abs(f.c1)) * (f.n2 + abs(f.c2)))
    return make_verdict("reid_drummond", lhs, rhs, tol)


def purity(V: QuadratureMatrix, check: bool = True) -> float:
    """Tr(rho^2) of a Gaussian state, ``1 / sqrt(det V)``."""
    if check:
        V.check_physical()
    return 1.0 / math.sqrt(float(np.linalg.det(V.entries)))


def _purity_product(m: dict[str, float]) -> float:
    return (m["q1q1"] ** 2 - m["q1q2"] ** 2) * (m["p1p1"] ** 2 - m["p1p2"] ** 2)


def purity_inequality(f: StandardFormV0, tol: float = PHYSICAL_TOL, check: bool = True) -> Verdict:
    """``P <= 1`` written in quadrature moments; ``boundary_flag`` marks a pure state.

    Both sides carry the moment scale (vacuum side is 1/16), so ``tol`` is applied
    relative to the vacuum value.
    """
    if check:
        f.check_physical()
    lhs = _purity_product(_moments(f))
    rhs = _purity_product(_moments(_VACUUM))
    return make_verdict("purity_inequality", lhs, rhs, tol * rhs)
