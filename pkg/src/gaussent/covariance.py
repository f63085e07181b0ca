r"""Quadrature matrices of Gaussian states and the symplectic operations acting on them.

Conventions used throughout the package:

* quadratures are interleaved per mode, ``x = (q1, p1, q2, p2, ...)``;
* the quadrature matrix is ``V_ij = <dx_i dx_j + dx_j dx_i>`` so that the
  vacuum is exactly the identity (true quadrature covariance is ``V / 2``);
* a :class:`SymplecticTransform` ``S`` maps quadratures as ``x -> S x``, hence
  the quadrature matrix as ``V -> S V S^T``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

MAX_MODES = 3

SYMMETRY_TOL = 1e-12
SYMPLECTIC_TOL = 1e-12
PHYSICAL_TOL = 1e-9
PATTERN_TOL = 1e-6


class GaussentError(Exception):
    """Base class for all errors raised by this package."""


class UnphysicalStateError(GaussentError, ValueError):
    """The quadrature matrix violates the uncertainty principle."""


class PatternMismatch(GaussentError, ValueError):
    """The matrix does not have the diagonal-block standard form."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form for the interleaved ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class BlockDecomposition:
    """Two-mode matrix split into local blocks ``L1``, ``L2`` and correlation ``C``."""

    L1: np.ndarray
    L2: np.ndarray
    C: np.ndarray

    def assemble(self) -> np.ndarray:
        return np.block([[self.L1, self.C], [self.C.T, self.L2]])


@dataclass(frozen=True, eq=False)
class QuadratureMatrix:
    """Immutable quadrature matrix of an ``N``-mode Gaussian state (``1 <= N <= 3``).

    Args:
        entries: real symmetric ``2N x 2N`` array.
        mean: optional mean vector of length ``2N``; only the sampler uses it.
    """

    entries: np.ndarray
    mean: np.ndarray | None = None

    def __post_init__(self):
        v = np.array(self.entries, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
            raise ValueError(f"quadrature matrix must be 2N x 2N, got shape {v.shape}")
        n = v.shape[0] // 2
        if not 1 <= n <= MAX_MODES:
            raise ValueError(f"supported mode counts are 1..{MAX_MODES}, got {n}")
        if not np.all(np.isfinite(v)):
            raise ValueError("quadrature matrix has non-finite entries")
        if np.max(np.abs(v - v.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(v))):
            raise ValueError("quadrature matrix is not symmetric")
        object.__setattr__(self, "entries", _frozen(v))
        if self.mean is not None:
            m = np.asarray(self.mean, dtype=float).ravel()
            if m.shape != (2 * n,):
                raise ValueError(f"mean must have length {2 * n}")
            object.__setattr__(self, "mean", _frozen(m))

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0] // 2

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, QuadratureMatrix):
            return NotImplemented
        same_mean = (self.mean is None and other.mean is None) or (
            self.mean is not None
            and other.mean is not None
            and np.array_equal(self.mean, other.mean)
        )
        return np.array_equal(self.entries, other.entries) and same_mean

    def __hash__(self):
        return hash(self.entries.tobytes())

    def mean_or_zero(self) -> np.ndarray:
        if self.mean is None:
            return np.zeros(2 * self.n_modes)
        return np.array(self.mean)

    def blocks(self) -> BlockDecomposition:
        if self.n_modes != 2:
            raise ValueError("block decomposition is defined for two modes")
        v = self.entries
        return BlockDecomposition(v[:2, :2].copy(), v[2:, 2:].copy(), v[:2, 2:].copy())

    def marginal(self, modes: Sequence[int]) -> "QuadratureMatrix":
        """Reduced state of the listed modes (partial trace)."""
        idx = _mode_indices(modes, self.n_modes)
        mean = None if self.mean is None else self.mean[idx]
        return QuadratureMatrix(self.entries[np.ix_(idx, idx)], mean)

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        if np.min(np.linalg.eigvalsh(self.entries)) <= 0:
            return False
        return bool(min(symplectic_eigenvalues(self)) >= 1 - tol)

    def check_physical(self, tol: float = PHYSICAL_TOL) -> "QuadratureMatrix":
        if not self.is_physical(tol):
            nu = float(min(symplectic_eigenvalues(self))) if np.all(
                np.linalg.eigvalsh(self.entries) > 0
            ) else float("nan")
            raise UnphysicalStateError(
                f"state violates the uncertainty principle (min symplectic eigenvalue {nu!r})"
            )
        return self

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "n_modes": self.n_modes,
            "entries": [float(x) for x in self.entries.ravel()],
        }
        if self.mean is not None:
            d["mean"] = [float(x) for x in self.mean]
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "QuadratureMatrix":
        unknown = set(d) - {"n_modes", "entries", "mean"}
        if unknown:
            raise ValueError(f"unknown keys in matrix record: {sorted(unknown)}")
        n = int(d["n_modes"])
        entries = np.asarray(d["entries"], dtype=float)
        if entries.size != 4 * n * n:
            raise ValueError(f"expected {4 * n * n} entries for {n} modes, got {entries.size}")
        return cls(entries.reshape(2 * n, 2 * n), d.get("mean"))

    def to_json(self) -> str:
        # repr-based float output from json round-trips binary64 exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "QuadratureMatrix":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class SymplecticTransform:
    """Real ``2N x 2N`` symplectic matrix with a record of the primitive it came from."""

    matrix: np.ndarray
    descriptor: str = "custom"
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        s = np.array(self.matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError(f"symplectic matrix must be 2N x 2N, got shape {s.shape}")
        omega = symplectic_form(s.shape[0] // 2)
        err = np.max(np.abs(s @ omega @ s.T - omega))
        if err > SYMPLECTIC_TOL * max(1.0, np.max(np.abs(s)) ** 2):
            raise ValueError(f"matrix is not symplectic (residual {err:.3e})")
        object.__setattr__(self, "matrix", _frozen(s))
        object.__setattr__(self, "params", dict(self.params))

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def __array__(self, dtype=None, copy=None):
        return np.array(self.matrix, dtype=dtype)

    def __matmul__(self, other: "SymplecticTransform") -> "SymplecticTransform":
        if not isinstance(other, SymplecticTransform):
            return NotImplemented
        return SymplecticTransform(
            self.matrix @ other.matrix, f"({self.descriptor})@({other.descriptor})"
        )

    def inverse(self) -> "SymplecticTransform":
        # S^-1 = -Omega S^T Omega for symplectic S
        omega = symplectic_form(self.n_modes)
        return SymplecticTransform(-omega @ self.matrix.T @ omega, f"inv({self.descriptor})")

    def direct_sum(self, other: "SymplecticTransform") -> "SymplecticTransform":
        n = self.matrix.shape[0]
        m = other.matrix.shape[0]
        out = np.zeros((n + m, n + m))
        out[:n, :n] = self.matrix
        out[n:, n:] = other.matrix
        return SymplecticTransform(out, f"{self.descriptor}+{other.descriptor}")

    def embed(self, modes: Sequence[int], n_modes: int) -> "SymplecticTransform":
        """Act on ``modes`` (in the given order) of an ``n_modes`` register."""
        if len(modes) != self.n_modes:
            raise ValueError(f"transform acts on {self.n_modes} modes, got {len(modes)} indices")
        idx = _mode_indices(modes, n_modes)
        out = np.eye(2 * n_modes)
        out[np.ix_(idx, idx)] = self.matrix
        return SymplecticTransform(out, self.descriptor, self.params)


def _mode_indices(modes: Iterable[int], n_modes: int) -> list[int]:
    modes = list(modes)
    if len(set(modes)) != len(modes):
        raise ValueError(f"repeated mode index in {modes}")
    for k in modes:
        if not 0 <= k < n_modes:
            raise ValueError(f"mode index {k} out of range for {n_modes} modes")
    return [i for k in modes for i in (2 * k, 2 * k + 1)]


def vacuum(n_modes: int) -> QuadratureMatrix:
    if not isinstance(n_modes, (int, np.integer)) or not 1 <= n_modes <= MAX_MODES:
        raise ValueError(f"n_modes must be an integer in 1..{MAX_MODES}, got {n_modes!r}")
    return QuadratureMatrix(np.eye(2 * n_modes))


def thermal(n_tilde: float) -> QuadratureMatrix:
    """Single-mode thermal state, ``n_tilde = 2*nbar + 1``."""
    if not n_tilde >= 1:
        raise UnphysicalStateError(f"thermal parameter n_tilde must be >= 1, got {n_tilde!r}")
    return QuadratureMatrix(n_tilde * np.eye(2))


def squeezer(s: float, phi: float = 0.0) -> SymplecticTransform:
    """Single-mode squeezer; ``phi = 0`` scales ``q`` by ``exp(-s)`` and ``p`` by ``exp(s)``."""
    ch, sh = math.cosh(s), math.sinh(s)
    c, sn = math.cos(phi), math.sin(phi)
    m = np.array([[ch - sh * c, -sh * sn], [-sh * sn, ch + sh * c]])
    return SymplecticTransform(m, "squeezer", {"s": s, "phi": phi})


def rotation(phi: float) -> SymplecticTransform:
    """Phase-space rotation by ``phi / 2`` generated by ``exp(i phi a^dag a / 2)``."""
    c, sn = math.cos(phi / 2), math.sin(phi / 2)
    return SymplecticTransform(np.array([[c, -sn], [sn, c]]), "rotation", {"phi": phi})


def beam_splitter(theta: float, phi: float = 0.0) -> SymplecticTransform:
    """Two-mode beam splitter with ``t = cos(theta/2)``, ``r = sin(theta/2)``.

    Output modes follow ``c1 = t a1 - r e^{i phi} a2`` and
    ``c2 = t a2 + r e^{-i phi} a1``. The 50:50 splitter is ``theta = pi/2``.
    """
    t, r = math.cos(theta / 2), math.sin(theta / 2)
    c, sn = math.cos(phi), math.sin(phi)
    rot = np.array([[c, -sn], [sn, c]])
    m = np.block([[t * np.eye(2), -r * rot], [r * rot.T, t * np.eye(2)]])
    return SymplecticTransform(m, "beam_splitter", {"theta": theta, "phi": phi})


def two_mode_squeezer(s: float) -> SymplecticTransform:
    """Two-mode squeezer; on vacuum gives ``<q1 q2>`` correlation ``-sinh 2s`` and ``<p1 p2>`` ``+sinh 2s``."""
    ch, sh = math.cosh(s), math.sinh(s)
    z = np.diag([1.0, -1.0])
    m = np.block([[ch * np.eye(2), -sh * z], [-sh * z, ch * np.eye(2)]])
    return SymplecticTransform(m, "two_mode_squeezer", {"s": s})


def apply(
    S: SymplecticTransform | np.ndarray,
    V: QuadratureMatrix,
    modes: Sequence[int] | None = None,
) -> QuadratureMatrix:
    """Return ``S V S^T``; with ``modes`` the transform is embedded at those indices first."""
    if not isinstance(S, SymplecticTransform):
        S = SymplecticTransform(np.asarray(S))
    if modes is not None:
        S = S.embed(modes, V.n_modes)
    if S.n_modes != V.n_modes:
        raise ValueError(
            f"transform acts on {S.n_modes} modes but state has {V.n_modes}; pass modes="
        )
    s = S.matrix
    out = s @ V.entries @ s.T
    out = 0.5 * (out + out.T)
    mean = None if V.mean is None else s @ V.mean
    return QuadratureMatrix(out, mean)


def tensor(*states: QuadratureMatrix) -> QuadratureMatrix:
    """Direct sum of independent states, in order."""
    total = sum(v.n_modes for v in states)
    if total > MAX_MODES:
        raise ValueError(f"combined state would have {total} modes (max {MAX_MODES})")
    out = np.zeros((2 * total, 2 * total))
    k = 0
    for v in states:
        d = 2 * v.n_modes
        out[k : k + d, k : k + d] = v.entries
        k += d
    if all(v.mean is None for v in states):
        mean = None
    else:
        mean = np.concatenate([v.mean_or_zero() for v in states])
    return QuadratureMatrix(out, mean)


def symplectic_eigenvalues(V: QuadratureMatrix | np.ndarray, return_residual: bool = False):
    """Symplectic eigenvalues in descending order.

    The spectrum of ``Omega V`` is ``{+i nu_k, -i nu_k}``; magnitudes are sorted and
    averaged in pairs. With ``return_residual`` the largest within-pair spread is
    also returned as a conditioning indicator.
    """
    v = np.asarray(V, dtype=float)
    if np.max(np.abs(v - v.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(v))):
        raise ValueError("symplectic eigenvalues require a symmetric matrix")
    n = v.shape[0] // 2
    mags = np.sort(np.abs(np.linalg.eigvals(symplectic_form(n) @ v)))[::-1]
    pairs = mags.reshape(n, 2)
    nu = pairs.mean(axis=1)
    if return_residual:
        return nu, float(np.max(pairs[:, 0] - pairs[:, 1]))
    return nu


def partial_transpose(V: QuadratureMatrix, mode: int = 1) -> QuadratureMatrix:
    """Mirror ``p`` of ``mode`` (time reversal), the phase-space partial transpose."""
    d = np.ones(2 * V.n_modes)
    d[2 * mode + 1] = -1.0
    return QuadratureMatrix(d[:, None] * V.entries * d[None, :])


@dataclass(frozen=True)
class StandardFormV0:
    """Two-mode matrix with equal local blocks ``diag(n1, n2)`` and correlation ``diag(c1, c2)``.

    ``n1`` is the ``q`` variance of each mode and ``n2`` the ``p`` variance;
    ``c1`` is the ``q1 q2`` and ``c2`` the ``p1 p2`` element.
    """

    n1: float
    n2: float
    c1: float
    c2: float

    def __post_init__(self):
        for name in ("n1", "n2", "c1", "c2"):
            x = float(getattr(self, name))
            if not math.isfinite(x):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, x)
        if self.n1 <= 0 or self.n2 <= 0:
            raise UnphysicalStateError(
                f"local variances must be positive, got n1={self.n1!r}, n2={self.n2!r}"
            )

    @property
    def delta1(self) -> float:
        return self.n1 - abs(self.c1)

    @property
    def delta2(self) -> float:
        return self.n2 - abs(self.c2)

    def matrix(self) -> QuadratureMatrix:
        n1, n2, c1, c2 = self.n1, self.n2, self.c1, self.c2
        return QuadratureMatrix(
            np.array(
                [
                    [n1, 0, c1, 0],
                    [0, n2, 0, c2],
                    [c1, 0, n1, 0],
                    [0, c2, 0, n2],
                ]
            )
        )

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        return self.matrix().is_physical(tol)

    def check_physical(self, tol: float = PHYSICAL_TOL) -> "StandardFormV0":
        self.matrix().check_physical(tol)
        return self


@dataclass(frozen=True)
class StandardFormV1:
    """Symmetric standard form reached from :class:`StandardFormV0` by local squeezing.

    ``local_squeeze`` is the squeezer parameter applied to both modes to get here.
    """

    n: float
    c: float
    c_prime: float
    local_squeeze: float = 0.0

    @property
    def c_a(self) -> float:
        return (abs(self.c) + abs(self.c_prime)) / 2

    @property
    def c_d(self) -> float:
        return (abs(self.c) - abs(self.c_prime)) / 2

    def matrix(self) -> QuadratureMatrix:
        return StandardFormV0(self.n, self.n, self.c, self.c_prime).matrix()


def to_standard_v0(V: QuadratureMatrix, tol: float = PATTERN_TOL) -> StandardFormV0:
    """Read ``(n1, n2, c1, c2)`` off a two-mode matrix already in the diagonal-block form.

    Raises:
        PatternMismatch: if any element outside the pattern exceeds ``tol`` or the
            local blocks differ by more than ``tol``.
    """
    if V.n_modes != 2:
        raise PatternMismatch("standard form V0 is defined for two modes")
    v = V.entries
    off = {"V12": v[0, 1], "V14": v[0, 3], "V23": v[1, 2], "V34": v[2, 3]}
    bad = {k: x for k, x in off.items() if abs(x) > tol}
    if bad:
        raise PatternMismatch(f"off-pattern elements exceed tol={tol}: {bad}")
    if abs(v[0, 0] - v[2, 2]) > tol or abs(v[1, 1] - v[3, 3]) > tol:
        raise PatternMismatch(
            f"local blocks differ: diag(L1)=({v[0, 0]}, {v[1, 1]}), diag(L2)=({v[2, 2]}, {v[3, 3]})"
        )
    return StandardFormV0(
        (v[0, 0] + v[2, 2]) / 2, (v[1, 1] + v[3, 3]) / 2, v[0, 2], v[1, 3]
    )


def reduce_v0_to_v1(f: StandardFormV0) -> StandardFormV1:
    """Equalize ``q`` and ``p`` variances by the same local squeeze on both modes."""
    if f.n1 <= 0 or f.n2 <= 0:
        raise UnphysicalStateError("local variances must be positive")
    r = 0.25 * math.log(f.n1 / f.n2)
    return StandardFormV1(
        n=math.sqrt(f.n1 * f.n2),
        c=f.c1 * math.sqrt(f.n2 / f.n1),
        c_prime=f.c2 * math.sqrt(f.n1 / f.n2),
        local_squeeze=r,
    )


def local_squeeze_transform(r: float) -> SymplecticTransform:
    """``squeezer(r) (+) squeezer(r)``, the local operation behind :func:`reduce_v0_to_v1`."""
    return squeezer(r).direct_sum(squeezer(r))
