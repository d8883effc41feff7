"""Two-mode Gaussian states in shot-noise units.

Quadratures are ordered ``(x1, y1, x2, y2)`` with ``[x, y] = 2i`` so the
vacuum covariance matrix is the identity. Mode 1 is the signal (852 nm) and
mode 2 the idler (1064 nm) by convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SYMMETRY_RTOL = 1e-12
PHYSICAL_ATOL = 1e-9
# measured matrices with a symplectic eigenvalue in [1 - 1e-3, 1) are only flagged
NEARLY_PHYSICAL_ATOL = 1e-3

QUADRATURES = {"x1": 0, "y1": 1, "x2": 2, "y2": 3}

_OMEGA = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)


class InvalidArgumentError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


class DivisionGuardError(ZeroDivisionError):
    pass


class UnphysicalCorrectionError(ValueError):
    pass


def _index(q) -> int:
    if isinstance(q, str):
        try:
            return QUADRATURES[q]
        except KeyError:
            raise InvalidArgumentError(f"unknown quadrature {q!r}") from None
    q = int(q)
    if not 0 <= q < 4:
        raise InvalidArgumentError(f"quadrature index {q} out of range")
    return q


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric 4x4 second-moment matrix of ``(x1, y1, x2, y2)``."""

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.shape != (4, 4):
            raise InvalidArgumentError(f"expected a 4x4 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidArgumentError("covariance matrix has non-finite entries")
        scale = max(np.max(np.abs(m)), 1.0)
        if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
            raise InvalidArgumentError("covariance matrix is not symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @classmethod
    def vacuum(cls) -> "CovarianceMatrix":
        return cls(np.eye(4))

    def variance(self, q) -> float:
        i = _index(q)
        return float(self.entries[i, i])

    def covariance(self, q1, q2) -> float:
        return float(self.entries[_index(q1), _index(q2)])

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.entries))

    def symplectic_eigenvalues(self) -> np.ndarray:
        """The two symplectic eigenvalues, ascending (vacuum gives 1, 1)."""
        ev = np.abs(np.linalg.eigvals(1j * _OMEGA @ self.entries))
        # eigenvalues come in +/- pairs
        return np.sort(ev)[::2]

    def is_positive_definite(self) -> bool:
        return bool(np.all(np.linalg.eigvalsh(self.entries) > 0))

    def is_physical(self, atol: float = PHYSICAL_ATOL) -> bool:
        return self.is_positive_definite() and bool(
            np.min(self.symplectic_eigenvalues()) >= 1.0 - atol
        )

    def physicality(self) -> str:
        """``"physical"``, ``"marginal"`` (finite-statistics violation) or ``"unphysical"``."""
        if self.is_physical():
            return "physical"
        if self.is_physical(NEARLY_PHYSICAL_ATOL):
            return "marginal"
        return "unphysical"

    def combination_variance(self, coeffs) -> float:
        """Variance of ``sum(c_k q_k)`` for a coefficient vector over (x1, y1, x2, y2)."""
        c = np.asarray(coeffs, dtype=float)
        return float(c @ self.entries @ c)


@dataclass(frozen=True)
class QuadratureAngles:
    theta1: float = 0.0
    theta2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta1", float(self.theta1) % (2 * math.pi))
        object.__setattr__(self, "theta2", float(self.theta2) % (2 * math.pi))


@dataclass(frozen=True)
class TwoModeVariances:
    """Variances of X- = (x1-x2)/sqrt2, X+ = (x1+x2)/sqrt2 and likewise Y-, Y+.

    Fields may also be equal-length arrays (one entry per frequency bin).
    """

    vXminus: float
    vXplus: float
    vYminus: float
    vYplus: float

    def __post_init__(self):
        for name in ("vXminus", "vXplus", "vYminus", "vYplus"):
            v = getattr(self, name)
            if not np.all(np.asarray(v) > 0):
                raise InvalidArgumentError(f"{name} must be positive, got {v}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.vXminus, self.vXplus, self.vYminus, self.vYplus)

    def is_physical(self) -> bool:
        return bool(
            np.all(self.vXminus * self.vXplus >= 1.0) and np.all(self.vYminus * self.vYplus >= 1.0)
        )

    @classmethod
    def from_db(cls, xm, xp, ym, yp) -> "TwoModeVariances":
        return cls(*(from_db(v) for v in (xm, xp, ym, yp)))


def to_db(v):
    """10*log10 of a variance ratio to shot noise."""
    d = 10.0 * np.log10(np.asarray(v, dtype=float))
    return float(d) if d.ndim == 0 else d


def from_db(db):
    v = 10.0 ** (np.asarray(db, dtype=float) / 10.0)
    return float(v) if v.ndim == 0 else v


def symmetric_state(v: TwoModeVariances) -> CovarianceMatrix:
    """Covariance matrix whose sum/difference combinations have the given variances.

    Unphysical results are returned as is; check ``physicality()`` on the output.
    """
    sx = 0.5 * (v.vXplus + v.vXminus)
    cx = 0.5 * (v.vXplus - v.vXminus)
    sy = 0.5 * (v.vYplus + v.vYminus)
    cy = 0.5 * (v.vYplus - v.vYminus)
    m = np.array(
        [
            [sx, 0.0, cx, 0.0],
            [0.0, sy, 0.0, cy],
            [cx, 0.0, sx, 0.0],
            [0.0, cy, 0.0, sy],
        ]
    )
    return CovarianceMatrix(m)


def two_mode_variances(cm: CovarianceMatrix) -> TwoModeVariances:
    """Inverse of :func:`symmetric_state` (exact for any matrix, symmetric or not)."""
    r = 1 / math.sqrt(2)
    return TwoModeVariances(
        cm.combination_variance([r, 0, -r, 0]),
        cm.combination_variance([r, 0, r, 0]),
        cm.combination_variance([0, r, 0, -r]),
        cm.combination_variance([0, r, 0, r]),
    )


def purity(cm: CovarianceMatrix) -> float:
    d = cm.det
    if not d > 0:
        raise InvalidStateError(f"determinant {d} is not positive")
    return 1.0 / math.sqrt(d)


def conditional_variance(cm: CovarianceMatrix, o1, o2) -> tuple[float, float]:
    """Minimum over w of Var(o1 - w*o2), and the minimizing gain w."""
    i, j = _index(o1), _index(o2)
    v2 = cm.entries[j, j]
    if v2 <= 0:
        raise DivisionGuardError(f"variance of conditioning quadrature is {v2}")
    c = cm.entries[i, j]
    w = c / v2
    return float(cm.entries[i, i] - c * w), float(w)


def reid_product(cm: CovarianceMatrix) -> tuple[float, float]:
    """Product of inferred standard deviations E and its square E**2.

    E < 1 witnesses EPR steering of mode 1 by mode 2.
    """
    vx, _ = conditional_variance(cm, "x1", "x2")
    vy, _ = conditional_variance(cm, "y1", "y2")
    e2 = vx * vy
    return math.sqrt(e2), e2


def duan_sum(cm: CovarianceMatrix) -> float:
    """Var[(x1 - x2)/sqrt2] + Var[(y1 + y2)/sqrt2]; below 2 means entangled."""
    r = 1 / math.sqrt(2)
    return cm.combination_variance([r, 0, -r, 0]) + cm.combination_variance([0, r, 0, r])


def rotation(theta1: float, theta2: float) -> np.ndarray:
    """Phase-space rotation taking (x_j, y_j) to (x_j(theta_j), y_j(theta_j))."""
    c1, s1, c2, s2 = math.cos(theta1), math.sin(theta1), math.cos(theta2), math.sin(theta2)
    return np.array(
        [
            [c1, s1, 0.0, 0.0],
            [-s1, c1, 0.0, 0.0],
            [0.0, 0.0, c2, s2],
            [0.0, 0.0, -s2, c2],
        ]
    )


def rotate_quadratures(cm: CovarianceMatrix, angles: QuadratureAngles) -> CovarianceMatrix:
    r = rotation(angles.theta1, angles.theta2)
    return CovarianceMatrix(r @ cm.entries @ r.T)


def _check_eta(eta: float, name: str = "eta") -> float:
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {eta}")
    return eta


def apply_efficiency(cm: CovarianceMatrix, eta1: float, eta2: float) -> CovarianceMatrix:
    """Independent beam-splitter losses on each mode, vacuum admixed."""
    g = np.sqrt(np.repeat([_check_eta(eta1, "eta1"), _check_eta(eta2, "eta2")], 2))
    m = g[:, None] * cm.entries * g[None, :] + np.diag(1.0 - g**2)
    return CovarianceMatrix(m)


def apply_uniform_efficiency(cm: CovarianceMatrix, eta: float) -> CovarianceMatrix:
    eta = _check_eta(eta)
    return CovarianceMatrix(eta * cm.entries + (1.0 - eta) * np.eye(4))


def invert_efficiency(v_measured, eta: float):
    """Undo a uniform loss on a variance (scalar or array)."""
    eta = float(eta)
    if eta == 0.0:
        raise DivisionGuardError("cannot correct for zero efficiency")
    if not 0.0 < eta <= 1.0:
        raise InvalidArgumentError(f"eta must lie in (0, 1], got {eta}")
    v = (np.asarray(v_measured, dtype=float) - 1.0) / eta + 1.0
    if np.any(v <= 0):
        raise UnphysicalCorrectionError(
            f"correcting {v_measured} for eta={eta} gives a non-positive variance"
        )
    return float(v) if np.ndim(v) == 0 else v


def invert_uniform_efficiency(cm: CovarianceMatrix, eta: float) -> CovarianceMatrix:
    if float(eta) == 0.0:
        raise DivisionGuardError("cannot correct for zero efficiency")
    eta = _check_eta(eta)
    return CovarianceMatrix((cm.entries - (1.0 - eta) * np.eye(4)) / eta)
