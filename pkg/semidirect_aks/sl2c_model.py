"""Concrete model of sl(2,C) as a real Lie algebra.

The basis is (X1, X2, X3, E, iE, H) with X_i spanning su(2) and E, iE, H
spanning the upper triangular algebra b.  The structure constants and the
pairing k0(x, y) = -Im tr(xy) are computed from the 2x2 matrices once and
stored as exact small integers.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np

from .const import (
    B_INDICES,
    MAX_TOWER_LEVEL,
    SL2C_LABELS,
    SU2_INDICES,
    TRACE_TOLERANCE,
)
from .exceptions import NotTraceless, SubalgebraMembershipError, UnsupportedLevel
from .lie_core import (
    AlgebraElement,
    AlgebraModel,
    BilinearForm,
    CoalgebraElement,
    LieAlgebraDescriptor,
    Splitting,
)

_LOGGER = logging.getLogger(__name__)

BASIS_MATRICES = (
    np.array([[0, 1j], [1j, 0]]),
    np.array([[0, 1], [-1, 0]], dtype=complex),
    np.array([[1j, 0], [0, -1j]]),
    np.array([[0, 1], [0, 0]], dtype=complex),
    np.array([[0, 1j], [0, 0]]),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

BASIS_STACK = np.array(BASIS_MATRICES)
BASIS_STACK.setflags(write=False)
BASIS_ENTRIES = BASIS_STACK.reshape(6, 4)

# Rows read the coefficients off (Re m11, Re m12, Re m21, Re m22, Im m11, Im m12, Im m21, Im m22).
COEFFICIENT_MAP = np.array(
    [
        [0, 0, 0, 0, 0, 0, 1, 0],
        [0, 0, -1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0, 0, 0],
        [0, 1, 1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 1, -1, 0],
        [1, 0, 0, 0, 0, 0, 0, 0],
    ],
    dtype=float,
)
COEFFICIENT_MAP.setflags(write=False)


def matrix_coefficients(matrix: np.ndarray) -> np.ndarray:
    """Return the coefficients of traceless 2x2 matrices, batched over leading axes."""
    matrix = np.asarray(matrix)
    entries = matrix.reshape(matrix.shape[:-2] + (4,))
    return np.concatenate([entries.real, entries.imag], axis=-1) @ COEFFICIENT_MAP.T


def realize_values(values: np.ndarray) -> np.ndarray:
    """Return the 2x2 matrices of coefficient arrays, batched over leading axes."""
    values = np.asarray(values)
    return (values @ BASIS_ENTRIES).reshape(values.shape[:-1] + (2, 2))


def _exact(values: np.ndarray) -> np.ndarray:
    rounded = np.rint(values)
    if np.max(np.abs(values - rounded)) > 1e-12:
        raise ValueError("expected integer entries")
    return rounded + 0.0


@dataclass(frozen=True, eq=False)
class Sl2cModel:
    """sl(2,C) with its matrices, forms and bijections."""

    algebra: AlgebraModel
    basis_matrices: tuple[np.ndarray, ...]
    gamma_matrix: np.ndarray
    zeta_matrix: np.ndarray
    vartheta_matrix: np.ndarray

    @property
    def descriptor(self) -> LieAlgebraDescriptor:
        return self.algebra.descriptor

    @property
    def k0_form(self) -> BilinearForm:
        return self.algebra.form

    @property
    def sigma_matrix(self) -> np.ndarray:
        return self.algebra.sigma_matrix

    @property
    def j_matrix(self) -> np.ndarray:
        return self.algebra.j_matrix

    @property
    def split(self) -> Splitting:
        return self.algebra.split

    def element(self, values) -> AlgebraElement:
        return AlgebraElement(self.descriptor, values)

    def basis(self, label: str) -> AlgebraElement:
        return AlgebraElement.basis(self.descriptor, label)

    def realize(self, x: AlgebraElement) -> np.ndarray:
        """Return the traceless 2x2 complex matrix of x."""
        return realize_values(x.coefficients)

    def to_coefficients(self, matrix: np.ndarray, tolerance: float = TRACE_TOLERANCE) -> AlgebraElement:
        """Return the coefficients of a traceless 2x2 complex matrix."""
        matrix = np.asarray(matrix, dtype=complex)
        trace = abs(matrix[0, 0] + matrix[1, 1])
        if trace > tolerance:
            raise NotTraceless(f"matrix has trace of size {trace:.3e}")
        values = matrix_coefficients(matrix)
        residual = np.max(np.abs(realize_values(values) - matrix))
        if residual > tolerance + trace:
            raise NotTraceless(f"matrix is off the basis span by {residual:.3e}")
        return AlgebraElement(self.descriptor, values)

    def kappa(self, x: AlgebraElement, y: AlgebraElement) -> complex:
        """Return the Killing form 4 tr(xy)."""
        return complex(4.0 * np.trace(self.realize(x) @ self.realize(y)))

    def k0(self, x: AlgebraElement, y: AlgebraElement) -> float:
        """Return -Im tr(xy) = -Im κ(x, y) / 4."""
        return -0.25 * self.kappa(x, y).imag

    def sigma(self, x: AlgebraElement) -> CoalgebraElement:
        return self.algebra.sigma(x)

    def sigma_inverse(self, xi: CoalgebraElement) -> AlgebraElement:
        return self.algebra.sigma_inverse(xi)

    def gamma(self, x: AlgebraElement) -> CoalgebraElement:
        return CoalgebraElement(self.descriptor, self.gamma_matrix @ x.coefficients)

    def gamma_inverse(self, xi: CoalgebraElement) -> AlgebraElement:
        return self.algebra.gamma_inverse(xi)

    def _half(self, x: AlgebraElement, indices: tuple[int, ...], name: str) -> np.ndarray:
        others = [i for i in range(6) if i not in indices]
        leak = float(np.max(np.abs(x.coefficients[others])))
        if leak > TRACE_TOLERANCE:
            raise SubalgebraMembershipError(f"{name} is only defined on one half, leak {leak:.3e}")
        return x.coefficients[list(indices)]

    def zeta(self, x: AlgebraElement) -> CoalgebraElement:
        """Return ζ on su(2) as a dual element supported on su(2)*."""
        values = np.zeros(6)
        values[list(SU2_INDICES)] = self.zeta_matrix @ self._half(x, SU2_INDICES, "zeta")
        return CoalgebraElement(self.descriptor, values)

    def vartheta(self, x: AlgebraElement) -> CoalgebraElement:
        """Return ϑ on b as a dual element supported on b*."""
        values = np.zeros(6)
        values[list(B_INDICES)] = self.vartheta_matrix @ self._half(x, B_INDICES, "vartheta")
        return CoalgebraElement(self.descriptor, values)

    def j_multiply(self, x: AlgebraElement) -> AlgebraElement:
        """Return the coefficients of i·realize(x)."""
        return self.algebra.j_multiply(x)


@functools.cache
def build_model() -> Sl2cModel:
    """Return the shared sl(2,C) model."""
    matrices = BASIS_MATRICES
    constants = np.zeros((6, 6, 6))
    for i, left in enumerate(matrices):
        for j, right in enumerate(matrices):
            constants[i, j] = matrix_coefficients(left @ right - right @ left)
    descriptor = LieAlgebraDescriptor(SL2C_LABELS, _exact(constants), level=0, name="sl2c")

    k0 = np.array(
        [[-np.trace(left @ right).imag for right in matrices] for left in matrices]
    )
    form = BilinearForm(descriptor, _exact(k0), ad_invariant=True)
    split = Splitting(6, SU2_INDICES, B_INDICES)

    zeta = -np.eye(3) / 8.0
    # ϑ = γ ∘ ζ⁻¹ ∘ γ*
    vartheta = form.matrix[3:, :3] @ np.linalg.inv(zeta) @ form.matrix[:3, 3:]
    sigma = np.zeros((6, 6))
    sigma[:3, :3] = zeta
    sigma[3:, 3:] = vartheta

    j_matrix = np.column_stack([matrix_coefficients(1j * matrix) for matrix in matrices])
    algebra = AlgebraModel(descriptor, form, split, sigma, _exact(j_matrix))
    _LOGGER.debug("Built sl(2,C) model")
    return Sl2cModel(algebra, matrices, form.matrix, zeta, vartheta)


@functools.cache
def tower_level(level: int, half_factor: bool = True) -> AlgebraModel:
    """Return the algebra model of the given level of the sl(2,C) tower."""
    if level < 0 or level > MAX_TOWER_LEVEL + 1:
        raise UnsupportedLevel(f"tower level {level} is outside 0..{MAX_TOWER_LEVEL + 1}")
    if level == 0:
        return build_model().algebra
    return tower_level(level - 1, half_factor).lift(half_factor)


def su2_vector(x: AlgebraElement) -> np.ndarray:
    """Return the su(2) coordinates (x1, x2, x3)."""
    return np.array(x.coefficients[list(SU2_INDICES)])


def from_su2_vector(vector) -> AlgebraElement:
    """Return the su(2) element with the given coordinates."""
    values = np.zeros(6)
    values[list(SU2_INDICES)] = np.asarray(vector, dtype=float)
    return AlgebraElement(build_model().descriptor, values)


def kappa_su2_matrix() -> np.ndarray:
    """Return the Killing matrix of su(2) in the basis X1, X2, X3."""
    model = build_model()
    return np.array(
        [
            [model.kappa(model.basis(a), model.basis(b)).real for b in ("X1", "X2", "X3")]
            for a in ("X1", "X2", "X3")
        ]
    )


def adjoint_b_closed_form(a: float, b: float, c: float, x: AlgebraElement) -> AlgebraElement:
    """Return Ad_h x for h = [[a, b+ic], [0, 1/a]] from the explicit formulas."""
    x1, x2, x3, xe, xie, xh = x.coefficients
    shift = a * a - 1.0 / (a * a)
    values = np.array(
        [
            x1 / a**2,
            x2 / a**2,
            x1 * b / a - x2 * c / a + x3,
            2 * b * c * x1 + (b * b - c * c + shift) * x2 + 2 * a * c * x3 + xe * a * a - 2 * xh * b * a,
            x1 * (c * c - b * b + shift) + 2 * b * c * x2 - 2 * a * b * x3 + xie * a * a - 2 * xh * c * a,
            -(x1 * c / a + x2 * b / a - xh),
        ]
    )
    return AlgebraElement(x.descriptor, values)


def projector_b_closed_form(a: float, b: float, c: float, x: AlgebraElement, side: str) -> AlgebraElement:
    """Return 𝔸±(h) x for h = [[a, b+ic], [0, 1/a]] from the explicit formulas."""
    x1, x2, x3, xe, xie, xh = x.coefficients
    weight = b * b + c * c + 1.0 / (a * a) - a * a
    if side == "plus":
        values = np.array(
            [
                x1,
                x2,
                x3,
                (weight * x2 - 2 * a * c * x3) / a**2,
                (weight * x1 + 2 * a * b * x3) / a**2,
                (x1 * c + x2 * b) / a,
            ]
        )
    else:
        values = np.array(
            [
                0.0,
                0.0,
                0.0,
                (-weight * x2 + 2 * a * c * x3 + a * a * xe) / a**2,
                (-weight * x1 - 2 * a * b * x3 + a * a * xie) / a**2,
                -((c / a) * x1 + (b / a) * x2 - xh),
            ]
        )
    return AlgebraElement(x.descriptor, values)


def b_coadjoint(a: float, b: float, c: float, xi: CoalgebraElement) -> CoalgebraElement:
    """Return the coadjoint action of h = [[a, b+ic], [0, 1/a]] on b*.

    The dual element is read on its b components (e, e~, h) only.
    """
    _, _, _, ye, yie, yh = xi.coefficients
    values = np.zeros(6)
    values[3] = ye / a**2
    values[4] = yie / a**2
    values[5] = yh + 2.0 * (b / a) * ye + 2.0 * (c / a) * yie
    return CoalgebraElement(xi.descriptor, values)
