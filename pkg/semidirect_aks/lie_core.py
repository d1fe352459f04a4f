"""Real Lie algebra arithmetic driven by structure constants.

Descriptors hold the structure constants c[i, j, k] of a finite dimensional
real Lie algebra, meaning [e_i, e_j] = sum_k c[i, j, k] e_k.  Elements and
dual elements are coefficient vectors bound to a descriptor.  Bilinear forms
and Manin triple splittings are separate values so that one algebra can carry
several of them, and semidirect sums h ⊛ h are built recursively with a link
back to the algebra one level down.
"""

from __future__ import annotations

import functools
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import linalg

from .const import MEMBERSHIP_TOLERANCE, RANK_TOLERANCE
from .exceptions import DescriptorMismatch, InvalidStructure, SubalgebraMembershipError

_LOGGER = logging.getLogger(__name__)

Side = Literal["plus", "minus"]


@dataclass(frozen=True, eq=False)
class LieAlgebraDescriptor:
    """Structure constants of a real Lie algebra in a fixed basis."""

    basis_labels: tuple[str, ...]
    structure_constants: np.ndarray
    level: int = 0
    base: LieAlgebraDescriptor | None = None
    name: str = ""

    def __post_init__(self) -> None:
        """Freeze the structure constants."""
        labels = tuple(str(label) for label in self.basis_labels)
        constants = np.array(self.structure_constants, dtype=float)
        dim = len(labels)
        if dim == 0 or constants.shape != (dim, dim, dim):
            raise InvalidStructure(
                f"structure constants of shape {constants.shape} do not match {dim} labels"
            )
        constants.setflags(write=False)
        object.__setattr__(self, "basis_labels", labels)
        object.__setattr__(self, "structure_constants", constants)

    @property
    def dim(self) -> int:
        """Return the dimension."""
        return len(self.basis_labels)

    def index(self, label: str) -> int:
        """Return the position of a basis label."""
        return self.basis_labels.index(label)

    def compatible(self, other: LieAlgebraDescriptor) -> bool:
        """Return True when both descriptors describe the same algebra."""
        return self is other or (
            self.dim == other.dim
            and self.level == other.level
            and np.array_equal(self.structure_constants, other.structure_constants)
        )


def _require_compatible(first: LieAlgebraDescriptor, second: LieAlgebraDescriptor) -> None:
    if not first.compatible(second):
        raise DescriptorMismatch(
            f"descriptor {first.name or first.dim!r} (level {first.level}) does not match "
            f"{second.name or second.dim!r} (level {second.level})"
        )


@dataclass(frozen=True, eq=False)
class _Coefficients:
    descriptor: LieAlgebraDescriptor
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.coefficients, dtype=float).reshape(-1)
        if values.shape != (self.descriptor.dim,):
            raise DescriptorMismatch(
                f"{values.size} coefficients given for a {self.descriptor.dim}-dimensional algebra"
            )
        if not np.all(np.isfinite(values)):
            raise FloatingPointError("coefficients must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "coefficients", values)

    def _same(self, other) -> None:
        if type(other) is not type(self):
            raise DescriptorMismatch(
                f"cannot combine {type(self).__name__} with {type(other).__name__}"
            )
        _require_compatible(self.descriptor, other.descriptor)

    def __add__(self, other):
        self._same(other)
        return type(self)(self.descriptor, self.coefficients + other.coefficients)

    def __sub__(self, other):
        self._same(other)
        return type(self)(self.descriptor, self.coefficients - other.coefficients)

    def __neg__(self):
        return type(self)(self.descriptor, -self.coefficients)

    def __mul__(self, scalar: float):
        return type(self)(self.descriptor, float(scalar) * self.coefficients)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return type(self)(self.descriptor, self.coefficients / float(scalar))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.descriptor.name or self.descriptor.dim}, {self.coefficients.tolist()})"

    def norm(self) -> float:
        """Return the Euclidean norm of the coefficients."""
        return float(np.linalg.norm(self.coefficients))

    def distance(self, other) -> float:
        """Return the sup-norm distance to another element."""
        self._same(other)
        return float(np.max(np.abs(self.coefficients - other.coefficients)))

    def halves(self):
        """Split a semidirect element into its two slots."""
        base = self.descriptor.base
        if base is None:
            raise DescriptorMismatch("element does not live on a semidirect sum")
        size = base.dim
        return (
            type(self)(base, self.coefficients[:size]),
            type(self)(base, self.coefficients[size:]),
        )

    @classmethod
    def zero(cls, descriptor: LieAlgebraDescriptor):
        """Return the zero element."""
        return cls(descriptor, np.zeros(descriptor.dim))

    @classmethod
    def basis(cls, descriptor: LieAlgebraDescriptor, key: int | str):
        """Return a basis element by index or label."""
        index = descriptor.index(key) if isinstance(key, str) else int(key)
        values = np.zeros(descriptor.dim)
        values[index] = 1.0
        return cls(descriptor, values)

    @classmethod
    def from_halves(cls, first, second):
        """Build the semidirect pair (first, second)."""
        if type(first) is not cls or type(second) is not cls:
            raise DescriptorMismatch("semidirect slots must both be " + cls.__name__)
        _require_compatible(first.descriptor, second.descriptor)
        upper = semidirect_descriptor(first.descriptor)
        return cls(upper, np.concatenate([first.coefficients, second.coefficients]))


class AlgebraElement(_Coefficients):
    """Element of a Lie algebra as a coefficient vector."""


class CoalgebraElement(_Coefficients):
    """Element of the dual of a Lie algebra in the dual basis."""


@dataclass(frozen=True, eq=False)
class BilinearForm:
    """Symmetric nondegenerate bilinear form on a Lie algebra."""

    descriptor: LieAlgebraDescriptor
    matrix: np.ndarray
    ad_invariant: bool = False
    half_factor: bool = False

    def __post_init__(self) -> None:
        """Validate symmetry and nondegeneracy."""
        matrix = np.array(self.matrix, dtype=float)
        dim = self.descriptor.dim
        if matrix.shape != (dim, dim):
            raise InvalidStructure(f"form of shape {matrix.shape} on a {dim}-dimensional algebra")
        asymmetry = np.abs(matrix - matrix.T)
        if asymmetry.max() > 0.0:
            raise InvalidStructure(
                "form is not symmetric", tuple(int(i) for i in np.unravel_index(asymmetry.argmax(), asymmetry.shape))
            )
        try:
            inverse = np.linalg.inv(matrix)
        except np.linalg.LinAlgError as err:
            raise InvalidStructure("form is degenerate") from err
        matrix.setflags(write=False)
        inverse.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "_inverse", inverse)

    def __call__(self, x: AlgebraElement, y: AlgebraElement) -> float:
        """Evaluate the form."""
        return pair(self, x, y)

    def to_dual(self, x: AlgebraElement) -> CoalgebraElement:
        """Return x ↦ k(x, ·)."""
        _require_compatible(self.descriptor, x.descriptor)
        return CoalgebraElement(x.descriptor, self.matrix @ x.coefficients)

    def from_dual(self, xi: CoalgebraElement) -> AlgebraElement:
        """Invert to_dual."""
        _require_compatible(self.descriptor, xi.descriptor)
        return AlgebraElement(xi.descriptor, self._inverse @ xi.coefficients)


@dataclass(frozen=True)
class Splitting:
    """Index-wise splitting of an algebra into two complementary subalgebras."""

    dim: int
    plus_basis_indices: tuple[int, ...]
    minus_basis_indices: tuple[int, ...]

    def __post_init__(self) -> None:
        """Validate that the index lists partition the basis."""
        plus = tuple(int(i) for i in self.plus_basis_indices)
        minus = tuple(int(i) for i in self.minus_basis_indices)
        if sorted(plus + minus) != list(range(self.dim)):
            raise InvalidStructure("plus and minus indices must partition the basis")
        object.__setattr__(self, "plus_basis_indices", plus)
        object.__setattr__(self, "minus_basis_indices", minus)

    def indices(self, side: Side) -> tuple[int, ...]:
        """Return the basis indices of one side."""
        if side == "plus":
            return self.plus_basis_indices
        if side == "minus":
            return self.minus_basis_indices
        raise ValueError(f"unknown side {side!r}")

    def mask(self, side: Side) -> np.ndarray:
        """Return the diagonal of a projector as a 0/1 vector."""
        values = np.zeros(self.dim)
        values[list(self.indices(side))] = 1.0
        return values

    @property
    def plus_projector(self) -> np.ndarray:
        return np.diag(self.mask("plus"))

    @property
    def minus_projector(self) -> np.ndarray:
        return np.diag(self.mask("minus"))

    def lift(self) -> Splitting:
        """Return the splitting induced on the semidirect sum."""
        return Splitting(
            2 * self.dim,
            self.plus_basis_indices + tuple(self.dim + i for i in self.plus_basis_indices),
            self.minus_basis_indices + tuple(self.dim + i for i in self.minus_basis_indices),
        )

    def lower(self) -> Splitting:
        """Return the splitting one level down."""
        if self.dim % 2:
            raise InvalidStructure("odd dimensional splitting has no lower level")
        half = self.dim // 2
        return Splitting(
            half,
            tuple(i for i in self.plus_basis_indices if i < half),
            tuple(i for i in self.minus_basis_indices if i < half),
        )


def structure_bracket(constants: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Return [x, y] on raw coefficient arrays, batched over leading axes."""
    return np.einsum("...i,...j,ijk->...k", x, y, constants)


def bracket(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    """Return the Lie bracket [x, y]."""
    _require_compatible(x.descriptor, y.descriptor)
    values = structure_bracket(x.descriptor.structure_constants, x.coefficients, y.coefficients)
    return AlgebraElement(x.descriptor, values)


def adjoint_matrix(x: AlgebraElement) -> np.ndarray:
    """Return the matrix of ad_x acting on coefficient vectors."""
    return np.einsum("i,ijk->kj", x.coefficients, x.descriptor.structure_constants)


def ad_star(x: AlgebraElement, xi: CoalgebraElement) -> CoalgebraElement:
    """Return ad*_x xi with <ad*_x xi, y> = <xi, [x, y]>."""
    _require_compatible(x.descriptor, xi.descriptor)
    return CoalgebraElement(xi.descriptor, adjoint_matrix(x).T @ xi.coefficients)


def pair(form: BilinearForm, x: AlgebraElement, y: AlgebraElement) -> float:
    """Return k(x, y)."""
    _require_compatible(form.descriptor, x.descriptor)
    _require_compatible(form.descriptor, y.descriptor)
    return float(x.coefficients @ form.matrix @ y.coefficients)


def pairing(xi: CoalgebraElement, x: AlgebraElement) -> float:
    """Return the natural pairing <xi, x>."""
    _require_compatible(xi.descriptor, x.descriptor)
    return float(xi.coefficients @ x.coefficients)


@functools.lru_cache(maxsize=None)
def semidirect_descriptor(alg: LieAlgebraDescriptor) -> LieAlgebraDescriptor:
    """Return the descriptor of alg ⊛ alg, cached per base descriptor."""
    size = alg.dim
    base_constants = alg.structure_constants
    constants = np.zeros((2 * size, 2 * size, 2 * size))
    constants[:size, :size, :size] = base_constants
    # [(Y, 0), (0, Z)] = (0, [Y, Z]) and [(0, V), (X, 0)] = (0, [V, X])
    constants[:size, size:, size:] = base_constants
    constants[size:, :size, size:] = base_constants
    labels = tuple(f"({label},0)" for label in alg.basis_labels) + tuple(
        f"(0,{label})" for label in alg.basis_labels
    )
    name = f"{alg.name}*" if alg.name else ""
    _LOGGER.debug("Built semidirect sum of dimension %s at level %s", 2 * size, alg.level + 1)
    return LieAlgebraDescriptor(labels, constants, level=alg.level + 1, base=alg, name=name)


def semidirect_sum(
    alg: LieAlgebraDescriptor,
    form: BilinearForm,
    half_factor: bool,
    split: Splitting | None = None,
) -> tuple[LieAlgebraDescriptor, BilinearForm, Splitting | None]:
    """Return h ⊛ h with its induced form and splitting."""
    _require_compatible(alg, form.descriptor)
    upper = semidirect_descriptor(alg)
    factor = 0.5 if half_factor else 1.0
    size = alg.dim
    matrix = np.zeros((2 * size, 2 * size))
    matrix[:size, size:] = factor * form.matrix
    matrix[size:, :size] = factor * form.matrix
    upper_form = BilinearForm(
        upper, matrix, ad_invariant=form.ad_invariant, half_factor=half_factor
    )
    return upper, upper_form, None if split is None else split.lift()


def semidirect_tower(
    alg: LieAlgebraDescriptor,
    form: BilinearForm,
    split: Splitting,
    levels: int,
    half_factor: bool = True,
) -> list[tuple[LieAlgebraDescriptor, BilinearForm, Splitting]]:
    """Iterate semidirect_sum, returning the chain starting with the input."""
    chain = [(alg, form, split)]
    for _ in range(levels):
        chain.append(semidirect_sum(*chain[-1][:2], half_factor, chain[-1][2]))
    return chain


def project(split: Splitting, x: AlgebraElement, side: Side) -> AlgebraElement:
    """Return Π± x."""
    if split.dim != x.descriptor.dim:
        raise DescriptorMismatch("splitting does not belong to the element's algebra")
    return AlgebraElement(x.descriptor, split.mask(side) * x.coefficients)


def require_side(split: Splitting, x: AlgebraElement, side: Side, what: str = "element") -> None:
    """Raise unless x lies in the plus or minus subalgebra."""
    other = "minus" if side == "plus" else "plus"
    leak = float(np.max(np.abs(split.mask(other) * x.coefficients), initial=0.0))
    if leak > MEMBERSHIP_TOLERANCE:
        raise SubalgebraMembershipError(f"{what} has a {other} component of size {leak:.3e}")


def dressing_component(
    x_minus: AlgebraElement, x_plus: AlgebraElement, split: Splitting, side: Side
) -> AlgebraElement:
    """Return (X₊)^{X₋} = Π₊[X₋, X₊] or (X₋)^{X₊} = Π₋[X₋, X₊]."""
    require_side(split, x_minus, "minus", "x_minus")
    require_side(split, x_plus, "plus", "x_plus")
    return project(split, bracket(x_minus, x_plus), side)


def character_space(
    alg: LieAlgebraDescriptor, restrict_to: Sequence[int] | None = None
) -> list[CoalgebraElement]:
    """Return a basis of the characters of alg or of the subalgebra on the given indices."""
    indices = list(range(alg.dim)) if restrict_to is None else [int(i) for i in restrict_to]
    constants = alg.structure_constants
    rows = [
        constants[i, j, indices] for pos, i in enumerate(indices) for j in indices[pos + 1:]
    ]
    if rows:
        kernel = linalg.null_space(np.array(rows), rcond=RANK_TOLERANCE)
    else:
        kernel = np.eye(len(indices))
    kernel[np.abs(kernel) < 1e-14] = 0.0
    characters = []
    for column in kernel.T:
        values = np.zeros(alg.dim)
        values[indices] = column
        characters.append(CoalgebraElement(alg, values))
    _LOGGER.debug("Character space of dimension %s over %s basis elements", len(characters), len(indices))
    return characters


def is_character(
    xi: CoalgebraElement,
    restrict_to: Sequence[int] | None = None,
    tolerance: float = MEMBERSHIP_TOLERANCE,
) -> bool:
    """Return True when xi annihilates the derived (sub)algebra."""
    alg = xi.descriptor
    indices = list(range(alg.dim)) if restrict_to is None else list(restrict_to)
    block = alg.structure_constants[np.ix_(indices, indices, indices)]
    values = np.einsum("ijk,k->ij", block, xi.coefficients[indices])
    return bool(np.max(np.abs(values), initial=0.0) <= tolerance)


def antisymmetry_residual(alg: LieAlgebraDescriptor) -> tuple[float, tuple[int, ...]]:
    """Return the worst antisymmetry violation and its index triple."""
    constants = alg.structure_constants
    residual = np.abs(constants + constants.transpose(1, 0, 2))
    where = np.unravel_index(residual.argmax(), residual.shape)
    return float(residual[where]), tuple(int(i) for i in where)


def jacobi_residual(alg: LieAlgebraDescriptor) -> tuple[float, tuple[int, ...]]:
    """Return the worst Jacobi violation and its index quadruple."""
    c = alg.structure_constants
    residual = np.abs(
        np.einsum("ijm,mkl->ijkl", c, c, optimize=True)
        + np.einsum("jkm,mil->ijkl", c, c, optimize=True)
        + np.einsum("kim,mjl->ijkl", c, c, optimize=True)
    )
    where = np.unravel_index(residual.argmax(), residual.shape)
    return float(residual[where]), tuple(int(i) for i in where)


def invariance_residual(form: BilinearForm) -> tuple[float, tuple[int, ...]]:
    """Return the worst value of k([x,y],z) + k(y,[x,z]) over basis triples."""
    c = form.descriptor.structure_constants
    k = form.matrix
    residual = np.abs(np.einsum("ijm,ml->ijl", c, k) + np.einsum("jm,ilm->ijl", k, c))
    where = np.unravel_index(residual.argmax(), residual.shape)
    return float(residual[where]), tuple(int(i) for i in where)


def splitting_residual(
    alg: LieAlgebraDescriptor, form: BilinearForm, split: Splitting
) -> tuple[float, str]:
    """Return the worst closure or isotropy violation of a splitting."""
    c = alg.structure_constants
    plus = list(split.plus_basis_indices)
    minus = list(split.minus_basis_indices)
    checks = {
        "plus closure": c[np.ix_(plus, plus, minus)],
        "minus closure": c[np.ix_(minus, minus, plus)],
        "plus isotropy": form.matrix[np.ix_(plus, plus)],
        "minus isotropy": form.matrix[np.ix_(minus, minus)],
    }
    worst, label = 0.0, "ok"
    for name, block in checks.items():
        value = float(np.max(np.abs(block), initial=0.0))
        if value > worst:
            worst, label = value, name
    return worst, label


def check_descriptor(
    alg: LieAlgebraDescriptor,
    form: BilinearForm | None = None,
    split: Splitting | None = None,
    tolerance: float = 1e-12,
) -> None:
    """Raise InvalidStructure on the first broken invariant."""
    value, where = antisymmetry_residual(alg)
    if value > tolerance:
        raise InvalidStructure(f"antisymmetry fails at {where} by {value:.3e}", where)
    value, where = jacobi_residual(alg)
    if value > tolerance:
        raise InvalidStructure(f"Jacobi identity fails at {where} by {value:.3e}", where)
    if form is not None and form.ad_invariant:
        value, where = invariance_residual(form)
        if value > tolerance:
            raise InvalidStructure(f"form is not ad-invariant at {where} by {value:.3e}", where)
    if form is not None and split is not None:
        value, label = splitting_residual(alg, form, split)
        if value > tolerance:
            raise InvalidStructure(f"splitting {label} fails by {value:.3e}")


@dataclass(frozen=True, eq=False)
class AlgebraModel:
    """An algebra together with its form, splitting and σ identification."""

    descriptor: LieAlgebraDescriptor
    form: BilinearForm
    split: Splitting
    sigma_matrix: np.ndarray
    j_matrix: np.ndarray | None = None
    base: AlgebraModel | None = None

    def __post_init__(self) -> None:
        """Freeze the σ matrix and check it maps halves to dual halves."""
        sigma = np.array(self.sigma_matrix, dtype=float)
        if sigma.shape != (self.descriptor.dim,) * 2:
            raise InvalidStructure("σ matrix has the wrong shape")
        plus = list(self.split.plus_basis_indices)
        minus = list(self.split.minus_basis_indices)
        if np.any(sigma[np.ix_(plus, minus)]) or np.any(sigma[np.ix_(minus, plus)]):
            raise InvalidStructure("σ must map each half onto its own dual")
        if not np.array_equal(sigma, sigma.T):
            raise InvalidStructure("σ must be symmetric")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma_matrix", sigma)
        object.__setattr__(self, "_sigma_inverse", np.linalg.inv(sigma))

    @property
    def level(self) -> int:
        return self.descriptor.level

    @property
    def dim(self) -> int:
        return self.descriptor.dim

    def element(self, values) -> AlgebraElement:
        return AlgebraElement(self.descriptor, values)

    def coelement(self, values) -> CoalgebraElement:
        return CoalgebraElement(self.descriptor, values)

    def zero(self) -> AlgebraElement:
        return AlgebraElement.zero(self.descriptor)

    def k(self, x: AlgebraElement, y: AlgebraElement) -> float:
        """Evaluate the level form."""
        return pair(self.form, x, y)

    def gamma(self, x: AlgebraElement) -> CoalgebraElement:
        """Return γ(x) = k(x, ·)."""
        return self.form.to_dual(x)

    def gamma_inverse(self, xi: CoalgebraElement) -> AlgebraElement:
        return self.form.from_dual(xi)

    def sigma(self, x: AlgebraElement) -> CoalgebraElement:
        """Return σ(x)."""
        _require_compatible(self.descriptor, x.descriptor)
        return CoalgebraElement(self.descriptor, self.sigma_matrix @ x.coefficients)

    def sigma_inverse(self, xi: CoalgebraElement) -> AlgebraElement:
        _require_compatible(self.descriptor, xi.descriptor)
        return AlgebraElement(self.descriptor, self._sigma_inverse @ xi.coefficients)

    def sigma_pair(self, x: AlgebraElement, y: AlgebraElement) -> float:
        """Return (x, y) = <σ(x), y>."""
        return pairing(self.sigma(x), y)

    def project(self, x: AlgebraElement, side: Side) -> AlgebraElement:
        return project(self.split, x, side)

    def project_dual(self, xi: CoalgebraElement, side: Side) -> CoalgebraElement:
        """Restrict a dual element to the dual basis of one half."""
        _require_compatible(self.descriptor, xi.descriptor)
        return CoalgebraElement(self.descriptor, self.split.mask(side) * xi.coefficients)

    def j_multiply(self, x: AlgebraElement) -> AlgebraElement:
        """Apply the complex structure slot-wise."""
        if self.j_matrix is None:
            raise InvalidStructure("algebra has no complex structure")
        _require_compatible(self.descriptor, x.descriptor)
        return AlgebraElement(self.descriptor, self.j_matrix @ x.coefficients)

    def lift(self, half_factor: bool = True) -> AlgebraModel:
        """Return the model on the semidirect sum with block σ."""
        upper, form, split = semidirect_sum(self.descriptor, self.form, half_factor, self.split)
        j_matrix = None if self.j_matrix is None else linalg.block_diag(self.j_matrix, self.j_matrix)
        return AlgebraModel(
            upper,
            form,
            split,
            linalg.block_diag(self.sigma_matrix, self.sigma_matrix),
            j_matrix,
            base=self,
        )

    def check(self, tolerance: float = 1e-12) -> None:
        """Run the descriptor, form and splitting invariant suite."""
        check_descriptor(self.descriptor, self.form, self.split, tolerance)
