"""Convex programs in nonnegative variables.

Every program has the form::

    minimize    f(x)
    subject to  g(x) <= 0,  x >= 0

The built-in families (LP, QP and the exponential-sum NLP) carry affine
constraints written as ``A x >= b`` and are canonicalized to
``g(x) = b - A x``.  Programs defined by user callables use the
``generic`` family.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

#: Arguments of ``exp`` are clipped here before exponentiation.
EXP_CAP = 700.0
PSD_TOL = -1e-10
NONNEG_TOL = -1e-12


class Family(str, enum.Enum):
    LP = "lp"
    QP = "qp"
    EXPSUM = "expsum"
    GENERIC = "generic"


class ProblemFormatError(ValueError):
    """A problem document could not be turned into a program."""


@dataclass(frozen=True)
class GenericOracle:
    """Callable handles for a user-supplied convex program.

    ``constraint_hessian(x, y)`` must return ``sum_i y_i * hess g_i(x)``.
    Exact Hessians are required; the Newton-type flows need them.
    """

    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray]
    constraint_hessian: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OracleEval:
    grad_f: np.ndarray
    g: np.ndarray
    g_jacobian: np.ndarray
    weighted_hessian: np.ndarray
    capped: bool = False


@dataclass(frozen=True, eq=False)
class ConvexProgram:
    """A convex NLP ``min f(x) s.t. g(x) <= 0, x >= 0``.

    Instances are immutable; build them with :func:`make_lp`,
    :func:`make_qp`, :func:`make_expsum` or :func:`make_generic`.
    """

    n: int
    m: int
    family: Family
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None
    Q: Optional[np.ndarray] = None
    oracle: Optional[GenericOracle] = None
    recover: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    @property
    def affine(self) -> bool:
        return self.family is not Family.GENERIC

    @property
    def scale(self) -> float:
        """Largest absolute data entry (at least 1); used to scale tolerances."""
        arrays = [a for a in (self.A, self.b, self.c, self.Q) if a is not None and a.size]
        if not arrays:
            return 1.0
        return max(1.0, max(float(np.max(np.abs(a))) for a in arrays))

    # -- objective ------------------------------------------------------
    def objective(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if self.family is Family.LP:
            return float(self.c @ x)
        if self.family is Family.QP:
            return float(0.5 * x @ self.Q @ x + self.c @ x)
        if self.family is Family.EXPSUM:
            return float(np.sum(np.exp(np.minimum(x, EXP_CAP))))
        return float(self.oracle.f(x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family is Family.LP:
            return self.c.copy()
        if self.family is Family.QP:
            return self.Q @ x + self.c
        if self.family is Family.EXPSUM:
            return np.exp(np.minimum(x, EXP_CAP))
        return np.asarray(self.oracle.grad(x), dtype=float)

    def weighted_hessian(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``hess f(x) + sum_i y_i hess g_i(x)``."""
        x = np.asarray(x, dtype=float)
        if self.family is Family.LP:
            return np.zeros((self.n, self.n))
        if self.family is Family.QP:
            return self.Q.copy()
        if self.family is Family.EXPSUM:
            return np.diag(np.exp(np.minimum(x, EXP_CAP)))
        H = np.asarray(self.oracle.hess(x), dtype=float)
        return H + np.asarray(self.oracle.constraint_hessian(x, np.asarray(y, dtype=float)), dtype=float)

    def gradient_offset(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``grad f(x) - weighted_hessian(x, y) @ x``, cancellation-free where possible."""
        x = np.asarray(x, dtype=float)
        if self.family in (Family.LP, Family.QP):
            return self.c.copy()
        if self.family is Family.EXPSUM:
            e = np.exp(np.minimum(x, EXP_CAP))
            return e * (1.0 - x)
        return self.gradient(x) - self.weighted_hessian(x, y) @ x

    # -- constraints ----------------------------------------------------
    def constraints(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.affine:
            return self.b - self.A @ x
        return np.asarray(self.oracle.g(x), dtype=float)

    def constraint_jacobian(self, x: np.ndarray) -> np.ndarray:
        if self.affine:
            return -self.A
        return np.asarray(self.oracle.jac(np.asarray(x, dtype=float)), dtype=float)

    def constraint_offset(self, x: np.ndarray) -> np.ndarray:
        """``g(x) - jac g(x) @ x``; exactly ``b`` for affine constraints."""
        if self.affine:
            return self.b.copy()
        x = np.asarray(x, dtype=float)
        return self.constraints(x) - self.constraint_jacobian(x) @ x

    def exp_capped(self, x: np.ndarray) -> bool:
        return self.family is Family.EXPSUM and bool(np.any(np.asarray(x) > EXP_CAP))


def _vector(name, value, size=None):
    arr = np.array(value, dtype=float).reshape(-1) if np.ndim(value) <= 1 else None
    if arr is None:
        raise ValueError(f"{name} must be a vector, got shape {np.shape(value)}")
    if size is not None and arr.size != size:
        raise ValueError(f"{name} has length {arr.size}, expected {size}")
    return arr


def _matrix(name, value, shape):
    arr = np.array(value, dtype=float)
    if arr.ndim != 2 or arr.shape != shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    return arr


def _constraint_data(A, b, n=None):
    A = np.array(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"A must be a 2-D array, got shape {A.shape}")
    m, n_A = A.shape
    if n is not None and n_A != n:
        raise ValueError(f"A has {n_A} columns, expected n={n}")
    if m < 1 or n_A < 1:
        raise ValueError("need at least one variable and one constraint")
    b = _vector("b", b, m)
    return A, b


def _frozen(*arrays):
    for a in arrays:
        if a is not None:
            a.setflags(write=False)


def make_lp(c, A, b) -> ConvexProgram:
    """LP ``min c.x  s.t.  A x >= b, x >= 0``."""
    c = _vector("c", c)
    A, b = _constraint_data(A, b, c.size)
    _frozen(c, A, b)
    return ConvexProgram(n=c.size, m=b.size, family=Family.LP, A=A, b=b, c=c)


def make_qp(Q, c, A, b) -> ConvexProgram:
    """QP ``min 0.5 x'Qx + c.x  s.t.  A x >= b, x >= 0``.

    ``Q`` is symmetrized; a symmetrized ``Q`` with an eigenvalue below
    ``-1e-10`` is rejected as nonconvex.
    """
    c = _vector("c", c)
    n = c.size
    Q = _matrix("Q", Q, (n, n))
    Q = 0.5 * (Q + Q.T)
    lam_min = float(np.linalg.eigvalsh(Q)[0])
    if lam_min < PSD_TOL:
        raise ValueError(f"Q is not positive semidefinite (min eigenvalue {lam_min:.3e})")
    A, b = _constraint_data(A, b, n)
    _frozen(Q, c, A, b)
    return ConvexProgram(n=n, m=b.size, family=Family.QP, A=A, b=b, c=c, Q=Q)


def make_expsum(A, b) -> ConvexProgram:
    """``min sum_i exp(x_i)  s.t.  A x >= b, x >= 0``."""
    A, b = _constraint_data(A, b)
    _frozen(A, b)
    return ConvexProgram(n=A.shape[1], m=b.size, family=Family.EXPSUM, A=A, b=b)


def make_generic(n: int, m: int, oracle: GenericOracle) -> ConvexProgram:
    if n < 1 or m < 1:
        raise ValueError("need at least one variable and one constraint")
    return ConvexProgram(n=int(n), m=int(m), family=Family.GENERIC, oracle=oracle)


def evaluate(program: ConvexProgram, x, y) -> OracleEval:
    """Evaluate all first- and second-order data at ``x >= 0``, ``y >= 0``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (program.n,) or y.shape != (program.m,):
        raise ValueError(f"expected x of length {program.n} and y of length {program.m}")
    if np.any(x < NONNEG_TOL) or np.any(y < NONNEG_TOL):
        raise ValueError("evaluate requires x >= 0 and y >= 0")
    return OracleEval(
        grad_f=program.gradient(x),
        g=program.constraints(x),
        g_jacobian=program.constraint_jacobian(x),
        weighted_hessian=program.weighted_hessian(x, y),
        capped=program.exp_capped(x),
    )


def augment_infeasible(program: ConvexProgram) -> ConvexProgram:
    """Append the row ``-sum(x) >= 1``, which no ``x >= 0`` satisfies."""
    if not program.affine:
        raise ValueError("augment_infeasible needs affine constraints (lp, qp or expsum)")
    A = np.vstack([program.A, -np.ones(program.n)])
    b = np.append(program.b, 1.0)
    _frozen(A, b)
    return replace(program, m=program.m + 1, A=A, b=b, recover=None)


def split_free_variables(program: ConvexProgram) -> ConvexProgram:
    """Reinterpret ``program`` over free ``x`` and rewrite it with ``x = xp - xm``.

    The returned program has ``2n`` nonnegative variables ``[xp, xm]``;
    its ``recover`` attribute maps a solution back to ``x``.
    """
    n = program.n
    P = np.hstack([np.eye(n), -np.eye(n)])

    def recover(x_split):
        x_split = np.asarray(x_split, dtype=float)
        return x_split[:n] - x_split[n:]

    if program.family is Family.LP:
        out = make_lp(P.T @ program.c, program.A @ P, program.b)
    elif program.family is Family.QP:
        out = make_qp(P.T @ program.Q @ P, P.T @ program.c, program.A @ P, program.b)
    else:
        base = program

        def hess(x):
            return P.T @ base.weighted_hessian(P @ x, np.zeros(base.m)) @ P

        def constraint_hessian(x, y):
            if base.affine:
                return np.zeros((2 * n, 2 * n))
            return P.T @ base.oracle.constraint_hessian(P @ x, y) @ P

        oracle = GenericOracle(
            f=lambda x: base.objective(P @ x),
            grad=lambda x: P.T @ base.gradient(P @ x),
            hess=hess,
            g=lambda x: base.constraints(P @ x),
            jac=lambda x: base.constraint_jacobian(P @ x) @ P,
            constraint_hessian=constraint_hessian,
        )
        out = make_generic(2 * n, program.m, oracle)
    return replace(out, recover=recover)


# -- problem files --------------------------------------------------------

_REQUIRED = {
    Family.LP: ("c", "A", "b"),
    Family.QP: ("Q", "c", "A", "b"),
    Family.EXPSUM: ("A", "b"),
}


def parse_problem(text: str) -> ConvexProgram:
    """Parse a JSON problem document (see README for the schema)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ProblemFormatError("top level must be a JSON object")
    tag = doc.get("family")
    try:
        family = Family(tag)
    except ValueError:
        raise ProblemFormatError(f"field 'family': unknown family tag {tag!r}") from None
    if family is Family.GENERIC:
        raise ProblemFormatError("field 'family': generic programs cannot be read from a file")
    for key in _REQUIRED[family]:
        if key not in doc:
            raise ProblemFormatError(f"field {key!r} is required for family {family.value!r}")
    for key in ("n", "m"):
        if key not in doc:
            raise ProblemFormatError(f"field {key!r} is required")
        if not isinstance(doc[key], int) or isinstance(doc[key], bool):
            raise ProblemFormatError(f"field {key!r} must be an integer")
    n, m = doc["n"], doc["m"]

    def numeric(key, shape):
        value = doc[key]
        try:
            arr = np.array(value, dtype=float)
        except (TypeError, ValueError):
            raise ProblemFormatError(f"field {key!r} contains non-numeric entries") from None
        if arr.dtype == object or any(isinstance(v, (str, bool)) for v in np.ravel(np.array(value, dtype=object))):
            raise ProblemFormatError(f"field {key!r} contains non-numeric entries")
        if arr.shape != shape:
            raise ProblemFormatError(f"field {key!r} has shape {arr.shape}, expected {shape}")
        return arr

    A = numeric("A", (m, n))
    b = numeric("b", (m,))
    try:
        if family is Family.LP:
            return make_lp(numeric("c", (n,)), A, b)
        if family is Family.QP:
            return make_qp(numeric("Q", (n, n)), numeric("c", (n,)), A, b)
        return make_expsum(A, b)
    except ValueError as exc:
        raise ProblemFormatError(str(exc)) from None


def dump_problem(program: ConvexProgram) -> str:
    """Serialize a built-in program; ``parse_problem`` restores it exactly."""
    if program.family is Family.GENERIC:
        raise ValueError("generic programs have no file representation")
    doc = {"family": program.family.value, "n": program.n, "m": program.m}
    if program.c is not None:
        doc["c"] = program.c.tolist()
    if program.Q is not None:
        doc["Q"] = program.Q.tolist()
    doc["A"] = program.A.tolist()
    doc["b"] = program.b.tolist()
    return json.dumps(doc, indent=1)


def load_problem(path) -> ConvexProgram:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())
