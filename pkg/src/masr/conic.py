"""Conic-program container, LMI construction, and the solver bridge.

Every robust subproblem in this package is a conic program over a real
decision vector: complex quantities enter as real/imaginary pairs, bounded
uncertainty enters through S-procedure or sign-definiteness LMIs, and the
rate objectives contribute concave log terms (handled natively through the
exponential cone, no extra linearization).

Matrix families are affine maps x -> complex Hermitian matrix.  Builders
write them as plain numpy formulas; `affine_matrix_family` extracts the
constant and per-variable coefficient tensors by unit probes and verifies
affinity on random probes, so a nonlinear term sneaking into a constraint
formula fails loudly instead of silently corrupting the LMI.

The solver path is Clarabel's native API (fast, deterministic); on
numerical trouble the same problem is re-solved through CVXPY/SCS.  Either
way the returned point is re-checked against every block of the original
problem before it is reported as optimal.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

# Shared PSD feasibility tolerance for post-checks, in units of each
# block's own scale (blocks are max-abs normalized before solving).
PSD_TOL = 1e-6
RESIDUAL_TOL = 1e-6
HERMITIAN_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"


class VariableRegistry:
    """Name -> index-range bookkeeping for one problem's real decision vector."""

    def __init__(self):
        self._slices: dict[str, slice] = {}
        self._lower: list[float] = []
        self._upper: list[float] = []

    def add(self, name: str, size: int = 1, lower: float = -np.inf, upper: float = np.inf) -> slice:
        if name in self._slices:
            raise ValueError(f"variable {name!r} already registered")
        if size < 1:
            raise ValueError("size must be >= 1")
        s = slice(self.n, self.n + size)
        self._slices[name] = s
        self._lower.extend([lower] * size)
        self._upper.extend([upper] * size)
        return s

    def __getitem__(self, name: str) -> slice:
        return self._slices[name]

    def index(self, name: str) -> int:
        """Index of a scalar variable."""
        s = self._slices[name]
        if s.stop - s.start != 1:
            raise ValueError(f"{name!r} is not scalar")
        return s.start

    @property
    def n(self) -> int:
        return len(self._lower)

    @property
    def names(self) -> list[str]:
        return list(self._slices)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self._lower, float), np.asarray(self._upper, float)


@dataclass(frozen=True, eq=False)
class AffineFamily:
    """Affine map x -> const + sum_i x_i coefs[i] (complex-valued)."""

    const: np.ndarray  # shape S
    coefs: np.ndarray  # shape (n_vars,) + S

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.const + np.tensordot(np.asarray(x, float), self.coefs, axes=1)

    @property
    def n_vars(self) -> int:
        return self.coefs.shape[0]


def affine_matrix_family(
    fn: Callable[[np.ndarray], np.ndarray], n_vars: int, *, check: bool = True, seed: int = 0
) -> AffineFamily:
    """Extract an AffineFamily from a numpy formula by unit probes.

    fn must be affine in x; verified on a random probe when check=True.
    """
    zero = np.zeros(n_vars)
    const = np.asarray(fn(zero), dtype=complex)
    coefs = np.zeros((n_vars,) + const.shape, dtype=complex)
    probe = np.zeros(n_vars)
    for i in range(n_vars):
        probe[i] = 1.0
        coefs[i] = np.asarray(fn(probe), dtype=complex) - const
        probe[i] = 0.0
    family = AffineFamily(const=const, coefs=coefs)
    if check:
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(n_vars)
        direct = np.asarray(fn(x), dtype=complex)
        scale = max(np.abs(direct).max(initial=0.0), np.abs(const).max(initial=0.0), 1.0)
        if not np.allclose(direct, family(x), atol=1e-8 * scale, rtol=1e-8):
            raise ValueError("matrix formula is not affine in the decision variables")
    return family


def constant_family(value: np.ndarray, n_vars: int) -> AffineFamily:
    value = np.asarray(value, dtype=complex)
    return AffineFamily(const=value, coefs=np.zeros((n_vars,) + value.shape, dtype=complex))


def complex_to_real_embedding(H: np.ndarray) -> np.ndarray:
    """[[Re H, -Im H], [Im H, Re H]]; PSD iff H is, eigenvalues duplicated."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(np.abs(H).max(initial=0.0), 1.0)
    if np.abs(H - H.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    H = 0.5 * (H + H.conj().T)
    re, im = H.real, H.imag
    return np.block([[re, -im], [im, re]])


@dataclass(frozen=True, eq=False)
class LmiBlock:
    """Real symmetric PSD constraint: const + sum_i x_i coefs[i] >= 0."""

    name: str
    const: np.ndarray  # (d, d)
    coefs: np.ndarray  # (n_vars, d, d)

    def __post_init__(self):
        d = self.const.shape[0]
        if self.const.shape != (d, d) or self.coefs.shape[1:] != (d, d):
            raise ValueError("inconsistent LMI dimensions")
        scale = max(np.abs(self.const).max(initial=0.0), np.abs(self.coefs).max(initial=0.0), 1.0)
        sym_err = max(
            np.abs(self.const - self.const.T).max(initial=0.0),
            np.abs(self.coefs - np.transpose(self.coefs, (0, 2, 1))).max(initial=0.0),
        )
        if sym_err > 1e-12 * scale:
            raise ValueError(f"LMI block {self.name!r} not symmetric")

    @property
    def dim(self) -> int:
        return self.const.shape[0]

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.const + np.tensordot(np.asarray(x, float), self.coefs, axes=1)

    def min_eigenvalue(self, x: np.ndarray) -> float:
        return float(np.linalg.eigvalsh(self.evaluate(x))[0])


def hermitian_lmi(family: AffineFamily, name: str) -> LmiBlock:
    """Embed a complex Hermitian affine family as a real symmetric LmiBlock."""
    const = complex_to_real_embedding(family.const)
    coefs = np.stack([complex_to_real_embedding(c) for c in family.coefs]) if family.n_vars else np.zeros((0,) + const.shape)
    return LmiBlock(name=name, const=const, coefs=coefs)


def s_procedure_lmi(
    q0: AffineFamily,
    g0: AffineFamily,
    p0: AffineFamily,
    q1: np.ndarray,
    g1: np.ndarray,
    p1: float,
    multiplier: int,
    *,
    extra_balls: Sequence[tuple[np.ndarray, np.ndarray, float, int]] = (),
    balance: bool = False,
    name: str = "s-procedure",
) -> LmiBlock:
    """Bordered LMI certifying a robust quadratic inequality.

    Certifies: for all d with d^H q1 d + 2Re{g1^H d} + p1 <= 0 (and each
    extra ball constraint), the affine-in-x quadratic satisfies
    d^H Q0(x) d + 2Re{g0(x)^H d} + p0(x) >= 0.  Emits
        [[Q0 + sum_j w_j q_j,  g0 + sum_j w_j g_j],
         [       .^H        ,  p0 + sum_j w_j p_j]] >= 0
    with each multiplier w_j a registered nonnegative variable.  Lossless
    for a single ball; sound (possibly conservative) for several.

    With balance=True each ball is re-parameterized to the unit ball:
    d = D d~ with D carrying the ball radii, and the ball inequality is
    divided by its radius^2 (the multiplier absorbs the factor).  Both
    substitutions are exact for any positive scaling, so this conditions
    the cone without changing the certified set; near a binding constraint
    it also equalizes the Q0 block and the corner scalar, which is what
    keeps the interior-point iteration count low.  Applied only when every
    ball is a plain diagonal-quadratic ball (our use case) with negative
    constant; otherwise that ball keeps its coordinates.
    """
    m = q0.const.shape[0]
    if q0.const.shape != (m, m) or g0.const.shape != (m,):
        raise ValueError("S-procedure dimension mismatch between Q0 and g0")
    n_vars = q0.n_vars
    if g0.n_vars != n_vars or p0.n_vars != n_vars:
        raise ValueError("families span different variable counts")
    if p0.const.shape != ():
        raise ValueError("p0 must be scalar")

    balls = [(np.asarray(q1, complex), np.asarray(g1, complex), float(p1), int(multiplier))]
    balls += [(np.asarray(q, complex), np.asarray(g, complex), float(p), int(j)) for (q, g, p, j) in extra_balls]
    for q, g, p, j in balls:
        if q.shape != (m, m) or g.shape != (m,):
            raise ValueError("ball dimension mismatch")
        if not 0 <= j < n_vars:
            raise ValueError("multiplier index out of range")

    diagonal = all(
        np.abs(q - np.diag(np.diag(q))).max(initial=0.0) == 0.0 and np.abs(g).max(initial=0.0) == 0.0
        for q, g, _, _ in balls
    )
    if balance and diagonal:
        dvec = np.ones(m)
        for q, _, p, _ in balls:
            diag = np.abs(np.diag(q))
            support = diag > 0.0
            if p < 0.0 and support.any():
                dvec[support] = np.sqrt(-p / diag[support])
        outer = np.outer(dvec, dvec)
        q0 = AffineFamily(const=q0.const * outer, coefs=q0.coefs * outer)
        g0 = AffineFamily(const=g0.const * dvec, coefs=g0.coefs * dvec)
        balls = [
            (q * outer / (-p), g * dvec / (-p), -1.0, j) if p < 0.0 else (q * outer, g * dvec, p, j)
            for q, g, p, j in balls
        ]

    dim = m + 1
    const = np.zeros((dim, dim), dtype=complex)
    coefs = np.zeros((n_vars, dim, dim), dtype=complex)

    def place(dst, Q, g, p):
        dst[:m, :m] += Q
        dst[:m, m] += g
        dst[m, :m] += np.conj(g)
        dst[m, m] += p

    place(const, q0.const, g0.const, p0.const)
    for i in range(n_vars):
        place(coefs[i], q0.coefs[i], g0.coefs[i], p0.coefs[i])
    for q, g, p, j in balls:
        place(coefs[j], q, g, p)

    return hermitian_lmi(AffineFamily(const=const, coefs=coefs), name)


def sign_definiteness_lmi(
    B: AffineFamily,
    U: AffineFamily,
    V: np.ndarray,
    xi: float,
    multiplier: int,
    *,
    name: str = "sign-definiteness",
) -> LmiBlock:
    """Bordered LMI certifying B(x) + U^H X^H V + V^H X U >= 0 for ||X|| <= xi.

    V must be constant (the multiplier multiplies its Gram matrix); U may be
    affine in the decisions.  Emits
        [[B - b V^H V, xi U^H],
         [  xi U     ,  b I  ]] >= 0
    with b the registered nonnegative multiplier variable.
    """
    m = B.const.shape[0]
    k = U.const.shape[0]
    if B.const.shape != (m, m) or U.const.shape != (k, m):
        raise ValueError("sign-definiteness dimension mismatch between B and U")
    V = np.asarray(V, dtype=complex)
    if V.ndim != 2 or V.shape[1] != m:
        raise ValueError("V must have the same column dimension as B")
    if B.n_vars != U.n_vars:
        raise ValueError("families span different variable counts")
    n_vars = B.n_vars
    if not 0 <= multiplier < n_vars:
        raise ValueError("multiplier index out of range")

    gram = V.conj().T @ V
    dim = m + k
    const = np.zeros((dim, dim), dtype=complex)
    coefs = np.zeros((n_vars, dim, dim), dtype=complex)

    def place(dst, Bpart, Upart):
        dst[:m, :m] += Bpart
        dst[m:, :m] += xi * Upart
        dst[:m, m:] += xi * Upart.conj().T

    place(const, B.const, U.const)
    for i in range(n_vars):
        place(coefs[i], B.coefs[i], U.coefs[i])
    coefs[multiplier, :m, :m] += -gram
    coefs[multiplier, m:, m:] += np.eye(k)

    return hermitian_lmi(AffineFamily(const=const, coefs=coefs), name)


@dataclass(frozen=True, eq=False)
class LogTerm:
    """Objective contribution weight * log(a @ x + b), natural log."""

    weight: float
    a: np.ndarray  # (n_vars,)
    b: float


@dataclass(frozen=True, eq=False)
class LogEpigraph:
    """Constraint x[var] <= log(a @ x + b), natural log."""

    var: int
    a: np.ndarray
    b: float


@dataclass(frozen=True, eq=False)
class SocBlock:
    """Second-order cone constraint ||A x + b||_2 <= c @ x + d."""

    name: str
    A: np.ndarray  # (m, n_vars)
    b: np.ndarray  # (m,)
    c: np.ndarray  # (n_vars,)
    d: float

    def margin(self, x: np.ndarray) -> float:
        return float(self.c @ x + self.d - np.linalg.norm(self.A @ x + self.b))


@dataclass(eq=False)
class ConicProblem:
    """Maximize linear + concave-log objective over linear/SOC/PSD blocks."""

    n_vars: int
    var_names: list[str]
    linear_objective: np.ndarray  # (n_vars,)
    objective_constant: float = 0.0
    log_terms: list[LogTerm] = field(default_factory=list)
    eq_A: Optional[np.ndarray] = None  # (p, n_vars)
    eq_b: Optional[np.ndarray] = None
    ineq_G: Optional[np.ndarray] = None  # G x <= h
    ineq_h: Optional[np.ndarray] = None
    soc_blocks: list[SocBlock] = field(default_factory=list)
    lmi_blocks: list[LmiBlock] = field(default_factory=list)
    log_epigraphs: list[LogEpigraph] = field(default_factory=list)
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.n_vars
        if self.linear_objective.shape != (n,):
            raise ValueError("objective size mismatch")
        for blk in self.lmi_blocks:
            if blk.coefs.shape[0] != n:
                raise ValueError(f"LMI block {blk.name!r} spans wrong variable count")
        for t in self.log_terms:
            if t.a.shape != (n,):
                raise ValueError("log term size mismatch")
        for e in self.log_epigraphs:
            if e.a.shape != (n,) or not 0 <= e.var < n:
                raise ValueError("log epigraph size mismatch")
        if self.lower is None:
            self.lower = np.full(n, -np.inf)
        if self.upper is None:
            self.upper = np.full(n, np.inf)

    def objective_value(self, x: np.ndarray) -> float:
        val = self.objective_constant + float(self.linear_objective @ x)
        for t in self.log_terms:
            val += t.weight * math.log(float(t.a @ x + t.b))
        return val

    def describe(self) -> str:
        """Structured text dump: dimensions, block list, sparsity."""
        out = io.StringIO()
        out.write(f"conic problem: {self.n_vars} variables\n")
        out.write(f"  variables: {', '.join(self.var_names)}\n")
        nnz = int(np.count_nonzero(self.linear_objective))
        out.write(f"  objective: linear nnz={nnz}, log terms={len(self.log_terms)}\n")
        if self.eq_A is not None:
            out.write(f"  equalities: {self.eq_A.shape[0]} rows, nnz={int(np.count_nonzero(self.eq_A))}\n")
        if self.ineq_G is not None:
            out.write(f"  inequalities: {self.ineq_G.shape[0]} rows, nnz={int(np.count_nonzero(self.ineq_G))}\n")
        nfin = int(np.isfinite(self.lower).sum() + np.isfinite(self.upper).sum())
        out.write(f"  finite bounds: {nfin}\n")
        for blk in self.soc_blocks:
            out.write(f"  soc {blk.name!r}: dim {blk.A.shape[0] + 1}\n")
        for blk in self.lmi_blocks:
            dens = np.count_nonzero(blk.coefs) / max(blk.coefs.size, 1)
            out.write(f"  lmi {blk.name!r}: dim {blk.dim}, coef density {dens:.3f}\n")
        out.write(f"  log epigraphs: {len(self.log_epigraphs)}\n")
        return out.getvalue()


@dataclass(frozen=True)
class SolverTolerances:
    gap: float = 1e-9
    feas: float = 1e-9
    max_iter: int = 200
    psd_check: float = PSD_TOL
    residual_check: float = RESIDUAL_TOL


@dataclass(eq=False)
class ConicSolution:
    status: str
    x: Optional[np.ndarray]
    objective: Optional[float]
    solver: str
    diagnostics: dict


def _svec_indices(d: int) -> tuple[np.ndarray, np.ndarray]:
    # upper triangle, column-major: (0,0),(0,1),(1,1),(0,2),(1,2),(2,2),...
    cols = np.concatenate([np.full(j + 1, j) for j in range(d)])
    rows = np.concatenate([np.arange(j + 1) for j in range(d)])
    return rows, cols


def _svec(M: np.ndarray) -> np.ndarray:
    d = M.shape[0]
    rows, cols = _svec_indices(d)
    vals = M[rows, cols].astype(float).copy()
    vals[rows != cols] *= math.sqrt(2.0)
    return vals


def _normalized_blocks(problem: ConicProblem):
    """Max-abs normalize each block (cone membership is scale-invariant)."""
    lmis = []
    for blk in problem.lmi_blocks:
        s = max(np.abs(blk.const).max(initial=0.0), np.abs(blk.coefs).max(initial=0.0), 1e-300)
        lmis.append((blk.const / s, blk.coefs / s))
    socs = []
    for blk in problem.soc_blocks:
        s = max(
            np.abs(blk.A).max(initial=0.0), np.abs(blk.b).max(initial=0.0),
            np.abs(blk.c).max(initial=0.0), abs(blk.d), 1e-300,
        )
        socs.append((blk.A / s, blk.b / s, blk.c / s, blk.d / s))
    return lmis, socs


def _row_normalize(G: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scale = np.maximum(np.max(np.abs(G), axis=1, initial=0.0), np.abs(h))
    scale = np.where(scale > 0, scale, 1.0)
    return G / scale[:, None], h / scale


def feasibility_report(problem: ConicProblem, x: np.ndarray, tol=None) -> dict:
    """Re-check every block of the original problem at x.

    tol may be a SolverTolerances or a plain float applied to both the
    residual and PSD checks.
    """
    if tol is None:
        tol = SolverTolerances()
    elif not isinstance(tol, SolverTolerances):
        tol = SolverTolerances(psd_check=float(tol), residual_check=float(tol))
    report: dict = {}
    ok = True
    if problem.eq_A is not None and problem.eq_A.size:
        A, b = _row_normalize(problem.eq_A, problem.eq_b)
        r = float(np.abs(A @ x - b).max(initial=0.0))
        report["eq_residual"] = r
        ok &= r < tol.residual_check
    if problem.ineq_G is not None and problem.ineq_G.size:
        G, h = _row_normalize(problem.ineq_G, problem.ineq_h)
        slack = float((h - G @ x).min(initial=np.inf))
        report["ineq_min_slack"] = slack
        ok &= slack > -tol.residual_check
    lb_viol = float(np.maximum(problem.lower - x, 0.0).max(initial=0.0))
    ub_viol = float(np.maximum(x - problem.upper, 0.0).max(initial=0.0))
    report["bound_violation"] = max(lb_viol, ub_viol)
    ok &= report["bound_violation"] < tol.residual_check
    lmis, socs = _normalized_blocks(problem)
    if socs:
        margins = [float(c @ x + d - np.linalg.norm(A @ x + b)) for A, b, c, d in socs]
        report["soc_min_margin"] = min(margins)
        ok &= report["soc_min_margin"] > -tol.residual_check
    if lmis:
        eigs = [float(np.linalg.eigvalsh(c + np.tensordot(x, k, axes=1))[0]) for c, k in lmis]
        report["lmi_min_eig"] = min(eigs)
        ok &= report["lmi_min_eig"] > -tol.psd_check
    args = [float(t.a @ x + t.b) for t in problem.log_terms]
    args += [float(e.a @ x + e.b) for e in problem.log_epigraphs]
    if args:
        report["log_min_arg"] = min(args)
        ok &= report["log_min_arg"] > 0.0
    for e in problem.log_epigraphs:
        gap = math.log(max(float(e.a @ x + e.b), 1e-300)) - x[e.var]
        ok &= gap > -tol.residual_check
    report["feasible"] = bool(ok)
    return report


def _solve_clarabel(problem: ConicProblem, tol: SolverTolerances):
    import clarabel

    n = problem.n_vars
    n_logs = len(problem.log_terms)
    nz = n + n_logs

    A_rows: list[np.ndarray] = []
    b_rows: list[float] = []
    cones = []

    def add_row(coef_x: np.ndarray, rhs: float, aux: Optional[int] = None, aux_coef: float = 0.0):
        # encodes s = rhs - coef_x @ x - aux_coef * t_aux
        row = np.zeros(nz)
        row[:n] = coef_x
        if aux is not None:
            row[n + aux] = aux_coef
        A_rows.append(row)
        b_rows.append(rhs)

    if problem.eq_A is not None and problem.eq_A.size:
        A, b = _row_normalize(problem.eq_A, problem.eq_b)
        for i in range(A.shape[0]):
            add_row(A[i], float(b[i]))
        cones.append(clarabel.ZeroConeT(A.shape[0]))

    n_nonneg = 0
    if problem.ineq_G is not None and problem.ineq_G.size:
        G, h = _row_normalize(problem.ineq_G, problem.ineq_h)
        for i in range(G.shape[0]):
            add_row(G[i], float(h[i]))
        n_nonneg += G.shape[0]
    for i in range(n):
        if np.isfinite(problem.lower[i]):
            e = np.zeros(n)
            e[i] = -1.0
            add_row(e, -float(problem.lower[i]))
            n_nonneg += 1
        if np.isfinite(problem.upper[i]):
            e = np.zeros(n)
            e[i] = 1.0
            add_row(e, float(problem.upper[i]))
            n_nonneg += 1
    if n_nonneg:
        cones.append(clarabel.NonnegativeConeT(n_nonneg))

    lmis, socs = _normalized_blocks(problem)
    for (A, b, c, d), blk in zip(socs, problem.soc_blocks):
        add_row(-c, d)
        for i in range(A.shape[0]):
            # s = b_i + A_i @ x: the cone sees (c@x+d, Ax+b)
            add_row(-A[i], float(b[i]))
        cones.append(clarabel.SecondOrderConeT(A.shape[0] + 1))

    for (const, coefs), blk in zip(lmis, problem.lmi_blocks):
        d = const.shape[0]
        bvec = _svec(const)
        cmat = np.stack([_svec(coefs[i]) for i in range(problem.n_vars)], axis=1) if problem.n_vars else np.zeros((bvec.size, 0))
        for r in range(bvec.size):
            # s = bvec + cmat @ x  must land in the PSD cone
            add_row(-cmat[r], float(bvec[r]))
        cones.append(clarabel.PSDTriangleConeT(d))

    for j, t in enumerate(problem.log_terms):
        # t_j <= log(a @ x + b):  s = (t_j, 1, a @ x + b) in K_exp
        add_row(np.zeros(n), 0.0, aux=j, aux_coef=-1.0)
        add_row(np.zeros(n), 1.0)
        add_row(-t.a, float(t.b))
        cones.append(clarabel.ExponentialConeT())
    for e in problem.log_epigraphs:
        row = np.zeros(n)
        row[e.var] = -1.0
        add_row(row, 0.0)
        add_row(np.zeros(n), 1.0)
        add_row(-e.a, float(e.b))
        cones.append(clarabel.ExponentialConeT())

    q = np.zeros(nz)
    q[:n] = -problem.linear_objective
    for j, t in enumerate(problem.log_terms):
        q[n + j] = -t.weight

    A = sp.csc_matrix(np.array(A_rows)) if A_rows else sp.csc_matrix((0, nz))
    b = np.asarray(b_rows)
    P = sp.csc_matrix((nz, nz))

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = tol.max_iter
    settings.tol_gap_abs = tol.gap
    settings.tol_gap_rel = tol.gap
    settings.tol_feas = tol.feas
    solver = clarabel.DefaultSolver(P, q, A, b, cones, settings)
    sol = solver.solve()
    status = str(sol.status)
    x = np.asarray(sol.x[:n]) if sol.x is not None else None
    return status, x


def _solve_cvxpy(problem: ConicProblem, tol: SolverTolerances):
    import cvxpy as cp

    n = problem.n_vars
    x = cp.Variable(n)
    constraints = []
    if problem.eq_A is not None and problem.eq_A.size:
        A, b = _row_normalize(problem.eq_A, problem.eq_b)
        constraints.append(A @ x == b)
    if problem.ineq_G is not None and problem.ineq_G.size:
        G, h = _row_normalize(problem.ineq_G, problem.ineq_h)
        constraints.append(G @ x <= h)
    finite_l = np.isfinite(problem.lower)
    finite_u = np.isfinite(problem.upper)
    if finite_l.any():
        constraints.append(x[finite_l] >= problem.lower[finite_l])
    if finite_u.any():
        constraints.append(x[finite_u] <= problem.upper[finite_u])
    lmis, socs = _normalized_blocks(problem)
    for A, b, c, d in socs:
        constraints.append(cp.SOC(c @ x + d, A @ x + b))
    for const, coefs in lmis:
        d = const.shape[0]
        flat = coefs.reshape(problem.n_vars, d * d)
        M = cp.reshape(x @ flat, (d, d), order="C") + const
        constraints.append((M + M.T) / 2 >> 0)
    objective = problem.linear_objective @ x
    for t in problem.log_terms:
        objective = objective + t.weight * cp.log(t.a @ x + t.b)
    for e in problem.log_epigraphs:
        constraints.append(x[e.var] <= cp.log(e.a @ x + e.b))
    prob = cp.Problem(cp.Maximize(objective), constraints)
    try:
        with warnings.catch_warnings():
            # inaccurate-solution warnings are expected on this fallback
            # path; the caller re-checks feasibility explicitly
            warnings.simplefilter("ignore")
            # eps well under the 1e-6 re-check threshold but loose enough
            # that the fallback does not dominate stage runtime
            prob.solve(solver=cp.SCS, eps=1e-8, max_iters=100_000, verbose=False)
    except cp.error.SolverError:
        return "SolverError", None
    xv = None if x.value is None else np.asarray(x.value, float)
    return str(prob.status), xv


def solve_conic(problem: ConicProblem, tolerances: Optional[SolverTolerances] = None) -> ConicSolution:
    """Solve a ConicProblem; status is optimal / infeasible / numerical-failure.

    A point is only reported optimal after all original blocks re-check
    feasible at the solver tolerances; failures are never silent.
    """
    tol = tolerances or SolverTolerances()
    status, x = _solve_clarabel(problem, tol)
    diagnostics: dict = {"clarabel_status": status}

    if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return ConicSolution(status=INFEASIBLE, x=None, objective=None, solver="clarabel", diagnostics=diagnostics)

    if status in ("Solved", "AlmostSolved") and x is not None:
        report = feasibility_report(problem, x, tol)
        diagnostics["feasibility"] = report
        if report["feasible"]:
            return ConicSolution(
                status=OPTIMAL, x=x, objective=problem.objective_value(x), solver="clarabel", diagnostics=diagnostics
            )

    # Clarabel struggled: re-solve through CVXPY/SCS before giving up.
    status2, x2 = _solve_cvxpy(problem, tol)
    diagnostics["scs_status"] = status2
    if status2 == "infeasible":
        return ConicSolution(status=INFEASIBLE, x=None, objective=None, solver="scs", diagnostics=diagnostics)
    if x2 is not None:
        report = feasibility_report(problem, x2, tol)
        diagnostics["feasibility"] = report
        if report["feasible"]:
            return ConicSolution(
                status=OPTIMAL, x=x2, objective=problem.objective_value(x2), solver="scs", diagnostics=diagnostics
            )
    return ConicSolution(status=NUMERICAL_FAILURE, x=x if x2 is None else x2, objective=None, solver="scs", diagnostics=diagnostics)
