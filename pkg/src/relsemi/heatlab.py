"""Dirichlet-Laplacian relations on masked grids and domain experiments.

The relation attached to a mask pairs ``(u, f)`` where ``u`` vanishes off
the masked nodes and ``f`` equals the 5-point Laplacian of ``u`` on them;
``f`` is unconstrained elsewhere, which is exactly the multivalued part.
Everything here works in node coordinates: resolvents and semigroups act
through sparse factorizations on the masked block and by zero off it, so
no dense graph basis is ever required (a dense relation is available for
small grids as a cross-check).

Operator norms are sup-norms throughout (max absolute row sums), matching
the contraction and maximum-principle structure of the M-matrix stencil.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from scipy.linalg import solve_triangular

from .converge import ConvergenceReport, trotter_kato_report
from .errors import (
    ContractFailed,
    InvalidInput,
    OutsideSector,
    SolverBreakdown,
    VanishingMultiplier,
)
from .grids import DomainMask, Grid, disk, inscribed_polygon, mask_from_shapes, slit
from .relation import LinearRelation
from .subspace import Subspace

DENSE_ROWSUM_LIMIT = 3000  # masked-block size up to which resolvents go dense


def stencil_on_flags(grid: Grid, flags) -> sp.csr_matrix:
    """5-point Laplacian on the flagged nodes, zero Dirichlet outside.

    Returns an n-by-n matrix over the flagged nodes in flat order; couplings
    to un-flagged neighbours are dropped, which is the matrix form of
    reading ``u = 0`` there.
    """
    m = grid.m
    flags = np.asarray(flags, dtype=bool).ravel()
    idx = np.flatnonzero(flags)
    n = idx.size
    if n == 0:
        return sp.csr_matrix((0, 0))
    pos = np.full(m * m, -1, dtype=np.int64)
    pos[idx] = np.arange(n)
    h2 = grid.h ** 2
    ix, iy = np.divmod(idx, m)
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, -4.0 / h2)]
    for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        jx, jy = ix + dx, iy + dy
        inb = (jx >= 0) & (jx < m) & (jy >= 0) & (jy < m)
        tgt = np.where(inb, pos[np.where(inb, jx * m + jy, 0)], -1)
        keep = tgt >= 0
        rows.append(np.flatnonzero(keep))
        cols.append(tgt[keep])
        vals.append(np.full(int(keep.sum()), 1.0 / h2))
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n))
    return mat


class DirichletGridRelation:
    """Evaluator for the Dirichlet relation of one mask.

    Implements the convergence-report protocol (``state_dim``,
    ``resolvent_columns``, ``integrated_columns`` …) with sup-norm vector
    norms.  ``operator`` overrides the plain stencil (used by multiplier
    perturbations); it must act on the masked block in flat node order.
    """

    def __init__(self, mask: DomainMask, operator=None, multiplier=None,
                 label: str | None = None):
        self.mask = mask
        self.grid = mask.grid
        self.state_dim = mask.grid.n_nodes
        self.omega = mask.indices()
        self.op = stencil_on_flags(mask.grid, mask.values) if operator is None \
            else operator.tocsr()
        if self.op.shape != (self.omega.size, self.omega.size):
            raise InvalidInput("operator block does not match the mask")
        self.multiplier = multiplier
        self.label = label if label is not None else (mask.label or "mask")
        self._shift_lus = {}
        self._op_lu = None
        self._dist_lu = None

    # -- plumbing ---------------------------------------------------------

    @property
    def n_inside(self) -> int:
        return self.omega.size

    def _restrict(self, arr):
        return np.asarray(arr)[self.omega]

    def _embed(self, vals, like):
        out = np.zeros((self.state_dim,) + vals.shape[1:],
                       dtype=np.promote_types(vals.dtype, like.dtype))
        out[self.omega] = vals
        return out

    def _shift_lu(self, lam):
        key = complex(lam)
        if key not in self._shift_lus:
            real = key.imag == 0.0
            dt = float if real else complex
            mat = (key.real if real else key) * sp.identity(
                self.n_inside, dtype=dt, format="csc") - self.op.astype(dt)
            self._shift_lus[key] = (spl.splu(mat.tocsc()), real)
        return self._shift_lus[key]

    @staticmethod
    def _lu_solve(lu, real_factor, b):
        if real_factor and np.iscomplexobj(b):
            return lu.solve(np.ascontiguousarray(b.real)) \
                + 1j * lu.solve(np.ascontiguousarray(b.imag))
        if not real_factor:
            b = np.asarray(b, dtype=complex)
        return lu.solve(np.ascontiguousarray(b))

    def _operator_lu(self):
        if self._op_lu is None:
            self._op_lu = spl.splu(self.op.tocsc().astype(float))
        return self._op_lu

    # -- evaluator protocol -------------------------------------------------

    def vec_norm(self, x) -> float:
        x = np.asarray(x)
        return float(np.max(np.abs(x))) if x.size else 0.0

    def m_dissipative_ok(self) -> bool:
        try:
            supnorm_contraction(self, lams=(1.0,))
            surjective_solve(self, np.ones(self.state_dim))
            return True
        except (ContractFailed, SolverBreakdown):
            return False

    def range_shift_full(self, mu) -> bool:
        # off-mask coordinates are absorbed by the multivalued part, so only
        # the masked block needs to be solvable
        if self.n_inside == 0:
            return True
        mu = complex(mu)
        lu, real = self._shift_lu(mu)
        b = np.ones(self.n_inside)
        x = self._lu_solve(lu, real, b)
        res = np.linalg.norm(mu * x - self.op @ x - b) / math.sqrt(self.n_inside)
        return bool(res <= 1e-8)

    def resolvent_columns(self, lam, fs):
        fs = np.asarray(fs)
        if self.n_inside == 0:
            return np.zeros(fs.shape, dtype=np.promote_types(fs.dtype, type(lam)))
        lu, real = self._shift_lu(lam)
        sol = self._lu_solve(lu, real, fs[self.omega])
        return self._embed(sol, fs)

    def semigroup_columns(self, t, fs):
        fs = np.asarray(fs)
        if self.n_inside == 0 or t == 0:
            out = np.zeros_like(fs, dtype=np.promote_types(fs.dtype, float))
            out[self.omega] = fs[self.omega]
            return out
        w = spl.expm_multiply(float(t) * self.op, fs[self.omega])
        return self._embed(w, fs)

    def holomorphic_columns(self, z, fs):
        z = complex(z)
        if z != 0 and z.real <= 0:
            raise OutsideSector(f"z={z!r} outside the right half-plane")
        fs = np.asarray(fs)
        if self.n_inside == 0 or z == 0:
            out = np.zeros(fs.shape, dtype=np.promote_types(fs.dtype, complex))
            out[self.omega] = fs[self.omega]
            return out
        w = spl.expm_multiply(z * self.op.astype(complex),
                              fs[self.omega].astype(complex))
        return self._embed(w, fs)

    def integrated_columns(self, t, fs):
        fs = np.asarray(fs)
        if self.n_inside == 0 or t == 0:
            return np.zeros_like(fs, dtype=np.promote_types(fs.dtype, float))
        b = fs[self.omega]
        w = spl.expm_multiply(float(t) * self.op, b)
        sol = self._operator_lu().solve(np.ascontiguousarray(w - b))
        return self._embed(sol, fs)

    def integrated_trajectory(self, ts, fs):
        """All integrated-action values over a time grid in one sweep."""
        ts = np.asarray(ts, dtype=float)
        fs = np.asarray(fs)
        if np.any(ts < 0):
            raise InvalidInput("time grid must be nonnegative")
        uniform = ts.size >= 2 and np.allclose(np.diff(ts), ts[1] - ts[0],
                                               rtol=1e-12, atol=1e-14)
        if self.n_inside == 0:
            return np.zeros((ts.size,) + fs.shape)
        if not uniform:
            return np.stack([self.integrated_columns(t, fs) for t in ts])
        b = fs[self.omega]
        w = spl.expm_multiply(self.op, b, start=ts[0], stop=ts[-1],
                              num=ts.size, endpoint=True)
        lu = self._operator_lu()
        out = np.zeros((ts.size,) + fs.shape,
                       dtype=np.promote_types(fs.dtype, float))
        for j in range(ts.size):
            out[j][self.omega] = lu.solve(np.ascontiguousarray(w[j] - b))
        return out

    def semigroup_trajectory(self, ts, u0):
        ts = np.asarray(ts, dtype=float)
        u0 = np.asarray(u0, dtype=float)
        if self.n_inside == 0:
            return np.zeros((ts.size,) + u0.shape)
        uniform = ts.size >= 2 and np.allclose(np.diff(ts), ts[1] - ts[0],
                                               rtol=1e-12, atol=1e-14)
        if not uniform:
            return np.stack([self.semigroup_columns(t, u0) for t in ts])
        w = spl.expm_multiply(self.op, u0[self.omega], start=ts[0],
                              stop=ts[-1], num=ts.size, endpoint=True)
        out = np.zeros((ts.size,) + u0.shape)
        for j in range(ts.size):
            out[j][self.omega] = w[j]
        return out

    # -- graph geometry -----------------------------------------------------

    def _distance_lu(self):
        if self._dist_lu is None:
            n = self.n_inside
            gram = sp.identity(n, format="csc") + (self.op.T @ self.op).tocsc()
            self._dist_lu = spl.splu(gram)
        return self._dist_lu

    def _nearest_coeff(self, u, f):
        uin = np.asarray(u)[self.omega]
        fin = np.asarray(f)[self.omega]
        rhs = uin + self.op.T @ fin
        if np.iscomplexobj(rhs):
            lu = self._distance_lu()
            return lu.solve(np.ascontiguousarray(rhs.real)) \
                + 1j * lu.solve(np.ascontiguousarray(rhs.imag))
        return self._distance_lu().solve(np.ascontiguousarray(rhs))

    def graph_distance(self, u, f) -> float:
        """Euclidean distance from the pair ``(u, f)`` to the graph."""
        u = np.asarray(u)
        f = np.asarray(f)
        off = np.delete(u, self.omega)
        if self.n_inside == 0:
            return float(np.linalg.norm(u))
        a = self._nearest_coeff(u, f)
        du = a - u[self.omega]
        df = self.op @ a - f[self.omega]
        return float(math.sqrt(np.linalg.norm(off) ** 2
                               + np.linalg.norm(du) ** 2
                               + np.linalg.norm(df) ** 2))

    def nearest_pair(self, u, f):
        """Orthogonal projection of ``(u, f)`` onto the graph."""
        u = np.asarray(u, dtype=float)
        f = np.asarray(f, dtype=float)
        ustar = np.zeros_like(u)
        fstar = f.copy()
        if self.n_inside:
            a = self._nearest_coeff(u, f)
            ustar[self.omega] = a
            fstar[self.omega] = self.op @ a
        return ustar, fstar

    # -- dense cross-check ---------------------------------------------------

    def dense_relation(self, max_dim: int = 2500) -> LinearRelation:
        """Explicit relation on the full node space; small grids only.

        The graph basis is assembled blockwise: the ``(e_j, L e_j)`` block
        is orthonormalized through a Cholesky factor of ``I + L^T L``, and
        the free off-mask block is already orthonormal and orthogonal to it.
        """
        big_n = self.state_dim
        if big_n > max_dim:
            raise InvalidInput(
                f"dense relation with {big_n} nodes exceeds max_dim={max_dim}")
        n = self.n_inside
        if n == 0:
            basis = np.vstack([np.zeros((big_n, big_n)), np.eye(big_n)])
            return LinearRelation.from_graph_subspace(Subspace(2 * big_n, basis))
        top = np.zeros((big_n, n))
        top[self.omega, np.arange(n)] = 1.0
        bot = np.zeros((big_n, n))
        bot[self.omega] = self.op.toarray()
        stacked = np.vstack([top, bot])
        gram = np.eye(n) + (self.op.T @ self.op).toarray()
        chol = np.linalg.cholesky(gram)
        ublock = solve_triangular(chol, stacked.T, lower=True).T
        off = np.setdiff1d(np.arange(big_n), self.omega)
        fblock = np.zeros((2 * big_n, big_n - n))
        fblock[big_n + off, np.arange(big_n - n)] = 1.0
        return LinearRelation.from_graph_subspace(
            Subspace(2 * big_n, np.hstack([ublock, fblock])))


def build_dirichlet_relation(mask: DomainMask) -> DirichletGridRelation:
    return DirichletGridRelation(mask)


# -- certificates ---------------------------------------------------------


@dataclass
class ContractionCertificate:
    lams: tuple
    norms: tuple        # sup operator norms of lam * R(lam)
    method: str
    resolvent_min: float  # most negative resolvent entry seen (positivity log)
    tol: float
    ok: bool


def supnorm_contraction(rel: DirichletGridRelation, lams=(0.1, 1.0, 10.0),
                        tol: float = 1e-12,
                        dense_limit: int = DENSE_ROWSUM_LIMIT) -> ContractionCertificate:
    """Certify ``‖λR(λ)‖_∞ ≤ 1 + tol`` on a positive λ-grid.

    Small blocks get exact max absolute row sums of the dense resolvent;
    larger ones use the single-solve bound valid for M-matrices (resolvent
    entrywise nonnegative, so ``|R|`` row sums equal ``R @ 1``), with the
    sign structure checked first.  Violations raise :class:`ContractFailed`
    with the offending row.
    """
    norms = []
    min_entry = math.inf
    method = "empty"
    for lam in lams:
        lam = float(lam)
        if lam <= 0:
            raise InvalidInput("contraction grid must be positive")
        n = rel.n_inside
        if n == 0:
            norms.append(0.0)
            continue
        lu, _ = rel._shift_lu(lam)
        if n <= dense_limit:
            method = "dense-rowsums"
            res = lu.solve(np.eye(n))
            rowsums = np.abs(res).sum(axis=1)
            min_entry = min(min_entry, float(res.min()))
        else:
            shifted = lam * sp.identity(n, format="csr") - rel.op
            offdiag = shifted - sp.diags(shifted.diagonal())
            if offdiag.nnz and offdiag.max() > 1e-14:
                raise ContractFailed("shifted operator is not an M-matrix; "
                                     "row-sum bound unavailable", lam=lam)
            method = "mmatrix-solve"
            rowsums = lu.solve(np.ones(n))
            min_entry = min(min_entry, float(rowsums.min()))
        worst = int(np.argmax(rowsums))
        norm = lam * float(rowsums[worst])
        if norm > 1.0 + tol:
            raise ContractFailed(f"sup-norm contraction violated: {norm:.3e}",
                                 lam=lam, row=worst)
        norms.append(norm)
    return ContractionCertificate(tuple(float(l) for l in lams), tuple(norms),
                                  method, min_entry, tol, True)


def surjective_solve(rel: DirichletGridRelation, f):
    """Solve ``A u ∋ f``: ``u`` vanishes off the mask, stencil matches on it."""
    f = np.asarray(f)
    if rel.n_inside == 0:
        return np.zeros_like(f, dtype=np.promote_types(f.dtype, float))
    lu = rel._operator_lu()
    fin = f[rel.omega]
    if np.iscomplexobj(fin):
        sol = lu.solve(np.ascontiguousarray(fin.real)) \
            + 1j * lu.solve(np.ascontiguousarray(fin.imag))
    else:
        sol = lu.solve(np.ascontiguousarray(fin))
    res = np.linalg.norm(rel.op @ sol - fin)
    if res > 1e-10 * max(np.linalg.norm(fin), 1.0):
        raise SolverBreakdown(f"stencil solve residual {res:.3e}")
    return rel._embed(sol, f)


# -- eigenvalues ----------------------------------------------------------


def _smallest_eigenvalue(lap: sp.csr_matrix, tol: float, maxiter: int = 3000) -> float:
    """Smallest eigenvalue of ``-lap`` by inverse-power iteration."""
    n = lap.shape[0]
    if n == 0:
        return math.inf
    a = (-lap).tocsc()
    if n == 1:
        return float(a[0, 0])
    lu = spl.splu(a)
    v = np.full(n, 1.0 / math.sqrt(n))
    lam = float(v @ (a @ v))
    # the Rayleigh value converges one order faster than the iterate, so a
    # change threshold well below tol leaves the remaining error negligible
    for _ in range(maxiter):
        w = lu.solve(v)
        w /= np.linalg.norm(w)
        new = float(w @ (a @ w))
        done = abs(new - lam) <= 1e-3 * tol * max(1.0, abs(new))
        v, lam = w, new
        if done:
            return lam
    raise SolverBreakdown("inverse-power iteration did not settle")


def first_eigenvalue(grid: Grid, node_set, tol: float = 1e-8) -> float:
    """Smallest Dirichlet eigenvalue of the node set; +inf when empty."""
    flags = np.asarray(node_set)
    if flags.dtype != bool:
        full = np.zeros(grid.n_nodes, dtype=bool)
        full[np.asarray(node_set, dtype=np.int64)] = True
        flags = full
    return _smallest_eigenvalue(stencil_on_flags(grid, flags), tol)


# -- 1-D interval helpers --------------------------------------------------


def interval_stencil(m: int, length: float = 1.0) -> sp.csr_matrix:
    if m < 1:
        raise InvalidInput("need at least one interior node")
    h = length / (m + 1)
    main = np.full(m, -2.0 / h ** 2)
    off = np.full(m - 1, 1.0 / h ** 2)
    return sp.diags([off, main, off], [-1, 0, 1]).tocsr()


def interval_relation(m: int, length: float = 1.0) -> LinearRelation:
    """Dense operator relation of the interval Laplacian (whole-domain mask)."""
    return LinearRelation.from_operator(interval_stencil(m, length).toarray())


def interval_nodes(m: int, length: float = 1.0) -> np.ndarray:
    h = length / (m + 1)
    return h * (np.arange(m) + 1)


def interval_first_eigenvalue(m: int, length: float = 1.0,
                              tol: float = 1e-8) -> float:
    return _smallest_eigenvalue(interval_stencil(m, length), tol)


def interval_eigenvalue_closed_form(m: int, length: float = 1.0, k: int = 1) -> float:
    h = length / (m + 1)
    return (4.0 / h ** 2) * math.sin(k * math.pi * h / (2.0 * length)) ** 2


def interval_solve(m: int, f, length: float = 1.0) -> np.ndarray:
    """1-D counterpart of :func:`surjective_solve` on the full interval."""
    f = np.asarray(f, dtype=float)
    lu = spl.splu(interval_stencil(m, length).tocsc())
    return lu.solve(f)


# -- multiplier perturbations ----------------------------------------------


@dataclass
class MultiplierEvidence:
    min_abs: float
    positive: bool
    sampled_margin: float           # worst sup-norm dissipativity margin seen
    contraction: ContractionCertificate | None


def multiplier_relation(m_values, rel: DirichletGridRelation,
                        m_min: float = 1e-8,
                        samples: int = 60, seed: int = 0) -> DirichletGridRelation:
    """Output-scaled relation ``(u, m·f)`` for a nonvanishing multiplier.

    ``m_values`` may live on the whole grid or only on the masked nodes.
    For strictly positive multipliers the sup-norm contraction certificate
    is re-derived on the scaled stencil; sampled dissipativity is recorded
    either way (one-sided evidence).
    """
    m_values = np.asarray(m_values, dtype=float).ravel()
    if m_values.size == rel.state_dim:
        mvals = m_values[rel.omega]
    elif m_values.size == rel.n_inside:
        mvals = m_values
    else:
        raise InvalidInput("multiplier length matches neither grid nor mask")
    if rel.n_inside:
        worst = int(np.argmin(np.abs(mvals)))
        if abs(mvals[worst]) < m_min:
            raise VanishingMultiplier(node=int(rel.omega[worst]),
                                      value=float(mvals[worst]))
    scaled = DirichletGridRelation(rel.mask, operator=sp.diags(mvals) @ rel.op,
                                   multiplier=mvals,
                                   label=rel.label + "*m")
    # one-sided sampled evidence: ‖λu‖_∞ ≤ ‖λu − f‖_∞ on random graph pairs
    rng = np.random.default_rng(seed)
    margin = math.inf
    if rel.n_inside:
        us = rng.standard_normal((rel.n_inside, samples))
        fs = scaled.op @ us
        for lam in (0.1, 1.0, 10.0):
            lhs = np.max(np.abs(lam * us), axis=0)
            rhs = np.max(np.abs(lam * us - fs), axis=0)
            margin = min(margin, float(np.min(rhs - lhs)))
    positive = bool(rel.n_inside == 0 or mvals.min() > 0)
    cert = supnorm_contraction(scaled, lams=(1.0,)) if positive else None
    scaled.evidence = MultiplierEvidence(
        float(np.min(np.abs(mvals))) if rel.n_inside else math.inf,
        positive, margin, cert)
    return scaled


# -- maximum principle -------------------------------------------------------


@dataclass
class MaxPrincipleReport:
    samples_used: int
    skipped: int
    slack_min: float    # min over samples of -f(x0); sign condition is ≥ -tol


def max_principle_check(rel: DirichletGridRelation, samples: int = 500,
                        seed: int = 0) -> MaxPrincipleReport:
    """Sign of ``f`` at positive sup-attaining mask nodes of graph pairs.

    For each sampled pair ``(u, Lu)`` the global max of ``u`` over the box
    (ties broken by lowest flat index) is located; whenever it is a mask
    node with a positive value, the stencil forces ``f ≤ 0`` there.
    """
    rng = np.random.default_rng(seed)
    if rel.n_inside == 0:
        return MaxPrincipleReport(0, samples, math.inf)
    us = rng.standard_normal((rel.n_inside, samples))
    fs = rel.op @ us
    used = 0
    skipped = 0
    slack = math.inf
    inside = np.zeros(rel.state_dim, dtype=bool)
    inside[rel.omega] = True
    for j in range(samples):
        u = np.zeros(rel.state_dim)
        u[rel.omega] = us[:, j]
        x0 = int(np.argmax(u))
        if u[x0] <= 0 or not inside[x0]:
            skipped += 1
            continue
        f0 = fs[np.searchsorted(rel.omega, x0), j]
        slack = min(slack, -float(f0))
        used += 1
    return MaxPrincipleReport(used, skipped, slack)


# -- sector uniformity --------------------------------------------------------


@dataclass
class SectorUniformity:
    eps: float
    labels: tuple
    per_label: tuple
    bound: float
    rays: int
    radii: int


def sector_uniformity(labs, eps: float = 0.1, rays: int = 5, radii: int = 7,
                      r_range=(1e-2, 1e3),
                      dense_limit: int = DENSE_ROWSUM_LIMIT) -> SectorUniformity:
    """One sup-norm bound for ``λ R(λ)`` over right-half-plane rays.

    Samples ``λ = r e^{iθ}``, ``|θ| ≤ π/2 − eps``, and records the max of
    the exact row-sum norm per family member; the evidence is the max over
    the family (a single finite bound for the whole family at this grid).
    """
    labs = list(labs)
    if not labs:
        raise InvalidInput("empty family")
    thetas = np.linspace(-(math.pi / 2 - eps), math.pi / 2 - eps, rays)
    rs = np.logspace(math.log10(r_range[0]), math.log10(r_range[1]), radii)
    per = []
    for lab in labs:
        worst = 0.0
        n = lab.n_inside
        if n > dense_limit:
            raise InvalidInput("family member too large for exact row sums")
        for th in thetas:
            for r in rs:
                lam = complex(r * math.cos(th), r * math.sin(th))
                if n == 0:
                    continue
                lu, real = lab._shift_lu(lam)
                res = lab._lu_solve(lu, real, np.eye(n, dtype=complex))
                worst = max(worst, abs(lam) * float(np.abs(res).sum(axis=1).max()))
        per.append(worst)
    return SectorUniformity(eps, tuple(lab.label for lab in labs), tuple(per),
                            max(per), rays, radii)


# -- domain convergence --------------------------------------------------------


@dataclass
class DomainConvergence:
    margins: tuple
    n0: dict                      # margin -> first 1-based index covering it, or None
    surplus_counts: np.ndarray    # |Ω_n \ closure(Ω)| per member
    surplus_eigs: np.ndarray
    surplus_measure: np.ndarray   # counts * h^2 (auxiliary trace)
    deficit_counts: np.ndarray    # |Ω \ Ω_n| per member
    deficit_eigs: np.ndarray
    expected_direction: str
    ok: bool


def _direction_ok(trace, direction: str) -> bool:
    vals = np.asarray(trace, dtype=float)
    if vals.size <= 1:
        return True
    prev, nxt = vals[:-1], vals[1:]
    if direction == "to_infinity":
        with np.errstate(invalid="ignore"):
            good = np.isinf(nxt) | (nxt >= prev * (1 - 1e-9) - 1e-9)
        return bool(np.all(good))
    if direction == "to_zero":
        finite = vals[np.isfinite(vals)]
        if finite.size <= 1:
            return True
        return bool(np.all(np.diff(finite) <= finite[:-1] * 1e-9 + 1e-9))
    raise InvalidInput(f"unknown direction {direction!r}")


def domain_convergence_check(masks, limit: DomainMask, margins=(1, 2, 3),
                             tol: float = 1e-8,
                             expected_direction: str = "to_infinity") -> DomainConvergence:
    """Discrete compact-inclusion and surplus-eigenvalue traces.

    Condition (a): for each margin, the limit's deep-interior node set must
    lie in every member from some index on.  Condition (b): the raw first
    eigenvalue of each member's surplus node set (off the limit's closure);
    the pass direction is configuration, defaulting to growth (vanishing
    surplus).  Deficit traces are recorded alongside as the inner-family
    counterpart.
    """
    masks = list(masks)
    if not masks:
        raise InvalidInput("empty mask family")
    grid = limit.grid
    if any(mk.grid != grid for mk in masks):
        raise InvalidInput("family and limit must share one grid")
    n0 = {}
    for margin in margins:
        kset = limit.interior_margin(margin)
        covered = [not np.any(kset & ~mk.values) for mk in masks]
        if not covered[-1]:
            n0[margin] = None
        else:
            first = len(masks) - 1
            while first > 0 and covered[first - 1]:
                first -= 1
            n0[margin] = first + 1
    closure = limit.closure()
    surplus = [mk.values & ~closure for mk in masks]
    deficit = [limit.values & ~mk.values for mk in masks]
    s_eigs = np.array([first_eigenvalue(grid, s, tol) for s in surplus])
    d_eigs = np.array([first_eigenvalue(grid, d, tol) for d in deficit])
    s_counts = np.array([int(s.sum()) for s in surplus])
    d_counts = np.array([int(d.sum()) for d in deficit])
    ok = _direction_ok(s_eigs, expected_direction)
    return DomainConvergence(tuple(margins), n0, s_counts, s_eigs,
                             s_counts * grid.h ** 2, d_counts, d_eigs,
                             expected_direction, ok)


# -- the flagship experiment ----------------------------------------------------


@dataclass
class PerturbationReport:
    convergence: ConvergenceReport
    criterion: DomainConvergence
    contraction: dict
    nearest_distances: np.ndarray   # (family, samples) graph distances of limit pairs
    off_limit_sup: np.ndarray       # per member: max |S_n(t)f| off the limit mask
    header: dict


def perturbation_experiment(masks, limit_mask: DomainMask, lambda_grid, t_grid,
                            f_set, tol: float = 0.05, mu: complex = 1 + 1j,
                            items=("i", "ii", "iii", "iv"), samples: int = 4,
                            seed: int = 0, margins=(1, 2, 3),
                            expected_direction: str = "to_infinity") -> PerturbationReport:
    """Domain-perturbation convergence study in the sup norm.

    Precondition: every relation in sight passes the contraction
    certificate on the positive part of ``lambda_grid`` (raises
    :class:`ContractFailed` otherwise).  The gap criterion is deliberately
    not among the default items: at a fixed mesh two different masks stay a
    fixed gap apart, and the domain-convergence criterion plus nearest-pair
    distances carry that role instead.
    """
    labs = [DirichletGridRelation(mk) for mk in masks]
    lim = DirichletGridRelation(limit_mask)
    pos = [float(l.real) for l in np.atleast_1d(lambda_grid)
           if complex(l).imag == 0 and complex(l).real > 0] or [1.0]
    contraction = {}
    for lab in [*labs, lim]:
        contraction[lab.label] = supnorm_contraction(lab, lams=tuple(pos))
    report = trotter_kato_report(labs, lim, lambda_grid, t_grid, f_set=f_set,
                                 tol=tol, mu=mu, items=items, norm="sup",
                                 labels=tuple(lab.label for lab in labs))
    criterion = domain_convergence_check(masks, limit_mask, margins=margins,
                                         expected_direction=expected_direction)
    rng = np.random.default_rng(seed)
    dists = np.zeros((len(labs), samples))
    if samples:
        g = rng.standard_normal((lim.state_dim, samples))
        u = lim.resolvent_columns(1.0, g)
        f = u - g  # (u, f) lies on the limit graph: u - f = g = (1 - A)u
        for k, lab in enumerate(labs):
            dists[k] = [lab.graph_distance(u[:, s], f[:, s])
                        for s in range(samples)]
    off = ~limit_mask.values
    f_set = np.atleast_2d(np.asarray(f_set))
    off_sup = np.zeros(len(labs))
    for k, lab in enumerate(labs):
        traj = lab.integrated_trajectory(np.asarray(t_grid, dtype=float), f_set)
        off_sup[k] = float(np.max(np.abs(traj[:, off, :]))) if off.any() else 0.0
    header = {
        "norm": "sup",
        "assumption": "shapes are chosen regular and stable in the continuum; "
                      "all statements here are at the fixed mesh",
        "criterion_direction": expected_direction,
    }
    return PerturbationReport(report, criterion, contraction, dists, off_sup,
                              header)


# -- heat orbits -----------------------------------------------------------------


@dataclass
class HeatOrbit:
    times: np.ndarray
    states: np.ndarray               # (len(times), N)
    projection_defect: float         # ‖T(0)u0 − mask·u0‖_∞, structurally zero
    initial_trace: np.ndarray        # ℓ² distance of u(t) to u0 on the mask
    off_domain_max: float
    membership_times: tuple
    membership_residuals: tuple
    sup_ratio: float                 # max_t ‖u(t)‖_∞ / ‖P u0‖_∞
    min_entry: float
    nodewise_decreasing: bool


def heat_orbit(rel: DirichletGridRelation, u0, t_grid, fd_times=None,
               fd_delta: float = 1e-3) -> HeatOrbit:
    """Trajectory ``u(t) = T(t) u0`` with its defining checks.

    Membership is tested with Richardson-extrapolated central differences
    at a few interior times (the raw pair ``(u, Lu)`` would be a tautology);
    the orbit itself comes from one exponential sweep when the grid is
    uniform.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(t_grid <= 0) or np.any(np.diff(t_grid) <= 0):
        raise InvalidInput("time grid must be positive and strictly increasing")
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (rel.state_dim,):
        raise InvalidInput("initial state has the wrong length")
    states = rel.semigroup_trajectory(t_grid, u0)
    pu0 = np.zeros_like(u0)
    pu0[rel.omega] = u0[rel.omega]
    projection_defect = float(np.max(np.abs(
        rel.semigroup_columns(0.0, u0[:, None])[:, 0] - pu0), initial=0.0))
    initial_trace = np.array([
        float(np.linalg.norm(states[j][rel.omega] - u0[rel.omega]))
        for j in range(t_grid.size)])
    off_mask = np.ones(rel.state_dim, dtype=bool)
    off_mask[rel.omega] = False
    off_domain_max = float(np.max(np.abs(states[:, off_mask]), initial=0.0))
    if fd_times is None:
        picks = sorted({t_grid.size // 2, t_grid.size - 1})
        fd_times = tuple(float(t_grid[j]) for j in picks if t_grid[j] > 2 * fd_delta)
    residuals = []
    for tau in fd_times:
        u_tau = rel.semigroup_columns(tau, u0[:, None])[:, 0]
        diffs = {}
        for d in (fd_delta, fd_delta / 2):
            up = rel.semigroup_columns(tau + d, u0[:, None])[:, 0]
            dn = rel.semigroup_columns(tau - d, u0[:, None])[:, 0]
            diffs[d] = (up - dn) / (2 * d)
        dudt = (4.0 * diffs[fd_delta / 2] - diffs[fd_delta]) / 3.0
        residuals.append(rel.graph_distance(u_tau, dudt))
    denom = max(float(np.max(np.abs(pu0), initial=0.0)), 1e-300)
    sup_ratio = float(np.max(np.abs(states), initial=0.0)) / denom
    decreasing = bool(np.all(states[1:] <= states[:-1] + 1e-12))
    return HeatOrbit(t_grid, states, projection_defect, initial_trace,
                     off_domain_max, tuple(fd_times), tuple(residuals),
                     sup_ratio, float(states.min(initial=0.0)), decreasing)


# -- experiment mask builders -----------------------------------------------------


def disk_mask(grid: Grid, radius: float = 0.7, center=(0.0, 0.0),
              label: str = "disk") -> DomainMask:
    return mask_from_shapes(grid, [disk(center, radius)], label=label)


def polygon_family(grid: Grid, radius: float = 0.7, center=(0.0, 0.0),
                   sides=(3, 4, 5, 6, 8, 12), phase: float = 0.1):
    """Inscribed regular polygons: an inner approximation family of the disk."""
    return [mask_from_shapes(grid, [inscribed_polygon(center, radius, k, phase)],
                             label=f"poly-{k}")
            for k in sides]


def slit_family(grid: Grid, radius: float = 0.7, center=(0.0, 0.0),
                widths=(8, 4, 2, 1), inner_x=(0.50, 0.56, 0.61, 0.655),
                outer_x: float = 0.78, y: float = 0.0):
    """Disk minus a shrinking horizontal slit reaching in from the boundary.

    The slit thins *and* retracts toward the boundary, so the family is
    nested and the capsule tip — which dominates the sup-norm error —
    strictly recedes (a fixed-length slit would keep removing the same tip
    node at every width, freezing the error).  Widths are in node rows; the
    capsule is padded by a quarter spacing so a width-w slit removes
    exactly w rows (no floating-point ties against the lattice), and the
    slit line is snapped to a node row.
    """
    if len(inner_x) != len(widths):
        raise InvalidInput("need one inner endpoint per width")
    coords = grid.axis_coords()
    y0 = float(coords[np.argmin(np.abs(coords - y))])
    masks = []
    for w, x0 in zip(widths, inner_x):
        cap = slit((x0, y0), (outer_x, y0), (w + 0.5) * grid.h)
        masks.append(mask_from_shapes(
            grid, [disk(center, radius), cap], ops=["difference"],
            label=f"slit-{w}h"))
    return masks


def bump_function(grid: Grid, center=(0.15, -0.1), width: float = 0.2) -> np.ndarray:
    """Gaussian bump node function normalized to sup-norm one."""
    pts = grid.node_coords()
    vals = np.exp(-((pts[:, 0] - center[0]) ** 2 + (pts[:, 1] - center[1]) ** 2)
                  / (2.0 * width ** 2))
    return vals / vals.max()
