"""Interface sparsification: resistance sketches, importance sampling, bound checks.

Crossing edges are kept with probability proportional to w_e * R_e (leverage
scores), reweighted by 1/(q p_e) so the sampled interface Laplacian is
unbiased. Effective resistances come from a random-sign projection of the
weighted incidence pushed through Laplacian solves; exact pseudoinverse
resistances are available as the small-n oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import (
    DimensionMismatch,
    Disconnected,
    EmptyInterface,
    InvalidParams,
    SolverNotConverged,
)
from .graph import Graph, Laplacian, build_laplacian

JL_MIN_DIM = 20


def _edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


@dataclass(eq=False)
class ResistanceEstimate:
    """Approximate effective resistances for a set of edges."""

    edges: list[tuple[int, int]]
    values: np.ndarray
    projection_dim: int
    epsilon_jl: float
    lookup: dict = field(init=False)

    def __post_init__(self):
        self.lookup = {
            _edge_key(u, v): float(r) for (u, v), r in zip(self.edges, self.values)
        }

    def value_for(self, u: int, v: int) -> float:
        return self.lookup[_edge_key(u, v)]


@dataclass(eq=False)
class SparsifiedInterface:
    kept_edges: list[tuple[int, int, float]]
    original_count: int
    kept_fraction: float
    sample_count: int


@dataclass(eq=False)
class SpectralBoundReport:
    eps: float
    ratio_min: float
    ratio_max: float
    random_ratio_min: float
    random_ratio_max: float
    dense_extremes: bool
    passed: bool


def _jacobi_block_pcg(lap: sp.csr_matrix, rhs: np.ndarray, tol: float, maxiter: int):
    """PCG with diagonal preconditioning on all RHS columns at once.

    The Laplacian is singular (constant null space on a connected graph);
    right-hand sides must be orthogonal to 1 and search directions are kept
    there, which fixes the solution up to an irrelevant constant shift.
    """
    n, k = rhs.shape
    diag = lap.diagonal()
    if np.any(diag <= 0.0):
        raise SolverNotConverged("nonpositive diagonal; graph must have edges")
    minv = 1.0 / diag
    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = minv[:, None] * r
    z -= z.mean(axis=0, keepdims=True)
    p = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    bnorm = np.linalg.norm(rhs, axis=0)
    bnorm[bnorm == 0.0] = 1.0
    for _ in range(maxiter):
        rn = np.linalg.norm(r, axis=0)
        active = rn > tol * bnorm
        if not np.any(active):
            return x
        q = lap @ p
        pq = np.einsum("ij,ij->j", p, q)
        alpha = np.where(active & (pq > 0.0), rz / np.where(pq == 0.0, 1.0, pq), 0.0)
        x += alpha[None, :] * p
        r -= alpha[None, :] * q
        z = minv[:, None] * r
        z -= z.mean(axis=0, keepdims=True)
        rz_new = np.einsum("ij,ij->j", r, z)
        beta = np.where(rz > 0.0, rz_new / np.where(rz == 0.0, 1.0, rz), 0.0)
        p = z + beta[None, :] * p
        rz = rz_new
    rn = np.linalg.norm(r, axis=0) / bnorm
    raise SolverNotConverged(f"block PCG: {int(np.sum(rn > tol))} columns above tol")


def jl_dimension(n: int, eps_jl: float) -> int:
    return max(JL_MIN_DIM, math.ceil(24.0 * math.log(max(n, 2)) / eps_jl**2))


def estimate_resistances(
    g: Graph,
    edges: list[tuple[int, int]] | None = None,
    eps_jl: float = 0.5,
    seed: int = 0,
    tol: float = 1e-8,
    maxiter: int = 1000,
) -> ResistanceEstimate:
    """Sketched effective resistances R_e = ||Z(e_u - e_v)||^2.

    Z projects the weighted incidence through Laplacian solves with a
    +-1/sqrt(k) random-sign matrix of k = max(20, ceil(24 log n / eps^2))
    rows. The sketch spans the whole graph; estimates are reported for the
    requested edges (default: all of them).
    """
    if not g.is_connected():
        raise Disconnected("resistance estimation requires a connected graph")
    if edges is None:
        req = [(int(u), int(v)) for u, v in zip(g.uu, g.vv)]
    else:
        req = [(int(u), int(v)) for u, v, *_ in edges]
    k = jl_dimension(g.n, eps_jl)
    rng = np.random.default_rng(seed)
    num_e = g.num_edges
    signs = (rng.integers(0, 2, size=(num_e, k)).astype(np.float64) * 2.0 - 1.0)
    signs /= math.sqrt(k)
    root_w = np.sqrt(g.ww)
    # rows of B_w have +sqrt(w) at u and -sqrt(w) at v; Y^T = B_w^T S
    yt = np.zeros((g.n, k))
    np.add.at(yt, g.uu, root_w[:, None] * signs)
    np.add.at(yt, g.vv, -root_w[:, None] * signs)
    lap = build_laplacian(g).matrix
    sol = _jacobi_block_pcg(lap, yt, tol=tol, maxiter=maxiter)
    vals = np.array(
        [float(np.sum((sol[u] - sol[v]) ** 2)) for u, v in req]
    )
    return ResistanceEstimate(
        edges=req, values=vals, projection_dim=k, epsilon_jl=eps_jl
    )


def exact_resistances(g: Graph, edges: list[tuple[int, int]]) -> np.ndarray:
    """Pseudoinverse oracle: (e_u - e_v)^T L^+ (e_u - e_v); small n only."""
    if not g.is_connected():
        raise Disconnected("effective resistance requires a connected graph")
    pinv = np.linalg.pinv(build_laplacian(g).dense())
    return np.array(
        [pinv[u, u] + pinv[v, v] - 2.0 * pinv[u, v] for u, v, *_ in edges]
    )


def sparsify_interface(
    interface_edges: list[tuple[int, int, float]],
    resistances: ResistanceEstimate,
    keep_fraction: float | None = None,
    seed: int = 0,
    target_count: int | None = None,
) -> SparsifiedInterface:
    """Sample q crossing edges with replacement, p_e ~ w_e R_e, and reweight.

    q = max(1, ceil(keep_fraction * |interface|)) unless target_count pins it
    directly. Duplicate draws merge by summing their w_e/(q p_e) weights.
    """
    m = len(interface_edges)
    if m == 0:
        raise EmptyInterface("no crossing edges to sparsify")
    if target_count is not None:
        q = int(target_count)
        if q < 1:
            raise InvalidParams("target_count must be >= 1")
    else:
        if keep_fraction is None or not 0.0 < keep_fraction <= 1.0:
            raise InvalidParams("keep_fraction must lie in (0, 1]")
        q = max(1, math.ceil(keep_fraction * m))
    w = np.array([e[2] for e in interface_edges])
    r = np.array([resistances.value_for(e[0], e[1]) for e in interface_edges])
    if np.any(r <= 0.0):
        raise InvalidParams("resistances must be strictly positive")
    p = w * r
    p /= p.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(q, p)
    kept = [
        (u, v, float(c) * w_e / (q * p_e))
        for (u, v, w_e), c, p_e in zip(interface_edges, counts, p)
        if c > 0
    ]
    return SparsifiedInterface(
        kept_edges=kept,
        original_count=m,
        kept_fraction=len(kept) / m,
        sample_count=q,
    )


def _as_dense(l) -> np.ndarray:
    if isinstance(l, Laplacian):
        return l.dense()
    if sp.issparse(l):
        return l.toarray()
    return np.asarray(l, dtype=np.float64)


def verify_spectral_bound(
    l_orig,
    l_sparse,
    eps: float,
    trials: int = 200,
    seed: int = 0,
    dense_limit: int = 300,
) -> SpectralBoundReport:
    """Report min/max of x^T L' x / x^T L x against the (1 +- eps) band.

    Random unit directions always; for n <= dense_limit the generalized
    eigenvalue extremes on the range of L are included, which makes the
    reported ratios the true worst case. Probabilistic at aggressive
    sampling rates, so this reports rather than asserts.
    """
    a = _as_dense(l_orig)
    b = _as_dense(l_sparse)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        x = rng.standard_normal(n)
        x -= x.mean()
        qa = float(x @ (a @ x))
        if qa <= 1e-12 * n:
            continue
        ratios.append(float(x @ (b @ x)) / qa)
    rnd_min = min(ratios) if ratios else 1.0
    rnd_max = max(ratios) if ratios else 1.0
    lo, hi = rnd_min, rnd_max
    dense = n <= dense_limit
    if dense:
        w, u = np.linalg.eigh(a)
        pos = w > 1e-10 * max(1.0, float(w[-1]))
        basis = u[:, pos]
        proj_b = basis.T @ b @ basis
        proj_a = np.diag(w[pos])
        gen = scipy.linalg.eigh(proj_b, proj_a, eigvals_only=True)
        lo = min(lo, float(gen[0]))
        hi = max(hi, float(gen[-1]))
    passed = (lo >= 1.0 - eps) and (hi <= 1.0 + eps)
    return SpectralBoundReport(
        eps=eps,
        ratio_min=lo,
        ratio_max=hi,
        random_ratio_min=rnd_min,
        random_ratio_max=rnd_max,
        dense_extremes=dense,
        passed=passed,
    )


@dataclass(frozen=True)
class SparsifyPolicy:
    """How build_plan thins accepted interfaces."""

    keep_fraction: float | None = None
    target_count: int | None = None
    eps_jl: float = 0.5
    solver_tol: float = 1e-8
    solver_maxiter: int = 1000

    def __post_init__(self):
        if self.keep_fraction is None and self.target_count is None:
            raise InvalidParams("policy needs keep_fraction or target_count")


def apply_policy(
    sub: Graph,
    crossing_local: list[tuple[int, int, float]],
    policy: SparsifyPolicy,
    seed: int,
) -> SparsifiedInterface:
    """Sparsify one interface of a connected subgraph under a policy."""
    try:
        resist = estimate_resistances(
            sub,
            crossing_local,
            eps_jl=policy.eps_jl,
            seed=seed,
            tol=policy.solver_tol,
            maxiter=policy.solver_maxiter,
        )
    except SolverNotConverged as exc:
        warnings.warn(f"resistance solve did not converge ({exc}); using 1/w")
        resist = ResistanceEstimate(
            edges=[(u, v) for u, v, _ in crossing_local],
            values=np.array([1.0 / w for _, _, w in crossing_local]),
            projection_dim=0,
            epsilon_jl=policy.eps_jl,
        )
    return sparsify_interface(
        crossing_local,
        resist,
        keep_fraction=policy.keep_fraction,
        seed=seed + 1,
        target_count=policy.target_count,
    )
