"""Rank-one symmetric eigenvalue updates: deflation, secular roots, Cauchy factors.

Given diag(lam) + rho * z z^T, the updated eigenvalues are the roots of

    w(mu) = 1 + rho * sum_i z_i^2 / (lam_i - mu) = 0,

one per interleaving bracket (lam_j, lam_j+1). The updated eigenvectors, in
the old eigenbasis, are the columns of an orthogonal Cauchy-like matrix with
entries proportional to z_i / (lam_i - mu_j). Repeated eigenvalues and zero
projections are removed first by deflation (Householder rotations within
degenerate clusters, then dropping zero components).

Numerical notes that the tolerances of this package depend on:

* every root is stored as (origin index, offset) so that differences
  lam_i - mu_j are formed without catastrophic cancellation near poles;
* after root finding, z is recomputed from the roots (the Loewner / inverse
  eigenvalue identity), which makes (lam, z, roots) an exactly consistent
  triple and the resulting Cauchy columns orthogonal to machine precision
  even for tightly clustered spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure, DimensionMismatch, InvalidParams

_EPS = float(np.finfo(np.float64).eps)
_TINY = float(np.finfo(np.float64).tiny)

# target elements per temporary when chunking m x m sweeps
_CHUNK_ELEMS = 4_000_000
# affected-block edge below which the dense Cauchy block is memoized
_DENSE_CACHE_MAX = 512


def default_tolerances(
    lam: np.ndarray, z: np.ndarray, rho: float
) -> tuple[float, float]:
    """Deflation thresholds: 8 eps * (|z| sqrt(rho) + diam) and 8 eps * diam."""
    diam = float(lam[-1] - lam[0]) if lam.size else 0.0
    zn = float(np.linalg.norm(z)) * np.sqrt(abs(rho))
    tol_z = 8.0 * _EPS * (zn + diam) + _TINY
    tol_lambda = 8.0 * _EPS * diam
    return tol_z, tol_lambda


@dataclass(frozen=True, eq=False)
class HouseholderBlock:
    """Reflector over one repeated-eigenvalue slice [start, stop).

    Acts as H = I - 2 u u^T followed by a sign flip of the first coordinate,
    chosen so the cluster's z-mass lands on coordinate `start` with value
    +||z_block||.
    """

    start: int
    stop: int
    reflector: np.ndarray  # unit vector u of length stop - start
    first_sign: float      # +-1 applied to the leading coordinate after H

    def apply_t(self, x: np.ndarray) -> None:
        blk = x[self.start : self.stop]
        blk -= np.multiply.outer(2.0 * self.reflector, self.reflector @ blk)
        x[self.start] *= self.first_sign

    def apply(self, x: np.ndarray) -> None:
        x[self.start] *= self.first_sign
        blk = x[self.start : self.stop]
        blk -= np.multiply.outer(2.0 * self.reflector, self.reflector @ blk)


@dataclass(frozen=True, eq=False)
class DeflationRecord:
    """Partition of spectral indices for one rank-one update.

    kept: indices that enter the secular solve (all |z| > tol_z, eigenvalues
    pairwise separated by > tol_lambda). dropped_zero: zero projections left
    untouched (Case 1). rotated: cluster members whose z-mass was moved onto
    the cluster head by a Householder reflector (Case 2). z_deflated: the z
    entries over `kept` after the reflectors.
    """

    size: int
    kept: np.ndarray
    dropped_zero: np.ndarray
    rotated: np.ndarray
    householder_blocks: tuple[HouseholderBlock, ...]
    z_deflated: np.ndarray


@dataclass(frozen=True, eq=False)
class SecularSolution:
    """Roots of the secular equation for one deflated update.

    lambda_new[j] = lambda_old[origins[j]] + offsets[j]; keeping the
    (origin, offset) pair preserves full relative accuracy of the pole
    distances used everywhere downstream.
    """

    lambda_old: np.ndarray
    lambda_new: np.ndarray
    z: np.ndarray
    rho: float
    origins: np.ndarray
    offsets: np.ndarray

    @property
    def trace_defect(self) -> float:
        """|sum(new) - sum(old) - rho ||z||^2|, which trace conservation bounds."""
        shift = np.sum(self.lambda_old[self.origins] - self.lambda_old)
        return float(abs(shift + np.sum(self.offsets) - self.rho * (self.z @ self.z)))


@dataclass(eq=False)
class CauchyFactor:
    """Structured orthogonal transform of one rank-one update.

    Acts on vectors of length `size` as identity outside the affected set:
    forward = post-deflation Cauchy-block transpose after the Householder
    rotations, i.e. the map from old-basis to new-basis spectral coefficients.
    Only O(|affected|) data is stored; the dense Cauchy block is rebuilt in
    column chunks on demand (and memoized below _DENSE_CACHE_MAX, where the
    rebuild overhead would dominate the actual multiply).
    """

    size: int
    affected: np.ndarray
    solution: SecularSolution
    deflation: DeflationRecord
    zhat: np.ndarray         # Loewner-consistent z over `affected`
    column_norms: np.ndarray
    column_signs: np.ndarray

    def __post_init__(self):
        self._block_cache: np.ndarray | None = None

    @property
    def is_identity(self) -> bool:
        return self.affected.size == 0 and not self.deflation.householder_blocks

    def cauchy_matrix(self) -> np.ndarray:
        """Dense orthogonal Cauchy-like block: normalized, sign-fixed columns."""
        s = self.affected.size
        if s == 0:
            return np.zeros((0, 0))
        return _cauchy_columns(
            self.solution.lambda_old,
            self.solution.origins,
            self.solution.offsets,
            self.zhat,
            self.column_norms,
            self.column_signs,
            np.arange(s),
        )

    def apply(self, x: np.ndarray, transpose: bool = False) -> np.ndarray:
        """Multiply x (length `size`, or size x c) by the factor or its transpose."""
        x = np.asarray(x, dtype=np.float64)
        vec = x.ndim == 1
        if x.shape[0] != self.size:
            raise DimensionMismatch(
                f"expected leading dimension {self.size}, got {x.shape[0]}"
            )
        y = x.reshape(self.size, -1).copy()
        self.apply_inplace(y, transpose=transpose)
        return y[:, 0] if vec else y

    def _block(self) -> np.ndarray | None:
        if self.affected.size > _DENSE_CACHE_MAX:
            return None
        if self._block_cache is None:
            self._block_cache = self.cauchy_matrix()
        return self._block_cache

    def apply_inplace(self, y: np.ndarray, transpose: bool = False) -> None:
        """In-place version on a (size, c) array; used on shared-state views."""
        if not transpose:
            for blk in self.deflation.householder_blocks:
                blk.apply_t(y)
            if self.affected.size:
                sub = y[self.affected]
                block = self._block()
                if block is not None:
                    y[self.affected] = block.T @ sub
                else:
                    y[self.affected] = _cauchy_apply(
                        self.solution, self.zhat, self.column_norms,
                        self.column_signs, sub, transpose=True,
                    )
        else:
            if self.affected.size:
                sub = y[self.affected]
                block = self._block()
                if block is not None:
                    y[self.affected] = block @ sub
                else:
                    y[self.affected] = _cauchy_apply(
                        self.solution, self.zhat, self.column_norms,
                        self.column_signs, sub, transpose=False,
                    )
            for blk in self.deflation.householder_blocks:
                blk.apply(y)

    def dense(self) -> np.ndarray:
        return self.apply(np.eye(self.size))


def apply_factor(f: CauchyFactor, x: np.ndarray, transpose: bool = False) -> np.ndarray:
    return f.apply(x, transpose=transpose)


# ---------------------------------------------------------------------------
# deflation


def deflate(
    lam: np.ndarray,
    z: np.ndarray,
    tol_z: float | None = None,
    tol_lambda: float | None = None,
    rho: float = 1.0,
) -> DeflationRecord:
    """Reduce (lam ascending, z) to a strictly-separated all-nonzero core.

    Case 2 first: within each cluster of eigenvalues closer than tol_lambda
    (chained), a Householder reflector concentrates the cluster's z-mass on
    its first index. Case 1 second: indices with |z| <= tol_z are dropped.
    Worst case everything deflates and `kept` is empty.
    """
    lam = np.asarray(lam, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if lam.shape != z.shape or lam.ndim != 1:
        raise DimensionMismatch("lambda and z must be 1-D of equal length")
    if lam.size and np.any(np.diff(lam) < 0.0):
        raise InvalidParams("eigenvalues must be ascending")
    m = lam.size
    if tol_z is None or tol_lambda is None:
        dz, dl = default_tolerances(lam, z, rho)
        tol_z = dz if tol_z is None else tol_z
        tol_lambda = dl if tol_lambda is None else tol_lambda

    zd = z.copy()
    blocks: list[HouseholderBlock] = []
    rotated: list[int] = []
    i = 0
    while i < m:
        j = i + 1
        while j < m and lam[j] - lam[j - 1] <= tol_lambda:
            j += 1
        if j - i >= 2:
            zb = zd[i:j]
            nrm = float(np.linalg.norm(zb))
            if nrm > 0.0:
                sgn = 1.0 if zb[0] >= 0.0 else -1.0
                u = zb.copy()
                u[0] += sgn * nrm  # no cancellation: |u_0| >= nrm
                u /= np.linalg.norm(u)
                blocks.append(
                    HouseholderBlock(
                        start=i, stop=j, reflector=u, first_sign=-sgn
                    )
                )
                zd[i] = nrm
                zd[i + 1 : j] = 0.0
            rotated.extend(range(i + 1, j))
        i = j

    rot = np.asarray(rotated, dtype=np.int64)
    alive = np.ones(m, dtype=bool)
    alive[rot] = False
    small = alive & (np.abs(zd) <= tol_z)
    kept = np.flatnonzero(alive & ~small)
    return DeflationRecord(
        size=m,
        kept=kept,
        dropped_zero=np.flatnonzero(small),
        rotated=rot,
        householder_blocks=tuple(blocks),
        z_deflated=zd[kept],
    )


# ---------------------------------------------------------------------------
# secular roots


def _split_sums(d, zeta, origins, tau, p_left, left_mask=None):
    """psi/phi value+derivative sums at mu = d[origins] + tau, split at p_left.

    psi covers terms i <= p_left, phi the rest; derivatives are wrt mu. The
    split halves only steer the rational model, so einsum against a cached
    0/1 mask (rows indexed by root) is enough; totals use pairwise summation
    for an accurate residual. Chunked so temporaries stay ~_CHUNK_ELEMS.
    """
    m = d.size
    k = tau.size
    psi = np.empty(k)
    dpsi = np.empty(k)
    phi = np.empty(k)
    dphi = np.empty(k)
    step = max(1, _CHUNK_ELEMS // max(m, 1))
    for s in range(0, k, step):
        sl = slice(s, min(s + step, k))
        rows = sl.stop - sl.start
        delta = (d[None, :] - d[origins[sl], None]) - tau[sl, None]
        t = zeta[None, :] / delta
        t2 = t / delta
        if left_mask is not None:
            mask = left_mask[sl]
            left = np.einsum("ij,ij->i", t, mask)
            left2 = np.einsum("ij,ij->i", t2, mask)
        else:
            # segment sums up to each root's split column, mask-free
            bounds = np.empty(2 * rows, dtype=np.intp)
            bounds[0::2] = np.arange(rows) * m
            bounds[1::2] = bounds[0::2] + p_left[sl] + 1
            left = np.add.reduceat(t.reshape(-1), bounds)[0::2]
            left2 = np.add.reduceat(t2.reshape(-1), bounds)[0::2]
        psi[sl] = left
        phi[sl] = np.sum(t, axis=1) - left
        dpsi[sl] = left2
        dphi[sl] = np.sum(t2, axis=1) - left2
    return psi, dpsi, phi, dphi


def _model_step(tau, lo, hi, psi, dpsi, phi, dphi, dl, dr):
    """One guarded step of the two-pole rational model.

    Fits C + A/(dl - t) + B/(dr - t) to (value, derivative) of psi at pole dl
    and phi at pole dr, solves for its root, and falls back to bisection
    whenever the candidate is not strictly inside the current bracket.
    """
    wl = dl - tau
    wr = dr - tau
    a_co = dpsi * wl * wl
    b_co = dphi * wr * wr
    c_co = 1.0 + (psi - dpsi * wl) + (phi - dphi * wr)

    qa = c_co
    qb = -(c_co * (dl + dr) + a_co + b_co)
    qc = c_co * dl * dr + a_co * dr + b_co * dl

    disc = qb * qb - 4.0 * qa * qc
    ok = disc >= 0.0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    qq = -0.5 * (qb + np.where(qb >= 0.0, sq, -sq))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(qa != 0.0, qq / qa, np.inf)
        r2 = np.where(qq != 0.0, qc / qq, np.inf)
    in1 = ok & (r1 > lo) & (r1 < hi)
    in2 = ok & (r2 > lo) & (r2 < hi)
    # prefer the root inside the pole interval; bisect when neither lands
    cand = np.where(in1, r1, np.where(in2, r2, 0.5 * (lo + hi)))
    both = in1 & in2
    if np.any(both):
        # keep the one between the poles (the model is monotone there)
        between1 = (r1 > np.minimum(dl, dr)) & (r1 < np.maximum(dl, dr))
        cand = np.where(both & ~between1, r2, cand)
    return cand


def _solve_two(gap: float, z0: float, z1: float):
    """Closed-form roots for m = 2, every branch in cancellation-free form.

    Shifted to d[1], the secular polynomial is s^2 + s(gap - z0 - z1) - z1 gap
    with one root on each side of d[1]; the positive one is root 1's offset
    and the product identity recovers root 0 from it without cancellation.
    """
    lin = gap - z0 - z1
    disc = np.sqrt(lin * lin + 4.0 * z1 * gap)
    tau1 = 2.0 * z1 * gap / (lin + disc) if lin >= 0.0 else 0.5 * (disc - lin)
    # root 0 lives in (0, gap); pick its origin from the midpoint sign
    f_mid = 1.0 + 2.0 * (z1 - z0) / gap
    if f_mid >= 0.0:
        b = gap + z0 + z1  # shifted to d[0]: tau^2 - b tau + z0 gap = 0
        c = z0 * gap
        tau0 = 2.0 * c / (b + np.sqrt(b * b - 4.0 * c))
        o0 = 0
    else:
        tau0 = -z1 * gap / tau1
        o0 = 1
    return np.array([o0, 1], dtype=np.int64), np.array([tau0, tau1])


def _solve_roots(d, zeta, max_iter: int = 100):
    """All m roots of 1 + sum zeta_i/(d_i - mu), d strictly ascending, zeta > 0.

    Returns (origins, tau) with root_j = d[origins[j]] + tau[j]; roots come
    out bracket-sorted. Vectorized over roots; bisection-safeguarded.
    """
    m = d.size
    if m == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    if m == 1:
        return np.zeros(1, dtype=np.int64), np.array([zeta[0]])
    if m == 2:
        return _solve_two(float(d[1] - d[0]), float(zeta[0]), float(zeta[1]))

    zsum = float(np.sum(zeta))
    origins = np.empty(m, dtype=np.int64)
    p_left = np.empty(m, dtype=np.int64)
    tau = np.empty(m)
    lo = np.empty(m)
    hi = np.empty(m)

    idx = np.arange(m - 1)
    gaps = d[1:] - d[:-1]
    # persistent split mask: root j sums i <= j on the left (last root m-2)
    mask_f = None
    if m <= 1024:
        mask_f = np.tril(np.ones((m, m)))
        mask_f[m - 1, m - 1] = 0.0
    # phase A: evaluate at bracket midpoints (origin = left pole everywhere)
    origins[: m - 1] = idx
    origins[m - 1] = m - 1
    p_left[: m - 1] = idx
    p_left[m - 1] = m - 2
    tau[: m - 1] = 0.5 * gaps
    tau[m - 1] = 0.5 * zsum
    psi, dpsi, phi, dphi = _split_sums(d, zeta, origins, tau, p_left, mask_f)
    f = 1.0 + psi + phi

    # place each interior origin at the nearer pole; the evaluated midpoint
    # becomes one certified bracket endpoint, the pole the (virtual) other
    right = f[: m - 1] < 0.0
    origins[: m - 1] = np.where(right, idx + 1, idx)
    tau[: m - 1] = np.where(right, -0.5 * gaps, 0.5 * gaps)
    lo[: m - 1] = np.where(right, tau[: m - 1], 0.0)
    hi[: m - 1] = np.where(right, 0.0, tau[: m - 1])
    if f[m - 1] < 0.0:
        lo[m - 1], hi[m - 1] = tau[m - 1], zsum
    else:
        lo[m - 1], hi[m - 1] = 0.0, tau[m - 1]

    # pole offsets relative to each root's origin
    dl = d[p_left] - d[origins]
    dr = d[p_left + 1] - d[origins]

    done = np.zeros(m, dtype=bool)
    # residual floor: per-term rounding plus pairwise-summation growth; a
    # threshold below this stalls every root into bisection at large m
    resid_tol = 8.0 * _EPS * (2.0 + np.log2(m))
    for sweep in range(max_iter + 100):
        scale = 1.0 + np.abs(psi) + np.abs(phi)
        resid_ok = np.abs(f) <= resid_tol * scale
        width = hi - lo
        width_ok = width <= 4.0 * _EPS * np.maximum(np.abs(lo), np.abs(hi)) + 4.0 * _TINY
        done |= resid_ok | width_ok
        if np.all(done):
            break
        act = np.flatnonzero(~done)
        if sweep < max_iter:
            step = _model_step(
                tau[act], lo[act], hi[act],
                psi[act], dpsi[act], phi[act], dphi[act],
                dl[act], dr[act],
            )
        else:
            step = 0.5 * (lo[act] + hi[act])  # spec: bisect after 100 iterations
        tau[act] = step
        psi_a, dpsi_a, phi_a, dphi_a = _split_sums(
            d, zeta, origins[act], tau[act], p_left[act],
            mask_f[act] if mask_f is not None else None,
        )
        psi[act], dpsi[act], phi[act], dphi[act] = psi_a, dpsi_a, phi_a, dphi_a
        f_a = 1.0 + psi_a + phi_a
        f[act] = f_a
        neg = f_a < 0.0
        lo[act] = np.where(neg, tau[act], lo[act])
        hi[act] = np.where(neg, hi[act], tau[act])

    if not np.all(np.isfinite(tau)):
        raise BracketFailure("nonfinite secular iterate; deflate harder upstream")
    return origins, tau


def solve_secular(
    lambda_old: np.ndarray, z: np.ndarray, rho: float
) -> SecularSolution:
    """Roots of 1 + rho sum z_i^2/(lam_i - mu) = 0, one per interleaving bracket.

    Requires strictly ascending lambda_old and all z nonzero (run deflate
    first). rho < 0 is reduced to the positive case by negating the matrix
    and reflecting the spectrum.
    """
    lam = np.asarray(lambda_old, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if lam.shape != z.shape or lam.ndim != 1:
        raise DimensionMismatch("lambda and z must be 1-D of equal length")
    if rho == 0.0:
        raise InvalidParams("rho must be nonzero")
    if lam.size == 0:
        return SecularSolution(
            lambda_old=lam, lambda_new=lam.copy(), z=z, rho=rho,
            origins=np.zeros(0, dtype=np.int64), offsets=np.zeros(0),
        )
    if np.any(np.diff(lam) <= 0.0):
        raise BracketFailure("eigenvalues not strictly ascending after deflation")
    if np.any(z == 0.0):
        raise BracketFailure("zero z entry reached the root finder")

    if rho < 0.0:
        inner = solve_secular(-lam[::-1], z[::-1], -rho)
        m = lam.size
        origins = (m - 1) - inner.origins[::-1]
        offsets = -inner.offsets[::-1]
        return SecularSolution(
            lambda_old=lam, lambda_new=lam[origins] + offsets, z=z, rho=rho,
            origins=origins, offsets=offsets,
        )

    zeta = rho * z * z
    origins, tau = _solve_roots(lam, zeta)
    return SecularSolution(
        lambda_old=lam, lambda_new=lam[origins] + tau, z=z, rho=rho,
        origins=origins, offsets=tau,
    )


def secular_residuals(sol: SecularSolution) -> np.ndarray:
    """|w(lambda_new_j)| evaluated through the cancellation-free offsets."""
    d = sol.lambda_old
    zeta = sol.rho * sol.z * sol.z
    out = np.empty(d.size)
    for j in range(d.size):
        delta = (d - d[sol.origins[j]]) - sol.offsets[j]
        out[j] = abs(1.0 + np.sum(zeta / delta))
    return out


# ---------------------------------------------------------------------------
# Cauchy factor assembly


def _assemble_factor_data(d, origins, tau, rho, z_signs):
    """Loewner-consistent z, column norms and sign fixes in one m x m pass.

    zhat_i^2 = prod_j (mu_j - d_i) / (rho prod_{k != i} (d_k - d_i)) (paired
    O(1) ratios so products never overflow); column norms accumulate from
    the same pole-distance chunks; the sign flip makes the first affected
    row of every column positive.
    """
    m = d.size
    zh = np.empty(m)
    norm2 = np.zeros(m)
    rows_step = max(1, _CHUNK_ELEMS // m)
    for s in range(0, m, rows_step):
        sl = slice(s, min(s + rows_step, m))
        di = d[sl, None]
        mu_minus = (d[origins][None, :] - di) + tau[None, :]  # mu_j - d_i
        if m == 1:
            zh[0] = np.sqrt(np.abs(tau[0] / rho))
        else:
            dd = d[None, :] - di                              # d_j - d_i
            ratio = np.empty_like(mu_minus)
            jlt = np.arange(m - 1)[None, :] < np.arange(sl.start, sl.stop)[:, None]
            ratio[:, : m - 1] = mu_minus[:, : m - 1] / np.where(
                jlt, dd[:, : m - 1], dd[:, 1:]
            )
            ratio[:, m - 1] = mu_minus[:, m - 1] / rho
            zh[sl] = np.sqrt(np.abs(np.prod(ratio, axis=1)))
        norm2 += (zh[sl] * zh[sl]) @ (1.0 / (mu_minus * mu_minus))
    zhat = z_signs * zh
    # every column's first affected entry is zhat_0/(d_0 - mu_j)
    row0_mu = (d[origins] - d[0]) + tau
    signs = np.where(zhat[0] * row0_mu <= 0.0, 1.0, -1.0)
    return zhat, np.sqrt(norm2), signs


def _cauchy_columns(d, origins, tau, zhat, norms, signs, col_idx):
    """Dense columns C[:, col_idx]; C[i, j] = s_j zhat_i / ((d_i - mu_j) nu_j)."""
    delta = (d[:, None] - d[origins[col_idx]][None, :]) - tau[col_idx][None, :]
    cols = zhat[:, None] / delta
    cols *= (signs[col_idx] / norms[col_idx])[None, :]
    return cols


def _cauchy_apply(sol, zhat, norms, signs, x, transpose):
    """C @ x or C^T @ x over the affected block, built in column chunks."""
    d = sol.lambda_old
    m = d.size
    shape = x.shape
    x = x.reshape(m, -1)
    out = np.zeros_like(x)
    step = max(1, _CHUNK_ELEMS // max(m, 1))
    for s in range(0, m, step):
        ji = np.arange(s, min(s + step, m))
        cblk = _cauchy_columns(d, sol.origins, sol.offsets, zhat, norms, signs, ji)
        if transpose:
            out[ji] = cblk.T @ x
        else:
            out += cblk @ x[ji]
    return out.reshape(shape)


def build_cauchy_factor(
    record: DeflationRecord, sol: SecularSolution, size: int | None = None
) -> CauchyFactor:
    """Assemble the orthogonal factor for a deflated, solved rank-one update.

    `record` indices define the factor's coordinate space; `size` defaults to
    record.size. An empty kept set yields an identity factor.
    """
    size = record.size if size is None else size
    kept = record.kept
    if kept.size == 0:
        empty = np.zeros(0)
        return CauchyFactor(
            size=size, affected=kept, solution=sol, deflation=record,
            zhat=empty, column_norms=empty, column_signs=empty,
        )
    zhat, norms, signs = _assemble_factor_data(
        sol.lambda_old, sol.origins, sol.offsets, sol.rho, np.sign(sol.z)
    )
    return CauchyFactor(
        size=size, affected=kept, solution=sol, deflation=record,
        zhat=zhat, column_norms=norms, column_signs=signs,
    )


def rank_one_update_factor(
    lam: np.ndarray,
    z: np.ndarray,
    rho: float = 1.0,
    tol_z: float | None = None,
    tol_lambda: float | None = None,
) -> tuple[CauchyFactor, np.ndarray]:
    """Deflate, solve and assemble one update; also return the new eigenvalues.

    The returned eigenvalue array is in the factor's (pre-sort) coordinate
    order: kept slots carry the secular roots, all others are unchanged.
    """
    lam = np.asarray(lam, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    record = deflate(lam, z, tol_z=tol_z, tol_lambda=tol_lambda, rho=rho)
    sol = solve_secular(lam[record.kept], record.z_deflated, rho)
    factor = build_cauchy_factor(record, sol)
    lam_new = lam.copy()
    lam_new[record.kept] = sol.lambda_new
    return factor, lam_new
