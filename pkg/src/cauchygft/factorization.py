"""Factorize a graph Fourier transform into leaf bases and Cauchy factors.

Execution follows the divide-and-conquer recipe: dense eigendecompositions
on the leaf blocks, then bottom-up merges where each bridge edge becomes one
rank-one update solved through the secular equation. The stored history
applies U^T (forward) and U (inverse) as operators without ever forming U.

Eigenvalue slots of every active subtree are kept sorted ascending: each
merge starts with a concat-sort permutation and each factor carries its own
post-update sort (new roots can leapfrog deflated eigenvalues).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, PlanMismatch, TooLarge, ZeroDegreeNode
from .graph import COMBINATORIAL, NORMALIZED, Graph, build_laplacian, dense_eig
from .plan import MergePlan
from .secular import (
    CauchyFactor,
    DeflationRecord,
    HouseholderBlock,
    SecularSolution,
    rank_one_update_factor,
)

GFT_VERSION = 1
DENSE_LIMIT_DEFAULT = 2048


@dataclass(eq=False)
class MergeStep:
    """One bridge edge's factor plus the slot sort that follows it."""

    factor: CauchyFactor
    perm: np.ndarray | None  # local to the owning merge range; None = identity

    def apply_forward(self, view: np.ndarray) -> None:
        self.factor.apply_inplace(view)
        if self.perm is not None:
            view[:] = view[self.perm]

    def apply_inverse(self, view: np.ndarray) -> None:
        if self.perm is not None:
            tmp = np.empty_like(view)
            tmp[self.perm] = view
            view[:] = tmp
        self.factor.apply_inplace(view, transpose=True)


@dataclass(eq=False)
class MergeRecord:
    """All factors of one tree node's interface, over positions [start, stop)."""

    node_id: int
    start: int
    stop: int
    concat_perm: np.ndarray | None
    steps: list[MergeStep]


@dataclass(eq=False)
class FactorizedGft:
    """Leaf eigenbases + ordered Cauchy history + final eigenvalues.

    Immutable after construction; forward/inverse are reentrant and act
    column-wise on signal matrices.
    """

    plan: MergePlan
    kind: str
    leaf_bases: list[np.ndarray]
    history: list[MergeRecord]
    lambda_final: np.ndarray
    level_lambdas: dict[int, np.ndarray]
    plan_hash: str = ""
    dense_limit: int = DENSE_LIMIT_DEFAULT

    @property
    def n(self) -> int:
        return self.plan.n

    def _check_rows(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        arr = np.asarray(x, dtype=np.float64)
        vec = arr.ndim == 1
        if arr.shape[0] != self.n:
            raise DimensionMismatch(f"expected {self.n} rows, got {arr.shape[0]}")
        return arr.reshape(self.n, -1), vec

    def forward(self, x: np.ndarray) -> np.ndarray:
        """U^T x: permute, per-leaf transforms, then the factor history."""
        arr, vec = self._check_rows(x)
        y = arr[self.plan.pos_to_node].copy()
        self._leaf_forward(y)
        for rec in self.history:
            view = y[rec.start : rec.stop]
            if rec.concat_perm is not None:
                view[:] = view[rec.concat_perm]
            for step in rec.steps:
                step.apply_forward(view)
        return y[:, 0] if vec else y

    def inverse(self, x: np.ndarray) -> np.ndarray:
        """U x: history transposed in reverse, leaf bases, inverse permutation."""
        arr, vec = self._check_rows(x)
        y = arr.copy()
        for rec in reversed(self.history):
            view = y[rec.start : rec.stop]
            for step in reversed(rec.steps):
                step.apply_inverse(view)
            if rec.concat_perm is not None:
                tmp = np.empty_like(view)
                tmp[rec.concat_perm] = view
                view[:] = tmp
        for i, basis in enumerate(self.leaf_bases):
            nid = self.plan.leaf_node_id[i]
            s0, s1 = self.plan.ranges[nid]
            y[s0:s1] = basis @ y[s0:s1]
        out = y[self.plan.node_to_pos]
        return out[:, 0] if vec else out

    def _leaf_forward(self, y: np.ndarray) -> None:
        for i, basis in enumerate(self.leaf_bases):
            nid = self.plan.leaf_node_id[i]
            s0, s1 = self.plan.ranges[nid]
            y[s0:s1] = basis.T @ y[s0:s1]

    def reconstruct_operator(self, spectral_multiplier: np.ndarray) -> np.ndarray:
        """Materialize U diag(g) U^T densely; verification-scale n only."""
        if self.n > self.dense_limit:
            raise TooLarge(f"n={self.n} exceeds dense limit {self.dense_limit}")
        g = np.asarray(spectral_multiplier, dtype=np.float64)
        if g.shape != (self.n,):
            raise DimensionMismatch("multiplier must have one entry per eigenvalue")
        spec = self.forward(np.eye(self.n))
        return self.inverse(g[:, None] * spec)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        def arr(a):
            return np.asarray(a).tolist()

        steps_out = []
        for rec in self.history:
            steps = []
            for st in rec.steps:
                f = st.factor
                d = f.deflation
                steps.append(
                    {
                        "affected": arr(f.affected),
                        "lambda_old": arr(f.solution.lambda_old),
                        "lambda_new": arr(f.solution.lambda_new),
                        "origins": arr(f.solution.origins),
                        "offsets": arr(f.solution.offsets),
                        "z": arr(f.solution.z),
                        "rho": f.solution.rho,
                        "zhat": arr(f.zhat),
                        "column_norms": arr(f.column_norms),
                        "column_signs": arr(f.column_signs),
                        "size": f.size,
                        "deflation": {
                            "size": d.size,
                            "kept": arr(d.kept),
                            "dropped_zero": arr(d.dropped_zero),
                            "rotated": arr(d.rotated),
                            "z_deflated": arr(d.z_deflated),
                            "blocks": [
                                {
                                    "start": b.start,
                                    "stop": b.stop,
                                    "reflector": arr(b.reflector),
                                    "first_sign": b.first_sign,
                                }
                                for b in d.householder_blocks
                            ],
                        },
                        "perm": arr(st.perm) if st.perm is not None else None,
                    }
                )
            steps_out.append(
                {
                    "node_id": rec.node_id,
                    "start": rec.start,
                    "stop": rec.stop,
                    "concat_perm": arr(rec.concat_perm)
                    if rec.concat_perm is not None
                    else None,
                    "steps": steps,
                }
            )
        return {
            "version": GFT_VERSION,
            "kind": self.kind,
            "plan": self.plan.to_dict(),
            "plan_hash": self.plan_hash,
            "leaf_bases": [arr(b) for b in self.leaf_bases],
            "history": steps_out,
            "lambda_final": arr(self.lambda_final),
            "level_lambdas": {str(k): arr(v) for k, v in self.level_lambdas.items()},
            "dense_limit": self.dense_limit,
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, data: dict) -> FactorizedGft:
        def f64(a):
            return np.asarray(a, dtype=np.float64)

        def i64(a):
            return np.asarray(a, dtype=np.int64)

        history = []
        for rec in data["history"]:
            steps = []
            for st in rec["steps"]:
                dd = st["deflation"]
                deflation = DeflationRecord(
                    size=dd["size"],
                    kept=i64(dd["kept"]),
                    dropped_zero=i64(dd["dropped_zero"]),
                    rotated=i64(dd["rotated"]),
                    householder_blocks=tuple(
                        HouseholderBlock(
                            start=b["start"],
                            stop=b["stop"],
                            reflector=f64(b["reflector"]),
                            first_sign=b["first_sign"],
                        )
                        for b in dd["blocks"]
                    ),
                    z_deflated=f64(dd["z_deflated"]),
                )
                sol = SecularSolution(
                    lambda_old=f64(st["lambda_old"]),
                    lambda_new=f64(st["lambda_new"]),
                    z=f64(st["z"]),
                    rho=st["rho"],
                    origins=i64(st["origins"]),
                    offsets=f64(st["offsets"]),
                )
                factor = CauchyFactor(
                    size=st["size"],
                    affected=i64(st["affected"]),
                    solution=sol,
                    deflation=deflation,
                    zhat=f64(st["zhat"]),
                    column_norms=f64(st["column_norms"]),
                    column_signs=f64(st["column_signs"]),
                )
                perm = i64(st["perm"]) if st["perm"] is not None else None
                steps.append(MergeStep(factor=factor, perm=perm))
            history.append(
                MergeRecord(
                    node_id=rec["node_id"],
                    start=rec["start"],
                    stop=rec["stop"],
                    concat_perm=i64(rec["concat_perm"])
                    if rec["concat_perm"] is not None
                    else None,
                    steps=steps,
                )
            )
        return cls(
            plan=MergePlan.from_dict(data["plan"]),
            kind=data["kind"],
            leaf_bases=[f64(b) for b in data["leaf_bases"]],
            history=history,
            lambda_final=f64(data["lambda_final"]),
            level_lambdas={
                int(k): f64(v) for k, v in data["level_lambdas"].items()
            },
            plan_hash=data["plan_hash"],
            dense_limit=data.get("dense_limit", DENSE_LIMIT_DEFAULT),
        )

    @classmethod
    def load(cls, path: str) -> FactorizedGft:
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _leaf_block(g: Graph, leaf: np.ndarray, kind: str, inv_sqrt_deg) -> np.ndarray:
    """Dense Laplacian of the bridge-stripped graph restricted to one leaf."""
    sub, _ = g.induced_subgraph(leaf)
    block = build_laplacian(sub, COMBINATORIAL).dense()
    if kind == NORMALIZED:
        s = inv_sqrt_deg[leaf]
        block = block * np.outer(s, s)
    return block


def _bridge_vector(plan, u, v, w, kind, inv_sqrt_deg, n):
    z = np.zeros(n)
    if kind == NORMALIZED:
        z[plan.node_to_pos[u]] = np.sqrt(w) * inv_sqrt_deg[u]
        z[plan.node_to_pos[v]] = -np.sqrt(w) * inv_sqrt_deg[v]
    else:
        z[plan.node_to_pos[u]] = np.sqrt(w)
        z[plan.node_to_pos[v]] = -np.sqrt(w)
    return z


def factorize(
    g: Graph,
    plan: MergePlan,
    kind: str = COMBINATORIAL,
    threads: int = 1,
    dense_limit: int = DENSE_LIMIT_DEFAULT,
) -> FactorizedGft:
    """Run the hierarchical merge and return the factorized transform.

    Same-level merges touch disjoint position ranges and run concurrently
    when threads > 1; the bridges inside one interface stay sequential.
    """
    plan.validate(g)
    n = g.n
    inv_sqrt_deg = None
    if kind == NORMALIZED:
        deg = g.degrees()
        zero = np.flatnonzero(deg == 0.0)
        if zero.size:
            raise ZeroDegreeNode(int(zero[0]))
        inv_sqrt_deg = 1.0 / np.sqrt(deg)
    elif kind != COMBINATORIAL:
        raise PlanMismatch(f"unknown Laplacian kind {kind!r}")

    num_leaves = len(plan.leaves)
    leaf_bases: list[np.ndarray | None] = [None] * num_leaves
    leaf_lams: list[np.ndarray | None] = [None] * num_leaves

    def do_leaf(i: int) -> None:
        block = _leaf_block(g, plan.leaves[i], kind, inv_sqrt_deg)
        lam, basis = dense_eig(block)
        leaf_bases[i] = basis
        leaf_lams[i] = lam

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(do_leaf, range(num_leaves)))
    else:
        for i in range(num_leaves):
            do_leaf(i)

    # projected bridge vectors, keyed by canonical edge; full length for
    # simple range views (support only ever grows within subtree ranges)
    zvecs: dict[tuple[int, int], np.ndarray] = {}
    edge_leafpair: dict[tuple[int, int], tuple[int, int]] = {}
    for nid, edges in plan.interfaces.items():
        for u, v, w in edges:
            key = (min(u, v), max(u, v))
            z = _bridge_vector(plan, u, v, w, kind, inv_sqrt_deg, n)
            for node in (u, v):
                li = int(plan.leaf_of[node])
                s0, s1 = plan.ranges[plan.leaf_node_id[li]]
                pos = int(plan.node_to_pos[node])
                z[s0:s1] = leaf_bases[li][pos - s0, :] * z[pos]
            zvecs[key] = z
            edge_leafpair[key] = (int(plan.leaf_of[u]), int(plan.leaf_of[v]))

    node_lam: dict[int, np.ndarray] = {}
    level_lambdas: dict[int, np.ndarray] = {}
    for i in range(num_leaves):
        nid = plan.leaf_node_id[i]
        node_lam[nid] = leaf_lams[i]
        level_lambdas[nid] = leaf_lams[i].copy()

    consumed: set[tuple[int, int]] = set()
    records: dict[int, MergeRecord] = {}

    def touches(key: tuple[int, int], nid: int) -> bool:
        la, lb = edge_leafpair[key]
        leafset = plan.leaf_sets[nid]
        return la in leafset or lb in leafset

    def do_merge(nd) -> None:
        nid = nd.id
        s0, s1 = plan.ranges[nid]
        a, b = nd.children
        lam = np.concatenate([node_lam[a], node_lam[b]])
        concat_perm: np.ndarray | None = None
        if np.any(np.diff(lam) < 0.0):
            concat_perm = np.argsort(lam, kind="stable")
            lam = lam[concat_perm]
        relevant = [k for k in zvecs if k not in consumed and touches(k, nid)]
        if concat_perm is not None:
            for k in relevant:
                view = zvecs[k][s0:s1]
                view[:] = view[concat_perm]
        bridges = sorted(
            plan.interfaces.get(nid, ()),
            key=lambda e: (min(e[0], e[1]), max(e[0], e[1])),
        )
        steps: list[MergeStep] = []
        for u, v, w in bridges:
            key = (min(u, v), max(u, v))
            z = zvecs[key]
            outside = np.linalg.norm(z[:s0]) + np.linalg.norm(z[s1:])
            if outside > 1e-10 * max(1.0, np.linalg.norm(z)):
                raise PlanMismatch(
                    f"bridge ({u},{v}) has spectral mass outside its merge range"
                )
            factor, lam_unsorted = rank_one_update_factor(lam, z[s0:s1], rho=1.0)
            perm: np.ndarray | None = None
            if np.any(np.diff(lam_unsorted) < 0.0):
                perm = np.argsort(lam_unsorted, kind="stable")
                lam = lam_unsorted[perm]
            else:
                lam = lam_unsorted
            consumed.add(key)
            step = MergeStep(factor=factor, perm=perm)
            pending = [k for k in relevant if k not in consumed]
            if pending:
                # one batched apply beats per-edge matvecs for wide interfaces
                stack = np.stack([zvecs[k][s0:s1] for k in pending], axis=1)
                step.apply_forward(stack)
                for j, k in enumerate(pending):
                    zvecs[k][s0:s1] = stack[:, j]
            steps.append(step)
        node_lam[nid] = lam
        level_lambdas[nid] = lam.copy()
        records[nid] = MergeRecord(
            node_id=nid, start=s0, stop=s1, concat_perm=concat_perm, steps=steps
        )

    internal = plan.internal_nodes()
    if threads > 1:
        by_level: dict[int, list] = {}
        for nd in internal:
            by_level.setdefault(plan.level[nd.id], []).append(nd)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for lvl in sorted(by_level):
                list(pool.map(do_merge, by_level[lvl]))
    else:
        for nd in internal:
            do_merge(nd)

    history = [records[nd.id] for nd in internal]
    lambda_final = node_lam[plan.root_id]
    return FactorizedGft(
        plan=plan,
        kind=kind,
        leaf_bases=[b for b in leaf_bases],
        history=history,
        lambda_final=lambda_final,
        level_lambdas=level_lambdas,
        plan_hash=plan.content_hash(),
        dense_limit=dense_limit,
    )
