"""Skew-symmetric bracket tensors on an inner-product space.

A bracket mu in Lambda^2(R^n)* (x) R^n is stored sparsely as structure
constants mu(e_i, e_j) = sum_k c * e_k with canonical keys i < j; the
value at (j, i) is implied by skew-symmetry.  All numerics run on a dense
(n, n, n) array T with T[i, j, k] = <mu(e_i, e_j), e_k>, which is skew in
its first two slots.

Conventions fixed here and used by every downstream module:

* the inner product on tensors sums over ALL ordered index pairs,
      <mu, lam> = sum_{i,j} <mu(e_i, e_j), lam(e_i, e_j)>,
  so each unordered pair is counted twice;
* gl(n) acts through the derived action
      pi(a) mu = a mu(.,.) - mu(a ., .) - mu(., a .),
  whose kernel is the derivation algebra of mu;
* the moment map m(mu) and the quarter-scaled operator M(mu) are tied by
      M = (|mu|^2 / 4) m(mu),   tr(M E) = (1/4) <pi(E) mu, mu>.

Under this ordered-pair convention the Heisenberg bracket mu(e1,e2) = e3
has |mu|^2 = 2 and m(mu) = diag(-1, -1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-9

Entry = tuple[int, int, int, float]


def _canonical_entries(dim: int, entries) -> tuple[Entry, ...]:
    acc: dict[tuple[int, int, int], float] = {}
    for i, j, k, c in entries:
        i, j, k = int(i), int(j), int(k)
        if not (0 <= i < dim and 0 <= j < dim and 0 <= k < dim):
            raise ValueError(f"index out of range in entry ({i},{j},{k}) for dim {dim}")
        if i == j:
            raise ValueError(f"diagonal entry ({i},{i},{k}) is not allowed")
        if i > j:
            i, j, c = j, i, -c
        key = (i, j, k)
        acc[key] = acc.get(key, 0.0) + float(c)
    return tuple(
        (i, j, k, c) for (i, j, k), c in sorted(acc.items()) if c != 0.0
    )


@dataclass(frozen=True)
class AlgebraTensor:
    """Sparse skew-symmetric bilinear map mu: R^dim x R^dim -> R^dim."""

    dim: int
    entries: tuple[Entry, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "entries", _canonical_entries(self.dim, self.entries))
        dense = np.zeros((self.dim, self.dim, self.dim))
        for i, j, k, c in self.entries:
            dense[i, j, k] = c
            dense[j, i, k] = -c
        dense.setflags(write=False)
        object.__setattr__(self, "_dense", dense)

    @classmethod
    def from_dense(cls, dense: np.ndarray, zero_tol: float = 0.0) -> "AlgebraTensor":
        dense = np.asarray(dense, dtype=float)
        n = dense.shape[0]
        if dense.shape != (n, n, n):
            raise ValueError(f"dense tensor must be cubic, got {dense.shape}")
        if n == 0:
            return cls(0)
        skew_defect = np.max(np.abs(dense + np.swapaxes(dense, 0, 1)))
        if skew_defect > max(zero_tol, 1e-12 * max(1.0, np.max(np.abs(dense)))):
            raise ValueError(f"tensor is not skew-symmetric (defect {skew_defect:.3e})")
        cut = max(zero_tol, 0.0)
        entries = [
            (i, j, k, dense[i, j, k])
            for i in range(n)
            for j in range(i + 1, n)
            for k in range(n)
            if abs(dense[i, j, k]) > cut
        ]
        return cls(n, tuple(entries))

    @property
    def dense(self) -> np.ndarray:
        return self._dense  # type: ignore[attr-defined]

    @property
    def norm_sq(self) -> float:
        return float(np.sum(self.dense**2))

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq))

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.norm <= tol

    def apply(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """mu(x, y) for coordinate vectors x, y."""
        return np.einsum("ijk,i,j->k", self.dense, x, y)

    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of mu(x, .)."""
        return np.einsum("ijk,i->kj", self.dense, x)

    def map_basis(self, frame: np.ndarray) -> "AlgebraTensor":
        """Structure constants in the basis given by the columns of ``frame``."""
        finv = np.linalg.inv(frame)
        t = np.einsum("ia,ijk->ajk", frame, self.dense)
        t = np.einsum("jb,ajk->abk", frame, t)
        t = np.einsum("ck,abk->abc", finv, t)
        return AlgebraTensor.from_dense(t, zero_tol=0.0)

    def restrict(self, idx) -> "AlgebraTensor":
        """Sub-bracket on span(e_i : i in idx), keeping only components inside it."""
        idx = np.asarray(idx, dtype=int)
        sub = self.dense[np.ix_(idx, idx, idx)]
        return AlgebraTensor.from_dense(sub)

    def __add__(self, other: "AlgebraTensor") -> "AlgebraTensor":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return AlgebraTensor.from_dense(self.dense + other.dense)

    def scale(self, c: float) -> "AlgebraTensor":
        return AlgebraTensor(self.dim, tuple((i, j, k, c * v) for i, j, k, v in self.entries))


def tensor_inner(mu: AlgebraTensor, lam: AlgebraTensor) -> float:
    """<mu, lam> summed over all ordered basis pairs (twice each i < j term)."""
    if mu.dim != lam.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {lam.dim}")
    return float(np.sum(mu.dense * lam.dense))


def pi_action(alpha: np.ndarray, mu: AlgebraTensor) -> AlgebraTensor:
    """Derived gl-action pi(alpha) mu = alpha mu(.,.) - mu(alpha ., .) - mu(., alpha .)."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (mu.dim, mu.dim):
        raise ValueError(f"operator shape {alpha.shape} does not match dim {mu.dim}")
    t = mu.dense
    out = np.einsum("kl,ijl->ijk", alpha, t)
    out -= np.einsum("pi,pjk->ijk", alpha, t)
    out -= np.einsum("pj,ipk->ijk", alpha, t)
    return AlgebraTensor.from_dense(out)


def pi_action_dense(alpha: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Same as :func:`pi_action` on a raw dense tensor (no canonicalization)."""
    out = np.einsum("kl,ijl->ijk", alpha, t)
    out -= np.einsum("pi,pjk->ijk", alpha, t)
    out -= np.einsum("pj,ipk->ijk", alpha, t)
    return out


def jacobi_residual(mu: AlgebraTensor) -> float:
    """Euclidean norm of the Jacobiator over all i < j < l basis triples.

    Zero (up to roundoff) exactly when mu satisfies the Jacobi identity.
    """
    t = mu.dense
    c = np.einsum("ijk,klm->ijlm", t, t)
    jac = c + np.transpose(c, (1, 2, 0, 3)) + np.transpose(c, (2, 0, 1, 3))
    n = mu.dim
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(j + 1, n):
                total += float(np.sum(jac[i, j, l] ** 2))
    return float(np.sqrt(total))


def is_lie_bracket(mu: AlgebraTensor, tol: float = DEFAULT_TOL) -> bool:
    return jacobi_residual(mu) <= tol * max(1.0, mu.norm_sq)


def nilpotency_class(mu: AlgebraTensor, tol: float = DEFAULT_TOL) -> int | None:
    """Length of the lower central series, or None if it stabilizes nonzero.

    Returns 1 for abelian, 2 for Heisenberg, ...; requires mu to satisfy
    Jacobi (raises otherwise), since the series is only meaningful for Lie
    brackets.
    """
    if not is_lie_bracket(mu, tol):
        raise ValueError(f"not a Lie bracket (Jacobi residual {jacobi_residual(mu):.3e})")
    n = mu.dim
    if n == 0:
        return 1
    t = mu.dense
    basis = np.eye(n)
    step = 1
    prev_rank = n
    while step <= n + 1:
        # span of [g, W] for the current term W of the series
        img = np.einsum("ijk,ja->iak", t, basis).reshape(-1, n)
        _, sv, vh = np.linalg.svd(img)
        if len(sv) == 0 or sv[0] <= tol * max(1.0, mu.norm):
            return step
        rank = int(np.sum(sv > tol * sv[0]))
        if rank >= prev_rank:
            return None
        basis = vh[:rank].T
        prev_rank = rank
        step += 1
    return None


def _gram_pair(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # out[p,q] = sum_{ij} T_ijp T_ijq ; inn[p,q] = sum_{jk} T_pjk T_qjk
    out = np.einsum("ijp,ijq->pq", t, t)
    inn = np.einsum("pjk,qjk->pq", t, t)
    return out, inn


def moment_map(mu: AlgebraTensor) -> np.ndarray:
    """Moment map value m(mu) in sym(n), normalized so that m(c mu) = m(mu).

    Satisfies <m(mu), a> = |mu|^{-2} <pi(a) mu, mu> for every a in gl(n).
    """
    nrm2 = mu.norm_sq
    if nrm2 == 0.0:
        raise ValueError("moment map is undefined at the zero tensor")
    out, inn = _gram_pair(mu.dense)
    return (out - 2.0 * inn) / nrm2


def moment_operator(mu: AlgebraTensor) -> np.ndarray:
    """The symmetric operator M with tr(M E) = (1/4) <pi(E) mu, mu>.

    Equals (|mu|^2 / 4) m(mu) for mu != 0 and vanishes at mu = 0.
    """
    out, inn = _gram_pair(mu.dense)
    return 0.25 * out - 0.5 * inn


def pi_matrix(mu: AlgebraTensor) -> np.ndarray:
    """Matrix of a |-> pi(a) mu, rows indexed by (i<j, k), columns by (a, b)."""
    n = mu.dim
    t = mu.dense
    rows_idx = [(i, j) for i in range(n) for j in range(i + 1, n)]
    # d(pi(alpha)mu)[i,j,k] / d alpha[a,b] = delta_{ka} T[i,j,b]
    #                                        - delta_{bi} T[a,j,k] - delta_{bj} T[i,a,k]
    m = np.zeros((len(rows_idx) * n, n * n))
    for a in range(n):
        for b in range(n):
            col = np.zeros((n, n, n))
            col[:, :, a] += t[:, :, b]
            col[b, :, :] -= t[a, :, :]
            col[:, b, :] -= t[:, a, :]
            rows = np.array([col[i, j] for (i, j) in rows_idx]).reshape(-1)
            m[:, a * n + b] = rows
    return m


def derivation_algebra(mu: AlgebraTensor, rank_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of Der(mu) = ker(a -> pi(a) mu), stacked (m, n, n).

    Orthonormal for the Frobenius pairing tr(A B^t).
    """
    n = mu.dim
    if n == 0:
        return np.zeros((0, 0, 0))
    m = pi_matrix(mu)
    u, s, vh = np.linalg.svd(m)
    smax = s[0] if len(s) else 0.0
    cut = rank_tol * max(1.0, smax)
    null = vh[np.concatenate([s, np.zeros(vh.shape[0] - len(s))]) <= cut]
    return null.reshape(-1, n, n)


def derivation_residual(mu: AlgebraTensor, alpha: np.ndarray) -> float:
    """|pi(alpha) mu| as an absolute residual of the derivation property."""
    return pi_action(alpha, mu).norm
