"""Stratum labels for nonzero brackets via minimum-norm points in convex hulls.

Every nonzero structure-constant triple (i, j, k) of a bracket contributes
the diagonal weight

    alpha_ij^k = E_kk - E_ii - E_jj        (trace -1),

and the label beta of the bracket is the unique minimum-norm point of the
convex hull of its support weights.  The label is reported both raw (the
hull point itself) and chamber-normalized with ascending diagonal.  The
bracket sits in *nice position* when the raw hull point already lies in
the ascending chamber, equivalently when

    min over support of <beta, alpha_ij^k> = |beta|^2,

which an orthogonal change of basis can always arrange but which this
module only tests (a helper tries signed permutations in low dimension).

The minimum-norm point itself is computed with Wolfe's active-set method:
exact affine solves on a corral of points, finite termination on the small
weight sets that arise here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import (
    DEFAULT_TOL,
    AlgebraTensor,
    derivation_algebra,
    derivation_residual,
    moment_map,
    pi_action,
    tensor_inner,
)


class ConvergenceError(RuntimeError):
    """The active-set iteration hit its cap; input is numerically degenerate."""


def pair_weight(i: int, j: int, k: int, dim: int) -> np.ndarray:
    """Diagonal of the weight E_kk - E_ii - E_jj; requires i < j."""
    if not (0 <= i < j < dim and 0 <= k < dim):
        raise ValueError(f"bad weight indices ({i},{j},{k}) for dim {dim}")
    w = np.zeros(dim)
    w[k] += 1.0
    w[i] -= 1.0
    w[j] -= 1.0
    return w


@dataclass
class MinNormResult:
    point: np.ndarray
    coefficients: np.ndarray  # convex weights over the input points
    iterations: int


def _affine_minimizer(pts: np.ndarray) -> np.ndarray:
    """Coefficients of the min-norm point of the affine hull of ``pts`` rows."""
    k = pts.shape[0]
    gram = pts @ pts.T
    lhs = np.zeros((k + 1, k + 1))
    lhs[:k, :k] = gram
    lhs[:k, k] = 1.0
    lhs[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    return sol[:k]


def min_norm_point(
    points: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 10000,
) -> MinNormResult:
    """Minimum-norm point of the convex hull of the rows of ``points``.

    Wolfe's method: grow a corral by the most violating vertex, solve the
    affine subproblem exactly, and walk back along the segment when a
    coefficient leaves the simplex.  Returns the optimal point together
    with convex-combination coefficients over the input rows.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    m = pts.shape[0]
    if m == 0:
        raise ValueError("need at least one point")
    scale = max(1.0, float(np.max(np.linalg.norm(pts, axis=1))))
    eps = tol * scale * scale

    start = int(np.argmin(np.einsum("ij,ij->i", pts, pts)))
    corral = [start]
    lam = np.array([1.0])
    x = pts[start].copy()

    for it in range(max_iter):
        # optimality: <x, p> >= |x|^2 for every vertex p; among violators,
        # only vertices outside the corral can improve the solution
        scores = pts @ x
        in_corral = np.zeros(m, dtype=bool)
        in_corral[corral] = True
        outside = np.where(~in_corral)[0]
        j = int(outside[np.argmin(scores[outside])]) if outside.size else -1
        if j < 0 or scores[j] >= x @ x - eps:
            return MinNormResult(
                point=x,
                coefficients=_full_coefficients(m, corral, lam),
                iterations=it,
            )
        corral.append(j)
        lam = np.append(lam, 0.0)

        while True:
            sub = pts[corral]
            alpha = _affine_minimizer(sub)
            if np.all(alpha > tol):
                lam = alpha
                x = sub.T @ alpha
                break
            neg = alpha <= tol
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = lam[neg] / (lam[neg] - alpha[neg])
            theta = float(np.min(ratios[np.isfinite(ratios)], initial=1.0))
            theta = min(max(theta, 0.0), 1.0)
            lam = (1.0 - theta) * lam + theta * alpha
            keep = lam > tol
            if not np.any(keep):
                keep[int(np.argmax(lam))] = True
            corral = [c for c, k in zip(corral, keep) if k]
            lam = lam[keep]
            lam = np.clip(lam, 0.0, None)
            lam /= lam.sum()
            x = pts[corral].T @ lam
    raise ConvergenceError(f"min-norm point did not converge in {max_iter} iterations")


def _full_coefficients(m: int, corral, lam) -> np.ndarray:
    coeff = np.zeros(m)
    coeff[corral] = np.clip(lam, 0.0, None)
    s = coeff.sum()
    if s > 0:
        coeff /= s
    return coeff


@dataclass
class StratumData:
    """Support, label and chamber data of a nonzero bracket."""

    support: tuple[tuple[int, int, int], ...]
    beta_raw: np.ndarray  # min-norm point of the support hull (diagonal)
    beta: np.ndarray  # chamber representative: ascending diagonal
    coefficients: np.ndarray  # convex weights over the support
    beta_norm_sq: float
    nice_position: bool
    min_pairing: float  # min over support of <beta, alpha_ij^k>

    @property
    def trace(self) -> float:
        return float(np.sum(self.beta_raw))


def support_of(mu: AlgebraTensor, rel_threshold: float = 1e-12) -> tuple[tuple[int, int, int], ...]:
    """Structure-constant triples with |c| above ``rel_threshold`` * max|c|."""
    if not mu.entries:
        return ()
    cmax = max(abs(c) for _, _, _, c in mu.entries)
    return tuple((i, j, k) for i, j, k, c in mu.entries if abs(c) > rel_threshold * cmax)


def stratum_label(
    mu: AlgebraTensor,
    rel_threshold: float = 1e-12,
    tol: float = DEFAULT_TOL,
) -> StratumData:
    """Label beta of a nonzero bracket plus the nice-position test.

    The support threshold is relative to the largest structure constant;
    the support, hence beta, is discontinuous in mu, so the threshold is
    part of the result's meaning.
    """
    supp = support_of(mu, rel_threshold)
    if not supp:
        raise ValueError("stratum label is undefined for the zero bracket")
    weights = np.array([pair_weight(i, j, k, mu.dim) for i, j, k in supp])
    res = min_norm_point(weights)
    beta_raw = res.point
    beta = np.sort(beta_raw)
    nsq = float(beta @ beta)
    min_pairing = float(np.min(weights @ beta))
    nice = abs(min_pairing - nsq) <= tol * max(1.0, nsq)
    return StratumData(
        support=supp,
        beta_raw=beta_raw,
        beta=beta,
        coefficients=res.coefficients,
        beta_norm_sq=nsq,
        nice_position=nice,
        min_pairing=min_pairing,
    )


def nice_position_search(mu: AlgebraTensor, rel_threshold: float = 1e-12):
    """Try basis permutations to land mu in nice position (dim <= 8).

    Returns (permuted tensor, permutation) or None.  Convenience only;
    orthogonal repositioning in general is out of scope.
    """
    from itertools import permutations

    if mu.dim > 8:
        raise ValueError("permutation search only supported for dim <= 8")
    for perm in permutations(range(mu.dim)):
        entries = []
        for i, j, k, c in mu.entries:
            entries.append((perm[i], perm[j], perm[k], c))
        cand = AlgebraTensor(mu.dim, tuple(entries))
        if stratum_label(cand, rel_threshold).nice_position:
            return cand, perm
    return None


@dataclass
class PropertyCheck:
    name: str
    anchor: str
    value: float
    passed: bool
    asserted: bool = True  # False when the hypothesis (nice position) is absent


@dataclass
class StrataReport:
    stratum: StratumData
    checks: list[PropertyCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.asserted)


def strata_properties(
    mu: AlgebraTensor,
    der_basis: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    rel_threshold: float = 1e-12,
) -> StrataReport:
    """Evaluate the label inequalities for a nonzero nilpotent bracket.

    Always evaluated: PSD of D -> <[beta, D], D> on the derivation algebra,
    positivity of beta + |beta|^2 I, and |beta| <= |m(mu)| with its equality
    clause.  Only asserted in nice position: tr(beta D) = 0 on derivations
    and <pi(beta + |beta|^2 I) mu, mu> >= 0 with equality exactly for a
    derivation.
    """
    data = stratum_label(mu, rel_threshold, tol)
    if der_basis is None:
        der_basis = derivation_algebra(mu)
    beta = np.diag(data.beta_raw)
    nsq = data.beta_norm_sq
    checks: list[PropertyCheck] = []

    # <[beta, D], D> >= 0 on Der(mu): PSD of the restricted bilinear form
    nder = der_basis.shape[0]
    gram = np.zeros((nder, nder))
    for a in range(nder):
        ba = beta @ der_basis[a] - der_basis[a] @ beta
        for b in range(nder):
            gram[a, b] = float(np.sum(ba * der_basis[b]))
    gram = 0.5 * (gram + gram.T)
    lam_min = float(np.min(np.linalg.eigvalsh(gram))) if nder else 0.0
    checks.append(
        PropertyCheck(
            name="bracket-with-label-psd",
            anchor="<[beta,D],D> >= 0 for D in Der(mu)",
            value=lam_min,
            passed=lam_min >= -tol,
        )
    )

    # beta + |beta|^2 I positive definite (diagonal)
    min_entry = float(np.min(data.beta_raw + nsq))
    checks.append(
        PropertyCheck(
            name="shifted-label-positive",
            anchor="beta + |beta|^2 I > 0",
            value=min_entry,
            passed=min_entry > tol,
        )
    )

    # |beta| <= |m(mu)|, equality iff identical sorted spectra
    m = moment_map(mu)
    m_norm = float(np.linalg.norm(m))
    b_norm = float(np.sqrt(nsq))
    gap = m_norm - b_norm
    checks.append(
        PropertyCheck(
            name="label-below-moment-norm",
            anchor="|beta| <= |m(mu)|",
            value=gap,
            passed=gap >= -tol * max(1.0, m_norm),
        )
    )
    spec_gap = float(np.max(np.abs(np.linalg.eigvalsh(m) - data.beta)))
    equality = abs(gap) <= tol * max(1.0, m_norm)
    spectra_match = spec_gap <= 1e-6 * max(1.0, m_norm)
    checks.append(
        PropertyCheck(
            name="moment-norm-equality-clause",
            anchor="|beta| = |m(mu)| iff m(mu) conjugate to beta",
            value=spec_gap,
            passed=equality == spectra_match,
        )
    )

    # tr(beta D) = 0 on the derivation basis (nice position hypothesis)
    tr_max = 0.0
    for d in der_basis:
        tr_max = max(tr_max, abs(float(np.trace(beta @ d))))
    checks.append(
        PropertyCheck(
            name="label-trace-orthogonal-to-derivations",
            anchor="tr(beta D) = 0 for D in Der(mu)",
            value=tr_max,
            passed=tr_max <= tol,
            asserted=data.nice_position,
        )
    )

    # <pi(beta + |beta|^2 I) mu, mu> >= 0, equality iff it is a derivation
    shifted = beta + nsq * np.eye(mu.dim)
    pairing = tensor_inner(pi_action(shifted, mu), mu)
    checks.append(
        PropertyCheck(
            name="shifted-label-pairing-nonnegative",
            anchor="<pi(beta + |beta|^2 I) mu, mu> >= 0",
            value=pairing,
            passed=pairing >= -tol * max(1.0, mu.norm_sq),
            asserted=data.nice_position,
        )
    )
    der_res = derivation_residual(mu, shifted)
    pairing_zero = abs(pairing) <= tol * max(1.0, mu.norm_sq)
    is_der = der_res <= 1e-6 * max(1.0, mu.norm)
    checks.append(
        PropertyCheck(
            name="pairing-equality-clause",
            anchor="pairing = 0 iff beta + |beta|^2 I in Der(mu)",
            value=der_res,
            passed=pairing_zero == is_der,
            asserted=data.nice_position,
        )
    )
    return StrataReport(stratum=data, checks=checks)


@dataclass
class PairingReport:
    """Four-way split of <pi(E_beta) [.,.]_p, [.,.]_p> for a decomposition."""

    lam0_term: float
    lam1_term: float
    eta_term: float
    mu_term: float
    total: float
    direct: float  # same pairing evaluated on the whole p-bracket at once
    stratum: StratumData

    @property
    def summands_nonnegative(self) -> bool:
        tol = 1e-9 * max(1.0, abs(self.total))
        return all(
            v >= -tol for v in (self.lam0_term, self.lam1_term, self.eta_term, self.mu_term)
        )

    @property
    def split_defect(self) -> float:
        return abs(self.total - self.direct)


def e_beta_pairing(dec, tol: float = DEFAULT_TOL) -> PairingReport:
    """Pairing of the p-bracket against its E_beta action, term by term.

    E_beta vanishes on h and equals beta + |beta|^2 I on n.  The pairing
    splits over the four bracket components; the h x h -> h term vanishes
    identically, the remaining three are individually nonnegative when the
    nilpotent part is in nice position (refused otherwise, since that is
    the hypothesis that makes the label usable).
    """
    from .tensor import pi_action_dense

    bb = dec.blocks()
    mu = bb.mu_tensor()
    if dec.dim_n == 0 or mu.norm == 0.0:
        raise ValueError("pairing needs a nonzero nilpotent part")
    stratum = stratum_label(mu)
    if not stratum.nice_position:
        raise ValueError("nilpotent part is not in nice position")

    npd = dec.dim_p
    sh, sn = dec.sh_p, dec.sn_p
    e_b = np.zeros((npd, npd))
    e_b[sn, sn] = np.diag(stratum.beta_raw) + stratum.beta_norm_sq * np.eye(dec.dim_n)

    t_p = dec.p_bracket.dense

    def component(si, sj, sk):
        comp = np.zeros_like(t_p)
        comp[si, sj, sk] = t_p[si, sj, sk]
        if si != sj:
            comp[sj, si, sk] = t_p[sj, si, sk]
        return comp

    terms = {}
    for name, comp in (
        ("lam0", component(sh, sh, sh)),
        ("lam1", component(sh, sh, sn)),
        ("eta", component(sh, sn, sn)),
        ("mu", component(sn, sn, sn)),
    ):
        terms[name] = float(np.sum(pi_action_dense(e_b, comp) * comp))

    direct = float(np.sum(pi_action_dense(e_b, t_p) * t_p))
    total = sum(terms.values())
    return PairingReport(
        lam0_term=terms["lam0"],
        lam1_term=terms["lam1"],
        eta_term=terms["eta"],
        mu_term=terms["mu"],
        total=total,
        direct=direct,
        stratum=stratum,
    )
