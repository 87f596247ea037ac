"""Assembling solitons from parts, and trading solitons for Einstein metrics.

The builder takes

    (d1) a metric nilpotent algebra (n, ip_n) with Ric_n = c I + D1,
    (d2) a metric reductive pair (u = k + h, ip_h),
    (d3) a homomorphism theta: u -> Der(n)

subject to the compatibility conditions

    (c1) theta(Z)^t = -theta(Z) for Z in k,
    (c2) sum_i [theta(Y_i), theta(Y_i)^t] = 0 over an orthonormal h-basis,
    (c3) Ric_u = c I + C_theta with <C_theta Y, Y> = tr S(theta(Y))^2,

and produces the semidirect sum g = u (+) n with h perpendicular to n,
whose Ricci operator is then predicted to be

    Ric = c I + diag(-S(ad_u H|_h), -S(theta(H)) + D1),

with H in h defined by <H, Y> = tr theta(Y).  The prediction is always
cross-checked against the direct Ricci computation.

Three metric modifications move between solitons and Einstein spaces; all
three return decompositions expressed in an adapted orthonormal basis (so
their stored inner product is the identity):

* on a non-unimodular algebraic soliton, replacing the adjoint action of H
  on the unimodular kernel by alpha (S(ad H) + D), alpha = |H|/sqrt(tr D1),
  yields an Einstein metric with the same constant c;
* restricting an algebraic soliton to the unimodular kernel of H yields an
  algebraic soliton with derivation D' = (D + S(ad H)) restricted;
* a unimodular algebraic soliton extends by one dimension, ad A = alpha D
  with alpha = 1/sqrt(tr D1), |A| = 1, A perpendicular to p, to an Einstein
  metric with the same constant c.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomposition import DecompositionError, MetricDecomposition, Violation, frob, sym
from .soliton import (
    SOLITON_RESIDUAL_TOL,
    TAG_ALGEBRAIC,
    TAG_EINSTEIN,
    TAG_NONE,
    TAG_SEMI_ALGEBRAIC,
    SolitonCertificate,
    soliton_fit,
)
from .tensor import DEFAULT_TOL, AlgebraTensor, pi_action_dense


class ConstructionError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{v.code}: {v.detail}" for v in self.violations)
        super().__init__(msg or "invalid construction data")


@dataclass
class ConstructionData:
    """Input data for the semidirect builder.

    ``theta`` stacks the matrices theta(u-basis vector) on n, shape
    (dim_u, dim_n, dim_n), in the user bases.  ``c`` and ``d1`` are the
    nilpotent part's soliton certificate; optional inner products default
    to identities.
    """

    n_bracket: AlgebraTensor
    c: float
    d1: np.ndarray
    u_bracket: AlgebraTensor
    dim_k: int
    theta: np.ndarray
    ip_n: np.ndarray | None = None
    ip_h: np.ndarray | None = None

    @property
    def dim_u(self) -> int:
        return self.u_bracket.dim

    @property
    def dim_h(self) -> int:
        return self.dim_u - self.dim_k

    @property
    def dim_n(self) -> int:
        return self.n_bracket.dim

    def normalized(self) -> "ConstructionData":
        """Same data rewritten in bases where ip_n and ip_h are identities."""
        if self.ip_n is None and self.ip_h is None:
            return self
        theta = np.array(self.theta, dtype=float, copy=True)
        n_bracket = self.n_bracket
        d1 = np.asarray(self.d1, dtype=float)
        u_bracket = self.u_bracket
        if self.ip_n is not None:
            f_n = np.linalg.inv(np.linalg.cholesky(np.asarray(self.ip_n, dtype=float))).T
            f_n_inv = np.linalg.inv(f_n)
            n_bracket = n_bracket.map_basis(f_n)
            d1 = f_n_inv @ d1 @ f_n
            theta = np.stack([f_n_inv @ t @ f_n for t in theta])
        if self.ip_h is not None:
            f_h = np.linalg.inv(np.linalg.cholesky(np.asarray(self.ip_h, dtype=float))).T
            f_u = np.eye(self.dim_u)
            f_u[self.dim_k :, self.dim_k :] = f_h
            u_bracket = u_bracket.map_basis(f_u)
            theta = np.einsum("ua,aij->uij", f_u, theta)
        return ConstructionData(
            n_bracket=n_bracket,
            c=self.c,
            d1=d1,
            u_bracket=u_bracket,
            dim_k=self.dim_k,
            theta=theta,
        )


def validate_construction(data: ConstructionData, tol: float = DEFAULT_TOL) -> list[Violation]:
    """Residual report for (d1)-(d3) and (c1)-(c3); empty means buildable."""
    data = data.normalized()
    out: list[Violation] = []
    dn, du, dk, dh = data.dim_n, data.dim_u, data.dim_k, data.dim_h
    theta = np.asarray(data.theta, dtype=float)
    if theta.shape != (du, dn, dn):
        return [Violation("theta-shape", f"expected ({du},{dn},{dn}), got {theta.shape}")]
    nscale = max(1.0, data.n_bracket.norm)

    # nilpotent part must carry the declared certificate
    try:
        ndec = MetricDecomposition(data.n_bracket, 0, 0, dn, tol=tol)
    except DecompositionError as err:
        return list(err.violations)
    ric_n = ndec.ricci().matrix
    r = frob(ric_n - data.c * np.eye(dn) - np.asarray(data.d1))
    if r > SOLITON_RESIDUAL_TOL * max(1.0, frob(ric_n)):
        out.append(Violation("nil-certificate", "Ric_n != c I + D1", r))
    r = frob(pi_action_dense(np.asarray(data.d1), data.n_bracket.dense))
    if r > 1e-6 * nscale:
        out.append(Violation("d1-not-derivation", "D1 is not a derivation of n", r))

    # u must be a reductive Lie algebra with the k/h closure
    try:
        udec = MetricDecomposition(data.u_bracket, dk, dh, 0, tol=tol)
    except DecompositionError as err:
        return out + list(err.violations)
    if not _is_reductive(data.u_bracket, tol):
        out.append(Violation("u-not-reductive", "u is not semisimple plus center"))

    # theta: homomorphism into Der(n)
    worst_hom = 0.0
    worst_der = 0.0
    tu = data.u_bracket.dense
    for a in range(du):
        worst_der = max(worst_der, frob(pi_action_dense(theta[a], data.n_bracket.dense)))
        for b in range(du):
            lhs = np.einsum("c,cij->ij", tu[a, b], theta)
            rhs = theta[a] @ theta[b] - theta[b] @ theta[a]
            worst_hom = max(worst_hom, frob(lhs - rhs))
    if worst_der > tol * nscale:
        out.append(Violation("theta-not-derivations", "theta(u) must lie in Der(n)", worst_der))
    if worst_hom > tol * max(1.0, nscale):
        out.append(
            Violation("theta-not-homomorphism", "theta([Y,Y']) != [theta Y, theta Y']", worst_hom)
        )

    # (c1) isotropy acts skewly
    for z in range(dk):
        r = frob(theta[z] + theta[z].T)
        if r > tol * nscale:
            out.append(Violation("c1-skew", f"theta(k basis {z}) not skew", r))

    # (c2) commutator sum over the h-block
    comm = np.zeros((dn, dn))
    for a in range(dh):
        ta = theta[dk + a]
        comm = comm + ta @ ta.T - ta.T @ ta
    r = frob(comm)
    if r > tol * max(1.0, nscale**2):
        out.append(Violation("c2-commutator-sum", "sum_i [theta(Y_i), theta(Y_i)^t] != 0", r))

    # (c3) reductive-part Ricci
    ric_u = udec.ricci().matrix
    if dh:
        sym_theta = np.stack([sym(theta[dk + a]) for a in range(dh)])
        c_theta = np.einsum("aij,bij->ab", sym_theta, sym_theta)
    else:
        c_theta = np.zeros((0, 0))
    r = frob(ric_u - data.c * np.eye(dh) - c_theta)
    if r > SOLITON_RESIDUAL_TOL * max(1.0, frob(ric_u) + abs(data.c)):
        out.append(Violation("c3-reductive-ricci", "Ric_u != c I + C_theta", r))
    return out


def _is_reductive(u_bracket: AlgebraTensor, tol: float) -> bool:
    """u is reductive iff u = [u,u] (+) z(u) with Killing nondegenerate on [u,u]."""
    n = u_bracket.dim
    if n == 0:
        return True
    t = u_bracket.dense
    img = t.reshape(-1, n)
    _, s, vh = np.linalg.svd(img)
    rank = int(np.sum(s > tol * max(1.0, s[0] if len(s) else 0.0)))
    derived = vh[:rank].T
    # center: nullspace of x -> ad(x), columns of the (n^2, n) stacked map
    ad_map = np.array([u_bracket.ad(np.eye(n)[i]).reshape(-1) for i in range(n)]).T
    _, s2, vh2 = np.linalg.svd(ad_map)
    smax = s2[0] if len(s2) else 0.0
    cut = tol * max(1.0, smax)
    null = vh2[np.concatenate([s2, np.zeros(vh2.shape[0] - len(s2))]) <= cut]
    center = null.T
    if rank + center.shape[1] != n:
        return False
    joint = np.concatenate([derived, center], axis=1)
    sv = np.linalg.svd(joint, compute_uv=False)
    if len(sv) and sv[-1] <= tol * max(1.0, sv[0]):
        return False
    b = np.einsum("ilk,jkl->ij", t, t)
    if rank:
        ev = np.abs(np.linalg.eigvalsh(derived.T @ b @ derived))
        if np.min(ev) <= tol * max(1.0, np.max(ev)):
            return False
    return True


def assemble_semidirect(
    data: ConstructionData, tol: float = DEFAULT_TOL, check: bool = True
) -> MetricDecomposition:
    """Raw semidirect sum g = u (+) n with bracket [Y, X] = theta(Y) X.

    Only the decomposition's own invariants are checked (Jacobi still
    requires theta to be a homomorphism into Der(n)); compatibility with a
    soliton certificate is :func:`build_semidirect`'s job.
    """
    data = data.normalized()
    du, dn = data.dim_u, data.dim_n
    dim = du + dn
    t = np.zeros((dim, dim, dim))
    t[:du, :du, :du] = data.u_bracket.dense
    theta = np.asarray(data.theta, dtype=float)
    for a in range(du):
        t[a, du:, du:] = theta[a].T  # row x, col k: <[Y_a, X_x], X_k> = theta[a][k, x]
        t[du:, a, du:] = -theta[a].T
    t[du:, du:, du:] = data.n_bracket.dense
    bracket = AlgebraTensor.from_dense(t)
    return MetricDecomposition(bracket, data.dim_k, data.dim_h, dn, tol=tol, check=check)


@dataclass
class BuildResult:
    decomposition: MetricDecomposition
    certificate: SolitonCertificate
    predicted_ricci: np.ndarray
    prediction_residual: float


def build_semidirect(data: ConstructionData, tol: float = DEFAULT_TOL) -> BuildResult:
    """Certified semidirect build: validate (c1)-(c3), assemble, predict.

    Raises :class:`ConstructionError` with the failing residuals when the
    data does not satisfy the compatibility conditions; otherwise returns
    the decomposition, the predicted certificate, and the gap between the
    predicted and directly computed Ricci operators.
    """
    violations = validate_construction(data, tol)
    if violations:
        raise ConstructionError(violations)
    data = data.normalized()
    dec = assemble_semidirect(data, tol)
    dk, dh, dn = data.dim_k, data.dim_h, data.dim_n
    theta = np.asarray(data.theta, dtype=float)

    # H in h with <H, Y> = tr theta(Y); traces vanish on k by (c1)
    h_coords = np.array([np.trace(theta[dk + a]) for a in range(dh)])
    ad_u_h = np.zeros((du := data.dim_u, du))
    for a in range(dh):
        ad_u_h += h_coords[a] * data.u_bracket.ad(np.eye(du)[dk + a])
    theta_h = (
        np.einsum("a,aij->ij", h_coords, theta[dk:]) if dh else np.zeros((dn, dn))
    )

    predicted = data.c * np.eye(dh + dn)
    predicted[:dh, :dh] += -sym(ad_u_h[dk:, dk:])
    predicted[dh:, dh:] += -sym(theta_h) + np.asarray(data.d1)

    direct = dec.ricci().matrix
    gap = frob(direct - predicted)

    d_full = np.zeros((dec.dim, dec.dim))
    d_full[:du, :du] = -ad_u_h
    d_full[dec.sn, dec.sn] = -theta_h + np.asarray(data.d1)
    resid = frob(direct - data.c * np.eye(dh + dn) - sym(d_full[dec.sp, dec.sp]))
    der_defect = dec.derivation_residual_on(d_full)
    sym_defect = dec.derivation_residual_on(sym(d_full))

    scale_h = max(1.0, frob(ad_u_h))
    scale_t = max(1.0, frob(theta_h))
    einstein = (
        frob(sym(ad_u_h)) <= tol * scale_h
        and frob(np.asarray(data.d1) - sym(theta_h)) <= tol * scale_t
    )
    normal = (
        frob(ad_u_h @ ad_u_h.T - ad_u_h.T @ ad_u_h) <= tol * scale_h**2
        and frob(theta_h @ theta_h.T - theta_h.T @ theta_h) <= tol * scale_t**2
    )
    if resid > SOLITON_RESIDUAL_TOL * max(1.0, frob(direct)):
        tag = TAG_NONE
    elif einstein:
        tag = TAG_EINSTEIN
    elif normal:
        tag = TAG_ALGEBRAIC
    else:
        tag = TAG_SEMI_ALGEBRAIC

    cert = SolitonCertificate(
        c=data.c,
        d_full=d_full,
        d1=np.asarray(data.d1, dtype=float),
        residual=resid,
        tag=tag,
        derivation_defect=der_defect,
        sym_derivation_defect=sym_defect,
        dim_k=dk,
        dim_h=dh,
    )
    return BuildResult(
        decomposition=dec,
        certificate=cert,
        predicted_ricci=predicted,
        prediction_residual=gap,
    )


# ---------------------------------------------------------------------------
# Einstein metrics from algebraic solitons
# ---------------------------------------------------------------------------

def _require_algebraic(cert: SolitonCertificate):
    if cert.tag not in (TAG_ALGEBRAIC, TAG_EINSTEIN):
        raise ValueError(f"operation needs an algebraic soliton certificate, got {cert.tag}")
    if frob(cert.d_full - cert.d_full.T) > 1e-6 * max(1.0, frob(cert.d_full)):
        raise ValueError("certificate derivation is not symmetric")


def _embed_p(dec: MetricDecomposition, x_p: np.ndarray) -> np.ndarray:
    full = np.zeros(dec.dim)
    full[dec.sp] = x_p
    return full


def _adapted_h_frame(dec: MetricDecomposition) -> tuple[np.ndarray, float]:
    """Orthogonal g-frame rotating H/|H| into the first h-coordinate."""
    h = dec.mean_curvature()
    hnorm = float(np.linalg.norm(h))
    if hnorm <= dec.tol * max(1.0, dec.bracket.norm):
        raise ValueError("mean curvature vanishes (unimodular algebra)")
    nh = dec.dim_h
    hh = h[:nh] / hnorm
    q, _ = np.linalg.qr(np.concatenate([hh[:, None], np.eye(nh)], axis=1))
    q = q[:, :nh]
    if q[:, 0] @ hh < 0:
        q[:, 0] = -q[:, 0]
    frame = np.eye(dec.dim)
    frame[dec.sh, dec.sh] = q
    return frame, hnorm


def einstein_from_nonunimodular(
    dec: MetricDecomposition,
    cert: SolitonCertificate,
    tol: float = DEFAULT_TOL,
) -> tuple[MetricDecomposition, SolitonCertificate]:
    """Make a non-unimodular algebraic soliton Einstein by retuning ad H.

    The bracket on the unimodular kernel of H and the inner product stay;
    the adjoint action of H becomes alpha (S(ad H) + D) with alpha equal to
    |H| / sqrt(tr D1).  The result is returned in an adapted orthonormal
    basis whose first h-coordinate is H/|H|, and is verified to be a Lie
    algebra with Ricci operator c I by the returned certificate.
    """
    _require_algebraic(cert)
    d1 = cert.d1 if cert.d1 is not None else sym(cert.d_full[dec.sn, dec.sn])
    tr_d1 = float(np.trace(d1))
    if tr_d1 <= tol:
        raise ValueError("tr D1 <= 0; the rescaling is undefined")

    frame, hnorm = _adapted_h_frame(dec)
    alpha = hnorm / np.sqrt(tr_d1)

    # modified generator action, expressed in the adapted basis
    ad_h = dec.ad_matrix(_embed_p(dec, dec.mean_curvature()))
    a_mod = frame.T @ (sym(ad_h) + cert.d_full) @ frame

    t = dec.bracket_on.map_basis(frame).dense.copy()
    ih = dec.dim_k  # H/|H| sits here in the adapted basis
    new_row = (alpha / hnorm) * a_mod  # action of the unit vector along H
    t[ih, :, :] = new_row.T
    t[:, ih, :] = -new_row.T
    t[ih, ih, :] = 0.0
    out = MetricDecomposition(
        AlgebraTensor.from_dense(t, zero_tol=1e-14),
        dec.dim_k,
        dec.dim_h,
        dec.dim_n,
        tol=dec.tol,
    )
    return out, soliton_fit(out)


def restrict_to_unimodular_kernel(
    dec: MetricDecomposition,
    cert: SolitonCertificate,
    tol: float = DEFAULT_TOL,
) -> tuple[MetricDecomposition, SolitonCertificate]:
    """Restrict an algebraic soliton to the codimension-one kernel of H.

    Returns the decomposition on g0 = {H orthogonal} (an ideal, since H is
    orthogonal to every bracket) together with the certificate carrying the
    same constant and the derivation D' = (D + S(ad H)) restricted to g0.
    The k-block of D' must vanish; a violation is raised rather than
    silently zeroed.
    """
    _require_algebraic(cert)
    frame, _ = _adapted_h_frame(dec)
    ih = dec.dim_k

    t = dec.bracket_on.map_basis(frame).dense
    keep = [i for i in range(dec.dim) if i != ih]
    sub = t[np.ix_(keep, keep, keep)]
    escaped = frob(t[np.ix_(keep, keep)][:, :, ih])
    if escaped > tol * max(1.0, dec.bracket.norm):
        raise DecompositionError(
            [Violation("kernel-not-ideal", "brackets of the kernel escape along H", escaped)]
        )
    out = MetricDecomposition(
        AlgebraTensor.from_dense(sub, zero_tol=1e-14),
        dec.dim_k,
        dec.dim_h - 1,
        dec.dim_n,
        tol=dec.tol,
    )

    ad_h = dec.ad_matrix(_embed_p(dec, dec.mean_curvature()))
    d_prime_full = frame.T @ (cert.d_full + sym(ad_h)) @ frame
    h_row = max(frob(d_prime_full[ih, :]), frob(d_prime_full[:, ih]))
    if h_row > 1e-8 * max(1.0, frob(d_prime_full)):
        raise DecompositionError(
            [Violation("dprime-moves-h", "D' does not annihilate the H direction", h_row)]
        )
    d_prime = d_prime_full[np.ix_(keep, keep)]
    k_block = frob(d_prime[: dec.dim_k, :]) + frob(d_prime[:, : dec.dim_k])
    if k_block > 1e-8 * max(1.0, frob(d_prime)):
        raise DecompositionError(
            [Violation("dprime-k-block", "D' must vanish on the isotropy block", k_block)]
        )

    ric0 = out.ricci().matrix
    resid = frob(ric0 - cert.c * np.eye(out.dim_p) - sym(d_prime[out.sp, out.sp]))
    der_defect = out.derivation_residual_on(d_prime)
    certified = (
        resid <= SOLITON_RESIDUAL_TOL * max(1.0, frob(ric0))
        and der_defect <= 1e-6 * max(1.0, out.bracket.norm)
    )
    if certified and frob(ric0 - cert.c * np.eye(out.dim_p)) <= SOLITON_RESIDUAL_TOL * max(1.0, frob(ric0)):
        tag = TAG_EINSTEIN
    elif certified:
        tag = TAG_ALGEBRAIC
    else:
        tag = TAG_NONE
    cert0 = SolitonCertificate(
        c=cert.c,
        d_full=d_prime,
        d1=sym(d_prime[out.sn, out.sn]),
        residual=resid,
        tag=tag,
        derivation_defect=der_defect,
        sym_derivation_defect=der_defect,
        dim_k=out.dim_k,
        dim_h=out.dim_h,
    )
    return out, cert0


def einstein_extension_unimodular(
    dec: MetricDecomposition,
    cert: SolitonCertificate,
    tol: float = DEFAULT_TOL,
) -> tuple[MetricDecomposition, SolitonCertificate]:
    """Extend a unimodular algebraic soliton by R A with ad A = alpha D.

    alpha = 1/sqrt(tr D1); the new unit vector A is orthogonal to p and is
    appended as the first h-coordinate; k carries over unchanged.  Refuses
    non-unimodular input and the degenerate case tr D1 <= 0 (an Einstein
    input with D = 0 has nothing to extend by).
    """
    _require_algebraic(cert)
    h = dec.mean_curvature()
    if float(np.linalg.norm(h)) > tol * max(1.0, dec.bracket.norm):
        raise ValueError("algebra is not unimodular (H != 0)")
    d1 = cert.d1 if cert.d1 is not None else sym(cert.d_full[dec.sn, dec.sn])
    tr_d1 = float(np.trace(d1))
    if tr_d1 <= tol:
        raise ValueError("tr D1 <= 0; the extension scale is undefined")
    alpha = 1.0 / np.sqrt(tr_d1)

    dim = dec.dim
    nk = dec.dim_k
    new_dim = dim + 1
    old_to_new = [i if i < nk else i + 1 for i in range(dim)]
    ia = nk
    t = np.zeros((new_dim, new_dim, new_dim))
    told = dec.bracket_on.dense
    for i in range(dim):
        for j in range(dim):
            t[old_to_new[i], old_to_new[j], [old_to_new[k] for k in range(dim)]] = told[i, j]
    ad_a = alpha * cert.d_full
    for j in range(dim):
        t[ia, old_to_new[j], [old_to_new[k] for k in range(dim)]] = ad_a[:, j]
        t[old_to_new[j], ia, [old_to_new[k] for k in range(dim)]] = -ad_a[:, j]
    out = MetricDecomposition(
        AlgebraTensor.from_dense(t, zero_tol=1e-14),
        dec.dim_k,
        dec.dim_h + 1,
        dec.dim_n,
        tol=dec.tol,
    )
    return out, soliton_fit(out)
