"""Soliton certificates and the structural condition battery.

A decomposition is a semi-algebraic soliton when its Ricci operator is

    Ric = c I + S(D_p)

for a derivation D of g vanishing on k; algebraic when S(D) is itself a
derivation; Einstein when Ric = c I outright.  Certificates are produced
by least squares over the relevant affine family:

* for a nilpotent algebra, over {c I + S(D) : D in Der(n)};
* for a full decomposition, first over the canonical family
      D = -ad H + diag(0, 0, D1),  D1 in Der(n),
  which is the normal form the structure theory singles out, falling back
  to the full family {c I + S(D_p) : D in Der(g), D k = 0, D p in p} when
  the canonical fit fails.

All matrices live in the decomposition's orthonormal frame.  The residual
threshold separating "soliton" from "not" is 1e-6 on the unit-normalized
Ricci operator; identities are checked at 1e-9 by default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decomposition import MetricDecomposition, frob, sym
from .strata import StratumData, stratum_label
from .tensor import (
    DEFAULT_TOL,
    AlgebraTensor,
    derivation_algebra,
    moment_map,
    moment_operator,
    pi_action_dense,
    pi_matrix,
)

SOLITON_RESIDUAL_TOL = 1e-6

TAG_EINSTEIN = "Einstein"
TAG_ALGEBRAIC = "AlgebraicSoliton"
TAG_SEMI_ALGEBRAIC = "SemiAlgebraicSoliton"
TAG_NONE = "NotDetected"


@dataclass
class SolitonCertificate:
    c: float
    d_full: np.ndarray  # derivation on g (orthonormal frame), zero on the k block
    d1: np.ndarray | None  # nilpotent-part derivation with Ric_n = c I + D1
    residual: float  # |Ric - c I - S(D_p)|
    tag: str
    derivation_defect: float  # |pi(D) bracket|
    sym_derivation_defect: float  # |pi(S(D)) bracket|
    dim_k: int = 0
    dim_h: int = 0
    flags: dict = field(default_factory=dict)

    @property
    def d_p(self) -> np.ndarray:
        nk = self.dim_k
        return self.d_full[nk:, nk:]

    @property
    def expanding(self) -> bool:
        return self.c < 0.0

    @property
    def is_soliton(self) -> bool:
        return self.tag != TAG_NONE


def _lstsq_affine(target: np.ndarray, basis_mats: list[np.ndarray]):
    """Least-squares coefficients fitting target ~ sum_i x_i basis_i."""
    if not basis_mats:
        return np.zeros(0), frob(target)
    cols = np.stack([b.reshape(-1) for b in basis_mats], axis=1)
    x, *_ = np.linalg.lstsq(cols, target.reshape(-1), rcond=None)
    resid = frob(target - sum(c * b for c, b in zip(x, basis_mats)))
    return x, resid


def _classify(
    ric: np.ndarray,
    c: float,
    residual: float,
    der_defect: float,
    sym_defect: float,
    bracket_scale: float,
) -> str:
    scale = max(1.0, frob(ric))
    if residual > SOLITON_RESIDUAL_TOL * scale or der_defect > 1e-6 * bracket_scale:
        return TAG_NONE
    n = ric.shape[0]
    if frob(ric - c * np.eye(n)) <= SOLITON_RESIDUAL_TOL * scale:
        return TAG_EINSTEIN
    if sym_defect <= 1e-6 * bracket_scale:
        return TAG_ALGEBRAIC
    return TAG_SEMI_ALGEBRAIC


def nilsoliton_fit(
    bracket: AlgebraTensor,
    ip: np.ndarray | None = None,
    c_fixed: float | None = None,
    tol: float = DEFAULT_TOL,
) -> SolitonCertificate:
    """Fit Ric = c I + S(D), D in Der, on a metric nilpotent Lie algebra.

    The abelian algebra is flat and the family degenerates there; the
    reported certificate is then (c, D) = (0, 0), or (c_fixed, -c_fixed I)
    when an ambient constant is imposed.
    """
    dec = MetricDecomposition(bracket, 0, 0, bracket.dim, ip=ip, tol=tol)
    return _nilsoliton_fit_on(dec, c_fixed=c_fixed, tol=tol)


def _nilsoliton_fit_on(
    dec: MetricDecomposition, c_fixed: float | None, tol: float
) -> SolitonCertificate:
    n = dec.dim_n
    mu = dec.p_bracket
    ric = dec.ricci().matrix
    eye = np.eye(n)
    if mu.norm == 0.0:
        c = 0.0 if c_fixed is None else c_fixed
        d1 = ric - c * eye
        return SolitonCertificate(
            c=c,
            d_full=d1,
            d1=d1,
            residual=0.0,
            tag=TAG_EINSTEIN if c == 0.0 else TAG_ALGEBRAIC,
            derivation_defect=0.0,
            sym_derivation_defect=0.0,
        )
    ders = derivation_algebra(mu)
    sym_ders = [sym(d) for d in ders if frob(sym(d)) > 1e-12]
    if c_fixed is None:
        mats = [eye] + sym_ders
        x, resid = _lstsq_affine(ric, mats)
        c = float(x[0]) if len(x) else 0.0
        d1 = sum(ci * m for ci, m in zip(x[1:], sym_ders)) if sym_ders else np.zeros((n, n))
    else:
        c = float(c_fixed)
        x, resid = _lstsq_affine(ric - c * eye, sym_ders)
        d1 = sum(ci * m for ci, m in zip(x, sym_ders)) if sym_ders else np.zeros((n, n))
    if isinstance(d1, float):
        d1 = np.zeros((n, n))
    der_defect = frob(pi_action_dense(d1, mu.dense))
    tag = _classify(ric, c, resid, der_defect, der_defect, max(1.0, mu.norm))
    return SolitonCertificate(
        c=c,
        d_full=d1,
        d1=d1,
        residual=resid,
        tag=tag,
        derivation_defect=der_defect,
        sym_derivation_defect=der_defect,
    )


def _embed_p(dec: MetricDecomposition, x_p: np.ndarray) -> np.ndarray:
    full = np.zeros(dec.dim)
    full[dec.sp] = x_p
    return full


def _block_n(dec: MetricDecomposition, d1: np.ndarray) -> np.ndarray:
    out = np.zeros((dec.dim, dec.dim))
    out[dec.sn, dec.sn] = d1
    return out


def constrained_derivations(dec: MetricDecomposition, rank_tol: float = 1e-9) -> np.ndarray:
    """Basis of {D in Der(g): D = 0 on the k row and column}, orthonormal frame."""
    n = dec.dim
    m = pi_matrix(dec.bracket_on)
    rows = [m]
    w = max(1.0, dec.bracket.norm)
    for z in range(dec.dim_k):
        for a in range(n):
            r = np.zeros(n * n)
            r[a * n + z] = w  # D[a, z] = 0
            rows.append(r[None, :])
            r2 = np.zeros(n * n)
            r2[z * n + a] = w  # D[z, a] = 0
            rows.append(r2[None, :])
    stacked = np.vstack(rows)
    u, s, vh = np.linalg.svd(stacked)
    smax = s[0] if len(s) else 0.0
    cut = rank_tol * max(1.0, smax)
    null = vh[np.concatenate([s, np.zeros(vh.shape[0] - len(s))]) <= cut]
    return null.reshape(-1, n, n)


def soliton_fit(dec: MetricDecomposition, tol: float = DEFAULT_TOL) -> SolitonCertificate:
    """Best certificate Ric = c I + S(D_p) for a metric reductive decomposition.

    Tries the canonical derivation -ad H + diag(0, 0, D1) first; when that
    family cannot reproduce the Ricci operator, falls back to least squares
    over every derivation vanishing on k.
    """
    ric = dec.ricci().matrix
    np_dim = dec.dim_p
    eye = np.eye(np_dim)
    bracket_scale = max(1.0, dec.bracket.norm)

    h = dec.mean_curvature()
    ad_g_h = dec.ad_matrix(_embed_p(dec, h))
    ad_p_h = ad_g_h[dec.sp, dec.sp]

    mu = dec.blocks().mu_tensor()
    ders_n = derivation_algebra(mu) if dec.dim_n else np.zeros((0, 0, 0))
    sym_ders = [sym(d) for d in ders_n if frob(sym(d)) > 1e-12]

    # canonical family: Ric + S(ad_p H) = c I + diag(0_h, S(D1))
    target = ric + sym(ad_p_h)
    mats = [eye] + [
        np.block(
            [
                [np.zeros((dec.dim_h, dec.dim_h)), np.zeros((dec.dim_h, dec.dim_n))],
                [np.zeros((dec.dim_n, dec.dim_h)), s_],
            ]
        )
        for s_ in sym_ders
    ]
    x, _ = _lstsq_affine(target, mats)
    c = float(x[0])
    d1 = sum(ci * m for ci, m in zip(x[1:], sym_ders)) if sym_ders else np.zeros((dec.dim_n, dec.dim_n))
    if isinstance(d1, float):
        d1 = np.zeros((dec.dim_n, dec.dim_n))
    d_full = -ad_g_h + _block_n(dec, d1)
    resid = frob(ric - c * eye - sym(d_full[dec.sp, dec.sp]))
    der_defect = dec.derivation_residual_on(d_full)

    def _valid(r, dd):
        return r <= SOLITON_RESIDUAL_TOL * max(1.0, frob(ric)) and dd <= 1e-6 * bracket_scale

    if not _valid(resid, der_defect):
        # fall back to the full constrained family
        basis = constrained_derivations(dec)
        sym_p = [sym(b[dec.sp, dec.sp]) for b in basis]
        keep = [i for i, s_ in enumerate(sym_p) if frob(s_) > 1e-12]
        mats = [eye] + [sym_p[i] for i in keep]
        x, _ = _lstsq_affine(ric, mats)
        c2 = float(x[0])
        d_full2 = (
            sum(ci * basis[i] for ci, i in zip(x[1:], keep))
            if keep
            else np.zeros((dec.dim, dec.dim))
        )
        if isinstance(d_full2, float):
            d_full2 = np.zeros((dec.dim, dec.dim))
        resid2 = frob(ric - c2 * eye - sym(d_full2[dec.sp, dec.sp]))
        der_defect2 = dec.derivation_residual_on(d_full2)
        if _valid(resid2, der_defect2) or resid2 < resid:
            c, d_full, resid, der_defect = c2, d_full2, resid2, der_defect2
            d1 = sym(d_full[dec.sn, dec.sn])

    sym_defect = dec.derivation_residual_on(sym(d_full))
    tag = _classify(ric, c, resid, der_defect, sym_defect, bracket_scale)

    bb = dec.blocks()
    hh_norm = float(np.sqrt(frob(bb.lam0) ** 2 + frob(bb.lam1) ** 2 + frob(bb.lam2) ** 2))
    kill = dec.killing()
    ev = np.abs(np.linalg.eigvalsh(kill.form)) if dec.dim else np.zeros(0)
    semisimple = bool(ev.size and np.min(ev) > 1e-8 * max(1.0, np.max(ev)))
    flags = {
        "solvsoliton-isometric": bool(
            tag != TAG_NONE and c < 0.0 and hh_norm <= tol * bracket_scale
        ),
        "semisimple-Einstein": bool(tag == TAG_EINSTEIN and semisimple),
    }
    return SolitonCertificate(
        c=c,
        d_full=d_full,
        d1=d1,
        residual=resid,
        tag=tag,
        derivation_defect=der_defect,
        sym_derivation_defect=sym_defect,
        dim_k=dec.dim_k,
        dim_h=dec.dim_h,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# condition battery of the structure theorem
# ---------------------------------------------------------------------------

@dataclass
class ConditionResult:
    name: str
    anchor: str
    residual: float
    passed: bool


@dataclass
class StructureBatteryReport:
    applicable: bool  # the forward direction needs an expanding constant
    conditions: list[ConditionResult]
    derivation: np.ndarray  # the reassembled -ad H + diag(0,0,D1)
    d1: np.ndarray

    def condition(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.conditions)


def structure_battery(
    dec: MetricDecomposition,
    cert: SolitonCertificate,
    tol: float = DEFAULT_TOL,
) -> StructureBatteryReport:
    """Evaluate the five structural conditions at the certificate's constant.

    (i)   [h,h] has no n-component;
    (ii)  Ric_u = c I + C_h with <C_h Y, Y> = tr S(ad Y|_n)^2;
    (iii) the nilpotent part fits Ric_n = c I + D1 at the same c;
    (iv)  sum_i [ad Y_i|_n, (ad Y_i|_n)^t] = 0 over an orthonormal h-basis,
          and each (ad Y|_n)^t is a derivation of n;
    (v)   Ric reassembles as c I + S(D_p) from D = -ad H + diag(0,0,D1).

    The report is purely descriptive for c >= 0 (the forward statement
    assumes an expanding constant; the converse computations still run).
    """
    c = cert.c
    bb = dec.blocks()
    scale = max(1.0, frob(dec.ricci().matrix))
    bscale = max(1.0, dec.bracket.norm)
    conditions: list[ConditionResult] = []

    r1 = frob(bb.lam1)
    conditions.append(
        ConditionResult("hh-inside-u", "[h,h] in k+h (lambda1 = 0)", r1, r1 <= tol * bscale)
    )

    a_eta = bb.ad_eta()
    if dec.dim_h:
        sym_a = np.stack([sym(a) for a in a_eta])
        c_h = np.einsum("aij,bij->ab", sym_a, sym_a)
    else:
        c_h = np.zeros((0, 0))
    if dec.dim_k + dec.dim_h == 0:
        r2 = 0.0  # no reductive part to constrain
    else:
        try:
            u_dec = dec.u_decomposition(check=True)
            ric_u = u_dec.ricci().matrix
            r2 = frob(ric_u - c * np.eye(dec.dim_h) - c_h)
        except Exception:
            r2 = np.inf  # u is not a subalgebra (lambda1 != 0)
    conditions.append(
        ConditionResult("reductive-part-ricci", "Ric_u = c I + C_h", r2, r2 <= tol * scale)
    )

    mu = bb.mu_tensor()
    if dec.dim_n:
        nfit = _nilsoliton_fit_on(dec.n_decomposition(), c_fixed=c, tol=tol)
        r3 = nfit.residual
        d1 = nfit.d1
    else:
        r3 = 0.0
        d1 = np.zeros((0, 0))
    conditions.append(
        ConditionResult("nilpotent-part-soliton", "Ric_n = c I + D1, D1 in Der(n)", r3, r3 <= tol * scale)
    )

    if dec.dim_h and dec.dim_n:
        comm = sum(a @ a.T - a.T @ a for a in a_eta)
        r4 = frob(comm)
        r4b = max(frob(pi_action_dense(a.T, mu.dense)) for a in a_eta)
    else:
        r4, r4b = 0.0, 0.0
    conditions.append(
        ConditionResult(
            "adjoint-commutator-sum",
            "sum_i [ad Y_i|n, (ad Y_i|n)^t] = 0",
            r4,
            r4 <= tol * bscale,
        )
    )
    conditions.append(
        ConditionResult(
            "transposed-adjoints-derive",
            "(ad Y|n)^t in Der(n) for Y in h",
            r4b,
            r4b <= tol * bscale,
        )
    )

    h = dec.mean_curvature()
    d_full = -dec.ad_matrix(_embed_p(dec, h)) + _block_n(dec, d1)
    ric = dec.ricci().matrix
    r5 = frob(ric - c * np.eye(dec.dim_p) - sym(d_full[dec.sp, dec.sp]))
    conditions.append(
        ConditionResult("ricci-reassembly", "Ric = c I + S(D_p)", r5, r5 <= tol * scale)
    )
    r5d = dec.derivation_residual_on(d_full)
    conditions.append(
        ConditionResult(
            "reassembled-derivation",
            "-ad H + diag(0,0,D1) in Der(g)",
            r5d,
            r5d <= tol * bscale,
        )
    )

    return StructureBatteryReport(
        applicable=c < 0.0,
        conditions=conditions,
        derivation=d_full,
        d1=d1,
    )


# ---------------------------------------------------------------------------
# shape of F = S(ad_p H + D_p)
# ---------------------------------------------------------------------------

@dataclass
class FOperatorReport:
    skipped: bool
    reason: str
    lam1_norm: float
    f: np.ndarray | None = None
    branch: str = ""
    t: float = 0.0
    t_ratio_form: float = 0.0  # (|H|^2 + tr D_n) / (-1 + |beta|^2 dim n) in the nonabelian branch
    shape_residual: float = 0.0
    trace_identity: float = 0.0  # |c tr F + tr F^2|
    stratum: StratumData | None = None
    passed: bool = False


def f_operator_check(
    dec: MetricDecomposition,
    cert: SolitonCertificate,
    tol: float = DEFAULT_TOL,
) -> FOperatorReport:
    """Verify that F = S(ad_p H + D_p) has the forced shape.

    For a nonzero nilpotent part in nice position F must equal t E_beta
    with t = -c/|beta|^2; for an abelian nilpotent part it must equal
    t (0 (+) I_n) with t = (|H|^2 + tr D_n)/dim n; and c tr F + tr F^2 = 0
    in all cases.
    """
    bb = dec.blocks()
    lam1 = frob(bb.lam1)
    h = dec.mean_curvature()
    f = sym(dec.ad_p(h) + cert.d_p)
    c = cert.c
    tr_id = abs(c * np.trace(f) + np.trace(f @ f))
    scale = max(1.0, frob(dec.ricci().matrix))

    if dec.dim_n == 0:
        resid = frob(f)
        ok = resid <= tol * scale and lam1 <= tol * max(1.0, dec.bracket.norm) and tr_id <= tol * scale**2
        return FOperatorReport(
            skipped=False,
            reason="",
            lam1_norm=lam1,
            f=f,
            branch="empty-n",
            shape_residual=resid,
            trace_identity=tr_id,
            passed=ok,
        )

    mu = bb.mu_tensor()
    d_n = cert.d_full[dec.sn, dec.sn]
    hn2 = float(h @ h)
    if mu.norm <= tol * max(1.0, dec.bracket.norm):
        t = (hn2 + float(np.trace(d_n))) / dec.dim_n
        target = np.zeros_like(f)
        target[dec.sn_p, dec.sn_p] = t * np.eye(dec.dim_n)
        resid = frob(f - target)
        ok = resid <= tol * scale and lam1 <= tol * max(1.0, dec.bracket.norm) and tr_id <= tol * scale**2
        return FOperatorReport(
            skipped=False,
            reason="",
            lam1_norm=lam1,
            f=f,
            branch="abelian-part",
            t=t,
            shape_residual=resid,
            trace_identity=tr_id,
            passed=ok,
        )

    stratum = stratum_label(mu)
    if not stratum.nice_position:
        return FOperatorReport(
            skipped=True,
            reason="nilpotent part is not in nice position; label comparison unavailable",
            lam1_norm=lam1,
            stratum=stratum,
        )
    nsq = stratum.beta_norm_sq
    t = -c / nsq
    denom = -1.0 + nsq * dec.dim_n
    t_ratio = (hn2 + float(np.trace(d_n))) / denom if abs(denom) > 1e-12 else np.nan
    e_beta = np.zeros_like(f)
    e_beta[dec.sn_p, dec.sn_p] = np.diag(stratum.beta_raw) + nsq * np.eye(dec.dim_n)
    resid = frob(f - t * e_beta)
    ok = resid <= tol * scale and lam1 <= tol * max(1.0, dec.bracket.norm) and tr_id <= tol * scale**2
    return FOperatorReport(
        skipped=False,
        reason="",
        lam1_norm=lam1,
        f=f,
        branch="nilpotent-part",
        t=t,
        t_ratio_form=t_ratio,
        shape_residual=resid,
        trace_identity=tr_id,
        stratum=stratum,
        passed=ok,
    )


# ---------------------------------------------------------------------------
# the seven equivalent descriptions of an algebraic soliton
# ---------------------------------------------------------------------------

@dataclass
class EquivalenceReport:
    residuals: dict[str, float]
    booleans: dict[str, bool]

    @property
    def all_agree(self) -> bool:
        vals = list(self.booleans.values())
        return all(vals) or not any(vals)

    @property
    def verdict(self) -> bool:
        return all(self.booleans.values())


def algebraic_soliton_equivalences(
    dec: MetricDecomposition,
    cert: SolitonCertificate,
    tol: float = 1e-8,
) -> EquivalenceReport:
    """Evaluate the seven conditions that single out algebraic solitons.

    On an expanding semi-algebraic soliton these agree (all true or all
    false); evaluating them on anything else is descriptive only.
    """
    p_dense = dec.p_bracket.dense
    g_dense = dec.bracket_on.dense
    bscale = max(1.0, dec.bracket.norm)
    h = dec.mean_curvature()
    ad_p_h = dec.ad_p(h)
    d_full = cert.d_full
    d_p = cert.d_p
    ric = dec.ricci().matrix
    nh = dec.dim_h

    res = {
        "sym-derivation-on-g": frob(pi_action_dense(sym(d_full), g_dense)),
        "sym-derivation-on-p": frob(pi_action_dense(sym(d_p), p_dense)),
        "sym-ad-h-derivation": frob(pi_action_dense(sym(ad_p_h), p_dense)),
        "ad-h-normal": frob(ad_p_h @ ad_p_h.T - ad_p_h.T @ ad_p_h),
        "sym-d-vanishes-on-h": frob(sym(d_p[:nh, :nh])),
        "sym-ad-h-vanishes-on-h": frob(sym(ad_p_h[:nh, :nh])),
        "ricci-scalar-on-h": frob(ric[:nh, :nh] - cert.c * np.eye(nh)),
    }
    booleans = {k: bool(v <= tol * bscale) for k, v in res.items()}
    return EquivalenceReport(residuals=res, booleans=booleans)


# ---------------------------------------------------------------------------
# compatibilities between the certificate and the stratum label
# ---------------------------------------------------------------------------

@dataclass
class CompatibilityReport:
    skipped: bool
    reason: str
    checks: list[ConditionResult] = field(default_factory=list)
    stratum: StratumData | None = None
    mu_scalar_variant_residual: float = np.nan  # coefficient -c/|mu|^2 instead of -c/|beta|^2

    def condition(self, name: str) -> ConditionResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def all_pass(self) -> bool:
        return not self.skipped and all(c.passed for c in self.checks)


def stratum_compatibility_check(
    dec: MetricDecomposition,
    cert: SolitonCertificate,
    tol: float = DEFAULT_TOL,
) -> CompatibilityReport:
    """Moment-map and label compatibilities of an expanding certificate.

    Requires a nonzero nilpotent part in nice position (skips otherwise).
    The scalar identity S(ad H + D) = -(c/|beta|^2) E_beta is checked with
    the norm of beta; the variant with |mu|^2 in the denominator is also
    evaluated and reported, as it fails whenever |mu|^2 != |beta|^2.
    """
    bb = dec.blocks()
    mu = bb.mu_tensor()
    if dec.dim_n == 0 or mu.norm == 0.0:
        return CompatibilityReport(skipped=True, reason="nilpotent part is abelian or empty")
    stratum = stratum_label(mu)
    if not stratum.nice_position:
        return CompatibilityReport(
            skipped=True, reason="nilpotent part not in nice position", stratum=stratum
        )

    c = cert.c
    nsq = stratum.beta_norm_sq
    beta = np.diag(stratum.beta_raw)
    scale = max(1.0, frob(dec.ricci().matrix))
    bscale = max(1.0, dec.bracket.norm)
    checks: list[ConditionResult] = []

    m_mu = moment_map(mu)
    r = frob(m_mu - beta)
    checks.append(ConditionResult("moment-map-equals-label", "m(mu) = beta", r, r <= tol))

    want_c = -0.25 * mu.norm_sq * nsq
    r = abs(c - want_c)
    checks.append(
        ConditionResult(
            "constant-from-label", "c = -(1/4) |mu|^2 |beta|^2", r, r <= tol * max(1.0, abs(c))
        )
    )

    # u acts on n commuting with D1 and with F
    d1 = cert.d1 if cert.d1 is not None else sym(cert.d_full[dec.sn, dec.sn])
    ad_u_n = list(bb.ad_nu2()) + list(bb.ad_eta())
    r = max((frob(a @ d1 - d1 @ a) for a in ad_u_n), default=0.0)
    checks.append(
        ConditionResult("u-commutes-with-d1", "[ad u|n, D1] = 0", r, r <= tol * bscale)
    )

    h = dec.mean_curvature()
    f = sym(dec.ad_p(h) + cert.d_p)
    worst = 0.0
    for i in range(dec.dim_k + dec.dim_h):
        ad_i = dec._ad_on(i)[dec.sp, dec.sp]
        worst = max(worst, frob(ad_i @ f - f @ ad_i))
    checks.append(
        ConditionResult("u-commutes-with-f", "[ad u|p, F] = 0", worst, worst <= tol * bscale)
    )

    e_beta_g = np.zeros((dec.dim, dec.dim))
    e_beta_g[dec.sn, dec.sn] = beta + nsq * np.eye(dec.dim_n)
    r = dec.derivation_residual_on(e_beta_g)
    checks.append(
        ConditionResult("shifted-label-derives-g", "E_beta in Der(g)", r, r <= tol * bscale)
    )

    m_op = dec.moment().matrix
    m_n = moment_operator(mu)
    r_inv = frob(m_op[dec.sh_p, dec.sn_p])
    r_eq = frob(m_op[dec.sn_p, dec.sn_p] - m_n)
    checks.append(
        ConditionResult(
            "moment-operator-n-invariant", "M n in n and M|n = M_mu", max(r_inv, r_eq),
            max(r_inv, r_eq) <= tol * max(1.0, frob(m_op)),
        )
    )

    ad_h_n = dec.ad_matrix(_embed_p(dec, h))[dec.sn, dec.sn]
    d_n = cert.d_full[dec.sn, dec.sn]
    r = frob(d1 - sym(ad_h_n + d_n))
    checks.append(
        ConditionResult("d1-from-certificate", "D1 = S(ad H|n + D|n)", r, r <= tol * scale)
    )

    t = -c / nsq
    e_beta_p = e_beta_g[dec.sp, dec.sp]
    r = frob(f - t * e_beta_p)
    checks.append(
        ConditionResult(
            "f-matches-scaled-label", "S(ad H + D) = -(c/|beta|^2) E_beta", r, r <= tol * scale
        )
    )
    mu_variant = frob(f - (-c / mu.norm_sq) * e_beta_p)

    return CompatibilityReport(
        skipped=False, reason="", checks=checks, stratum=stratum, mu_scalar_variant_residual=mu_variant
    )
