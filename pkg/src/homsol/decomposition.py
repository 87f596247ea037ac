"""Metric reductive decompositions g = k + h + n with an inner product on p.

The basis is user-ordered as k-block, h-block, n-block; the inner product
lives on p = h + n and must make h and n orthogonal.  All operators are
computed in an internal frame whose p-part is orthonormalized by Cholesky
(block-diagonal across h/n, so the declared splitting keeps its index
ranges), and can be pulled back to the user basis on request.

Structural requirements checked at construction:

* the bracket satisfies Jacobi;
* [k,k] in k, [k,h] in h, [g,n] in n (block closure of the splitting);
* n is a nilpotent ideal (maximality as the nilradical is the caller's
  responsibility and is not certified here);
* ad Z restricted to p is skew for every Z in the k-block.

The Killing-form condition B(k, p) = 0 is *tested*, not enforced; callers
that rely on it (the derivation block lemma, the forward structure
battery) refuse to run when it fails.

The Ricci operator of the decomposition is

    Ric = M - (1/2) B_p - S(ad_p H),

with M the moment operator of the p-restricted bracket, B_p the Killing
operator on p, H the mean-curvature vector (<H, X> = tr ad X) and S the
symmetrization A -> (A + A^t)/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import (
    DEFAULT_TOL,
    AlgebraTensor,
    derivation_residual,
    jacobi_residual,
    moment_operator,
    nilpotency_class,
    pi_action_dense,
)


def sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def skew(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a - a.T)


def frob(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


@dataclass
class Violation:
    code: str
    detail: str
    value: float | tuple = 0.0


class DecompositionError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{v.code}: {v.detail}" for v in self.violations)
        super().__init__(msg or "invalid decomposition")


@dataclass
class SymOperator:
    """Symmetric operator on p (or a sub-block), in the orthonormal frame."""

    matrix: np.ndarray
    role: str
    frame: np.ndarray | None = None  # columns: orthonormal p-basis in user coords

    @property
    def user_matrix(self) -> np.ndarray:
        if self.frame is None:
            return self.matrix
        return self.frame @ self.matrix @ np.linalg.inv(self.frame)

    def symmetry_defect(self) -> float:
        return frob(self.matrix - self.matrix.T)


@dataclass
class BracketBlocks:
    """The eight bilinear components of the bracket, orthonormal frame.

    Index convention: lam0[a,b,c] = <[Y_a, Y_b], Y_c> on the h-block, and
    likewise per signature; eta[a,x,y] = <[Y_a, X_x], X_y>.
    """

    lam0: np.ndarray  # h x h -> h
    lam1: np.ndarray  # h x h -> n
    lam2: np.ndarray  # h x h -> k
    eta: np.ndarray  # h x n -> n
    mu: np.ndarray  # n x n -> n
    nu0: np.ndarray  # k x k -> k
    nu1: np.ndarray  # k x h -> h
    nu2: np.ndarray  # k x n -> n

    def mu_tensor(self) -> AlgebraTensor:
        return AlgebraTensor.from_dense(self.mu)

    def lam0_tensor(self) -> AlgebraTensor:
        return AlgebraTensor.from_dense(self.lam0)

    def ad_eta(self) -> np.ndarray:
        """Stack of matrices of ad Y_a on n, shape (dim_h, n, n)."""
        return np.transpose(self.eta, (0, 2, 1))

    def ad_mu(self) -> np.ndarray:
        return np.transpose(self.mu, (0, 2, 1))

    def ad_nu2(self) -> np.ndarray:
        """Stack of matrices of ad Z on n, shape (dim_k, n, n)."""
        return np.transpose(self.nu2, (0, 2, 1))


@dataclass
class KillingReport:
    form: np.ndarray  # full g x g Killing matrix, mixed (k | orthonormal p) frame
    k_block: np.ndarray
    kp_block: np.ndarray
    p_operator: SymOperator
    neg_definite_on_k: bool
    kp_zero: bool


class MetricDecomposition:
    """Immutable container; all derived operators are cached on first use."""

    def __init__(
        self,
        bracket: AlgebraTensor,
        dim_k: int,
        dim_h: int,
        dim_n: int,
        ip: np.ndarray | None = None,
        tol: float = DEFAULT_TOL,
        check: bool = True,
    ):
        if dim_k + dim_h + dim_n != bracket.dim:
            raise DecompositionError(
                [Violation("dim-mismatch", f"{dim_k}+{dim_h}+{dim_n} != {bracket.dim}")]
            )
        self.bracket = bracket
        self.dim_k, self.dim_h, self.dim_n = dim_k, dim_h, dim_n
        self.dim = bracket.dim
        self.dim_p = dim_h + dim_n
        self.tol = tol
        self.sk = slice(0, dim_k)
        self.sh = slice(dim_k, dim_k + dim_h)
        self.sn = slice(dim_k + dim_h, self.dim)
        self.sp = slice(dim_k, self.dim)
        self.sh_p = slice(0, dim_h)  # h inside p
        self.sn_p = slice(dim_h, self.dim_p)

        if ip is None:
            ip = np.eye(self.dim_p)
        self.ip = np.asarray(ip, dtype=float)
        self._cache: dict = {}

        violations = self._metric_violations()
        if not violations:
            # orthonormalize p by Cholesky; h/n blocks stay separate
            lo = np.linalg.cholesky(self.ip)
            self.frame_p = np.linalg.inv(lo).T  # columns = orthonormal basis
            full = np.eye(self.dim)
            full[self.sp, self.sp] = self.frame_p
            self.frame_g = full
            self.bracket_on = bracket.map_basis(full)
            violations += self._structure_violations()
        if check and violations:
            raise DecompositionError(violations)
        self.violations = violations

    # -- validation ---------------------------------------------------------

    def _metric_violations(self) -> list[Violation]:
        out = []
        if self.ip.shape != (self.dim_p, self.dim_p):
            out.append(Violation("ip-shape", f"expected {self.dim_p}x{self.dim_p}"))
            return out
        if frob(self.ip - self.ip.T) > self.tol * max(1.0, frob(self.ip)):
            out.append(Violation("ip-not-symmetric", "inner product must be symmetric"))
            return out
        if self.dim_p:
            evals = np.linalg.eigvalsh(self.ip)
            if evals[0] <= self.tol:
                out.append(
                    Violation("ip-not-pd", "inner product not positive definite", float(evals[0]))
                )
        hn = self.ip[self.sh_p, self.sn_p]
        if hn.size and np.max(np.abs(hn)) > self.tol * max(1.0, frob(self.ip)):
            out.append(Violation("h-n-not-orthogonal", "ip must make h and n orthogonal", float(np.max(np.abs(hn)))))
        return out

    def _structure_violations(self) -> list[Violation]:
        out = []
        scale = max(1.0, self.bracket.norm)
        jac = jacobi_residual(self.bracket)
        if jac > self.tol * max(1.0, self.bracket.norm_sq):
            out.append(Violation("jacobi", "bracket violates the Jacobi identity", jac))

        t = self.bracket_on.dense
        bad = self._closure_violations(t)
        out.extend(bad)

        if not any(v.code == "n-not-ideal" for v in out):
            mu = AlgebraTensor.from_dense(t[self.sn, self.sn, self.sn])
            try:
                if nilpotency_class(mu, self.tol) is None:
                    out.append(Violation("n-not-nilpotent", "declared n-block is not nilpotent"))
            except ValueError:
                pass  # jacobi already reported

        for z in range(self.dim_k):
            ad_zp = self._ad_on(z)[self.sp, self.sp]
            defect = frob(ad_zp + ad_zp.T)
            if defect > self.tol * max(1.0, scale):
                out.append(Violation("isotropy-not-skew", f"ad(k basis {z}) not skew on p", defect))
        return out

    def _closure_violations(self, t: np.ndarray) -> list[Violation]:
        out = []
        cut = self.tol * max(1.0, self.bracket.norm)

        def scan(si, sj, allowed, code, msg):
            block = t[si, sj, :]
            mask = np.ones(self.dim, dtype=bool)
            mask[allowed] = False
            offending = np.abs(block[:, :, mask])
            if offending.size and np.max(offending) > cut:
                idx = np.unravel_index(np.argmax(offending), offending.shape)
                out.append(Violation(code, msg, (int(idx[0]), int(idx[1]), float(np.max(offending)))))

        scan(self.sk, self.sk, self.sk, "k-not-closed", "[k,k] not inside k")
        scan(self.sk, self.sh, self.sh, "kh-not-in-h", "[k,h] not inside h")
        scan(slice(0, self.dim), self.sn, self.sn, "n-not-ideal", "[g,n] not inside n")
        return out

    # -- frame bookkeeping ----------------------------------------------------

    def _ad_on(self, i: int) -> np.ndarray:
        """Matrix of ad(basis vector i) on g, orthonormal frame."""
        return self.bracket_on.ad(np.eye(self.dim)[i])

    def ad_matrix(self, x: np.ndarray) -> np.ndarray:
        """ad of a coordinate vector (orthonormal frame) on g."""
        return self.bracket_on.ad(x)

    def to_user_p(self, matrix_on: np.ndarray) -> np.ndarray:
        return self.frame_p @ matrix_on @ np.linalg.inv(self.frame_p)

    def _sym_op(self, m: np.ndarray, role: str) -> SymOperator:
        return SymOperator(matrix=m, role=role, frame=self.frame_p)

    # -- core operators -------------------------------------------------------

    @property
    def p_bracket(self) -> AlgebraTensor:
        """p-component of the bracket restricted to p x p, orthonormal frame."""
        if "p_bracket" not in self._cache:
            t = self.bracket_on.dense
            self._cache["p_bracket"] = AlgebraTensor.from_dense(t[self.sp, self.sp, self.sp])
        return self._cache["p_bracket"]

    def killing(self) -> KillingReport:
        if "killing" in self._cache:
            return self._cache["killing"]
        t = self.bracket_on.dense
        b = np.einsum("ilk,jkl->ij", t, t)
        b = 0.5 * (b + b.T)
        k_block = b[self.sk, self.sk]
        kp_block = b[self.sk, self.sp]
        neg = bool(np.all(np.linalg.eigvalsh(k_block) < -self.tol)) if self.dim_k else True
        kp_zero = (
            bool(np.max(np.abs(kp_block)) <= self.tol * max(1.0, frob(b)))
            if kp_block.size
            else True
        )
        rep = KillingReport(
            form=b,
            k_block=k_block,
            kp_block=kp_block,
            p_operator=self._sym_op(b[self.sp, self.sp], "Killing"),
            neg_definite_on_k=neg,
            kp_zero=kp_zero,
        )
        self._cache["killing"] = rep
        return rep

    def mean_curvature(self) -> np.ndarray:
        """H in p (orthonormal-frame coordinates) with <H, X> = tr ad X."""
        if "H" not in self._cache:
            traces = np.array(
                [np.trace(self._ad_on(i)) for i in range(self.dim_k, self.dim)]
            )
            self._cache["H"] = traces
        return self._cache["H"]

    @property
    def mean_curvature_in_h_defect(self) -> float:
        h = self.mean_curvature()
        return frob(h[self.sn_p]) if self.dim_n else 0.0

    def ad_p(self, x_p: np.ndarray) -> np.ndarray:
        """p-block of ad(x) for x in p, orthonormal frame."""
        full = np.zeros(self.dim)
        full[self.sp] = x_p
        return self.ad_matrix(full)[self.sp, self.sp]

    def ricci(self) -> SymOperator:
        if "ricci" in self._cache:
            return self._cache["ricci"]
        m = moment_operator(self.p_bracket)
        bp = self.killing().p_operator.matrix
        h = self.mean_curvature()
        ric = m - 0.5 * bp - sym(self.ad_p(h))
        op = self._sym_op(ric, "Ricci")
        self._cache["ricci"] = op
        return op

    def moment(self) -> SymOperator:
        return self._sym_op(moment_operator(self.p_bracket), "MomentMap")

    def blocks(self) -> BracketBlocks:
        if "blocks" in self._cache:
            return self._cache["blocks"]
        t = self.bracket_on.dense
        bb = BracketBlocks(
            lam0=t[self.sh, self.sh, self.sh].copy(),
            lam1=t[self.sh, self.sh, self.sn].copy(),
            lam2=t[self.sh, self.sh, self.sk].copy(),
            eta=t[self.sh, self.sn, self.sn].copy(),
            mu=t[self.sn, self.sn, self.sn].copy(),
            nu0=t[self.sk, self.sk, self.sk].copy(),
            nu1=t[self.sk, self.sh, self.sh].copy(),
            nu2=t[self.sk, self.sn, self.sn].copy(),
        )
        self._cache["blocks"] = bb
        return bb

    def reassembly_defect(self) -> float:
        """Reassemble the bracket from its blocks; exact by construction."""
        bb = self.blocks()
        t = np.zeros((self.dim, self.dim, self.dim))
        t[self.sh, self.sh, self.sh] = bb.lam0
        t[self.sh, self.sh, self.sn] = bb.lam1
        t[self.sh, self.sh, self.sk] = bb.lam2
        t[self.sk, self.sk, self.sk] = bb.nu0
        # mixed blocks are stored once; mirror them through skew-symmetry
        t[self.sh, self.sn, self.sn] = bb.eta
        t[self.sn, self.sh, self.sn] = -np.transpose(bb.eta, (1, 0, 2))
        t[self.sn, self.sn, self.sn] = bb.mu
        t[self.sk, self.sh, self.sh] = bb.nu1
        t[self.sh, self.sk, self.sh] = -np.transpose(bb.nu1, (1, 0, 2))
        t[self.sk, self.sn, self.sn] = bb.nu2
        t[self.sn, self.sk, self.sn] = -np.transpose(bb.nu2, (1, 0, 2))
        return frob(t - self.bracket_on.dense)

    def mean_curvature_trace_defect(self) -> float:
        """max over h-basis Y of |<H, Y> - tr(ad Y restricted to n)|."""
        h = self.mean_curvature()
        a_eta = self.blocks().ad_eta()
        worst = 0.0
        for a in range(self.dim_h):
            worst = max(worst, abs(h[a] - float(np.trace(a_eta[a]))))
        return worst

    def isotropy_mean_curvature_defect(self) -> float:
        """max over k-basis Z of |[Z, H]| (must vanish)."""
        hvec = np.zeros(self.dim)
        hvec[self.sp] = self.mean_curvature()
        worst = 0.0
        for z in range(self.dim_k):
            worst = max(worst, frob(self._ad_on(z) @ hvec))
        return worst

    def mm_from_blocks(self) -> SymOperator:
        """Moment operator assembled blockwise; requires lam1 = 0.

        On h:    M_lam0 - (1/2) tr(ad Y (ad Y')^t),
        on n:    M_mu + (1/2) sum_i [ad Y_i, (ad Y_i)^t],
        cross:   -(1/2) tr(ad Y (ad_mu X)^t).
        """
        bb = self.blocks()
        if frob(bb.lam1) > self.tol * max(1.0, self.bracket.norm):
            raise DecompositionError(
                [Violation("lam1-nonzero", "blockwise moment operator needs [h,h]_p inside h", frob(bb.lam1))]
            )
        nh, nn = self.dim_h, self.dim_n
        a_eta = bb.ad_eta()
        a_mu = bb.ad_mu()
        m_h = moment_operator(bb.lam0_tensor()) - 0.5 * np.einsum("aij,bij->ab", a_eta, a_eta)
        comm = np.einsum("aij,akj->aik", a_eta, a_eta) - np.einsum("aji,ajk->aik", a_eta, a_eta)
        m_n = moment_operator(bb.mu_tensor()) + 0.5 * np.sum(comm, axis=0)
        cross = -0.5 * np.einsum("aij,xij->ax", a_eta, a_mu)
        m = np.zeros((self.dim_p, self.dim_p))
        m[:nh, :nh] = m_h
        m[nh:, nh:] = m_n
        m[:nh, nh:] = cross
        m[nh:, :nh] = cross.T
        return self._sym_op(m, "MomentMap")

    # -- sub-decompositions ---------------------------------------------------

    def u_bracket(self) -> tuple[AlgebraTensor, float]:
        """Bracket of u = k + h (components inside u only) and the dropped mass.

        u is a subalgebra exactly when lam1 = 0; the second return value is
        the norm of the discarded h x h -> n component.
        """
        t = self.bracket_on.dense
        nu = self.dim_k + self.dim_h
        sub = t[:nu, :nu, :nu]
        dropped = frob(t[:nu, :nu, self.sn])
        return AlgebraTensor.from_dense(sub), dropped

    def u_decomposition(self, check: bool = True) -> "MetricDecomposition":
        """The reductive part (u = k + h, ip restricted to h) with empty n."""
        ub, _ = self.u_bracket()
        return MetricDecomposition(
            ub,
            self.dim_k,
            self.dim_h,
            0,
            ip=np.eye(self.dim_h),
            tol=self.tol,
            check=check,
        )

    def n_decomposition(self) -> "MetricDecomposition":
        """The nilpotent part (n, ip restricted to n) as a standalone algebra."""
        mu = self.blocks().mu_tensor()
        return MetricDecomposition(mu, 0, 0, self.dim_n, tol=self.tol)

    # -- derivation block lemma -------------------------------------------------

    def derivation_block_check(self, d_user: np.ndarray, tol: float | None = None) -> "DerivationBlockReport":
        """Block conclusions for a derivation D with D k inside k.

        Requires B(k, p) = 0 (refuses otherwise) and D an actual derivation.
        Conclusions tested: D p in p, D n in n, tr D|_p = tr D|_n, and
        tr(B_p D_p) = 0.
        """
        tol = self.tol if tol is None else tol
        d_user = np.asarray(d_user, dtype=float)
        if d_user.shape != (self.dim, self.dim):
            raise ValueError("derivation must be a matrix on all of g")
        res = derivation_residual(self.bracket, d_user)
        if res > tol * max(1.0, self.bracket.norm):
            raise DecompositionError([Violation("not-a-derivation", "D is not a derivation of g", res)])
        kill = self.killing()
        if not kill.kp_zero:
            raise DecompositionError(
                [Violation("killing-kp-nonzero", "block lemma requires B(k,p) = 0")]
            )
        g = self.frame_g
        d = np.linalg.inv(g) @ d_user @ g
        scale = max(1.0, frob(d))
        dk_in_k = frob(d[self.sp, self.sk]) <= tol * scale
        if not dk_in_k:
            raise DecompositionError(
                [Violation("dk-not-in-k", "hypothesis D k inside k fails", frob(d[self.sp, self.sk]))]
            )
        dp_in_p = frob(d[self.sk, self.sp]) <= tol * scale
        dn_in_n = frob(d[: self.dim_k + self.dim_h, self.sn]) <= tol * scale
        tr_p = float(np.trace(d[self.sp, self.sp]))
        tr_n = float(np.trace(d[self.sn, self.sn]))
        traces_match = abs(tr_p - tr_n) <= tol * scale
        bp = kill.p_operator.matrix
        bpd = float(np.trace(bp @ d[self.sp, self.sp]))
        return DerivationBlockReport(
            dp_in_p=dp_in_p,
            dn_in_n=dn_in_n,
            traces_match=traces_match,
            trace_p=tr_p,
            trace_n=tr_n,
            killing_pairing=bpd,
            killing_orthogonal=abs(bpd) <= tol * max(1.0, frob(bp)) * scale,
        )

    # -- misc -----------------------------------------------------------------

    def scaled_metric(self, s: float) -> "MetricDecomposition":
        return MetricDecomposition(
            self.bracket, self.dim_k, self.dim_h, self.dim_n, ip=s * self.ip, tol=self.tol
        )

    def derivation_residual_on(self, d_on: np.ndarray) -> float:
        """Derivation defect of a matrix given in the orthonormal frame."""
        return frob(pi_action_dense(d_on, self.bracket_on.dense))


@dataclass
class DerivationBlockReport:
    dp_in_p: bool
    dn_in_n: bool
    traces_match: bool
    trace_p: float
    trace_n: float
    killing_pairing: float
    killing_orthogonal: bool

    @property
    def all_pass(self) -> bool:
        return self.dp_in_p and self.dn_in_n and self.traces_match and self.killing_orthogonal
