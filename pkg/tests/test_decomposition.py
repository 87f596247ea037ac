import numpy as np
import pytest

from homsol.catalog import get
from homsol.decomposition import DecompositionError, MetricDecomposition, sym
from homsol.tensor import AlgebraTensor, moment_operator, tensor_inner, pi_action


def d(name):
    return get(name).decomposition()


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------

def test_catalog_decompositions_are_valid():
    for name in ("abelian3", "heis3", "heis3_r", "fil4", "so3", "solv12", "cplxhyp2", "hyp4", "nil7"):
        dec = d(name)
        assert not dec.violations


def test_dim_mismatch_rejected():
    with pytest.raises(DecompositionError):
        MetricDecomposition(AlgebraTensor(3), 1, 1, 2)


def test_ip_not_pd_rejected():
    ip = np.diag([1.0, -1.0, 1.0])
    with pytest.raises(DecompositionError) as err:
        MetricDecomposition(AlgebraTensor(3), 0, 0, 3, ip=ip)
    assert any(v.code == "ip-not-pd" for v in err.value.violations)


def test_h_n_orthogonality_required():
    ip = np.eye(3)
    ip[0, 1] = ip[1, 0] = 0.5  # couples the h and n blocks of solv-like dims
    with pytest.raises(DecompositionError) as err:
        MetricDecomposition(AlgebraTensor(3), 0, 1, 2, ip=ip)
    assert any(v.code == "h-n-not-orthogonal" for v in err.value.violations)


def test_n_must_be_ideal():
    # [h, n] escaping n: declare so3 with one 'nilpotent' direction
    with pytest.raises(DecompositionError) as err:
        MetricDecomposition(get("so3").tensor(), 0, 2, 1)
    assert any(v.code == "n-not-ideal" for v in err.value.violations)


def test_n_must_be_nilpotent():
    # solvable non-nilpotent n: declare solv12 entirely as n
    with pytest.raises(DecompositionError) as err:
        MetricDecomposition(get("solv12").tensor(), 0, 0, 3)
    assert any(v.code == "n-not-nilpotent" for v in err.value.violations)


def test_isotropy_must_act_skewly():
    # [Z, e1] = e1 on a 2-dim p is symmetric, not skew
    mu = AlgebraTensor(3, ((0, 1, 1, 1.0),))
    with pytest.raises(DecompositionError) as err:
        MetricDecomposition(mu, 1, 0, 2)
    assert any(v.code == "isotropy-not-skew" for v in err.value.violations)


def test_jacobi_violation_rejected():
    mu = AlgebraTensor(3, ((0, 1, 2, 1.0), (1, 2, 1, 1.0)))
    with pytest.raises(DecompositionError) as err:
        MetricDecomposition(mu, 0, 0, 3)
    assert any(v.code == "jacobi" for v in err.value.violations)


# ---------------------------------------------------------------------------
# killing operator
# ---------------------------------------------------------------------------

def test_killing_abelian_zero():
    assert np.allclose(d("abelian4").killing().form, 0.0)


def test_killing_so3():
    assert np.allclose(d("so3").killing().form, -2.0 * np.eye(3), atol=1e-12)


def test_killing_heis3_zero():
    assert np.allclose(d("heis3").killing().form, 0.0, atol=1e-12)


def test_killing_vanishes_on_n():
    for name in ("solv12", "cplxhyp2", "hyp3"):
        dec = d(name)
        b = dec.killing().form
        n_block = b[dec.sn, :]
        assert np.max(np.abs(n_block)) <= 1e-12


# ---------------------------------------------------------------------------
# mean curvature
# ---------------------------------------------------------------------------

def test_mean_curvature_unimodular_zero():
    for name in ("heis3", "so3", "abelian3", "nil7"):
        assert np.allclose(d(name).mean_curvature(), 0.0, atol=1e-12)


def test_mean_curvature_hyp():
    for n in (2, 4, 6):
        h = d(f"hyp{n}").mean_curvature()
        want = np.zeros(n)
        want[0] = n - 1.0
        assert np.allclose(h, want, atol=1e-12)


def test_mean_curvature_solv12():
    assert np.allclose(d("solv12").mean_curvature(), [3.0, 0.0, 0.0], atol=1e-12)


def test_mean_curvature_lands_in_h():
    for name in ("solv12", "cplxhyp2", "hyp5"):
        dec = d(name)
        assert dec.mean_curvature_in_h_defect <= 1e-12
        assert dec.mean_curvature_trace_defect() <= 1e-12
        assert dec.isotropy_mean_curvature_defect() <= 1e-12


# ---------------------------------------------------------------------------
# ricci operator
# ---------------------------------------------------------------------------

def test_ricci_heis3():
    assert np.allclose(d("heis3").ricci().matrix, np.diag([-0.5, -0.5, 0.5]), atol=1e-12)


def test_ricci_hyp():
    for n in (2, 3, 6):
        ric = d(f"hyp{n}").ricci().matrix
        assert np.allclose(ric, -(n - 1.0) * np.eye(n), atol=1e-12)


def test_ricci_solv12():
    assert np.allclose(d("solv12").ricci().matrix, np.diag([-5.0, -3.0, -6.0]), atol=1e-12)


def test_ricci_so3():
    assert np.allclose(d("so3").ricci().matrix, 0.5 * np.eye(3), atol=1e-12)


def test_ricci_symmetric():
    for name in ("solv12", "cplxhyp2", "nil7", "fil4"):
        assert d(name).ricci().symmetry_defect() <= 1e-12


def test_ricci_scaling_covariance():
    # ip -> s ip rescales the Ricci operator by 1/s
    for name in ("heis3", "solv12", "cplxhyp2"):
        dec = d(name)
        for s in (0.5, 2.0, 7.0):
            scaled = dec.scaled_metric(s)
            assert np.allclose(scaled.ricci().matrix, dec.ricci().matrix / s, atol=1e-10)


def test_ricci_with_nonidentity_metric_heis3():
    # metric diag(a, b, c) on heis3: known closed form via renormalized bracket
    a, b, c = 2.0, 3.0, 5.0
    dec = MetricDecomposition(
        get("heis3").tensor(), 0, 0, 3, ip=np.diag([a, b, c])
    )
    # orthonormal frame scales mu(e1,e2)=e3 by sqrt(c/(a*b))
    lam = np.sqrt(c / (a * b))
    want = lam**2 * np.diag([-0.5, -0.5, 0.5])
    assert np.allclose(dec.ricci().matrix, want, atol=1e-12)


def test_ricci_commutes_with_isotropy():
    # k = so(2) acting on p = R^2 inside e(2)-like algebra with nil p
    # use u = so(3) with k = one rotation axis: [Z, e1] = e2, [Z, e2] = -e1
    mu = AlgebraTensor(3, ((0, 1, 2, 1.0), (0, 2, 1, -1.0)))
    dec = MetricDecomposition(mu, 1, 0, 2)
    ric = dec.ricci().matrix
    adz = dec.ad_matrix(np.eye(3)[0])[dec.sp, dec.sp]
    assert np.max(np.abs(adz @ ric - ric @ adz)) <= 1e-12


# ---------------------------------------------------------------------------
# blocks
# ---------------------------------------------------------------------------

def test_blocks_heis3_only_mu():
    bb = d("heis3").blocks()
    assert np.max(np.abs(bb.mu)) == 1.0
    for name in ("lam0", "lam1", "lam2", "eta", "nu0", "nu1", "nu2"):
        assert getattr(bb, name).size == 0 or np.max(np.abs(getattr(bb, name))) == 0.0


def test_blocks_solv12_eta_only():
    bb = d("solv12").blocks()
    assert np.allclose(bb.ad_eta()[0], np.diag([1.0, 2.0]))
    assert np.max(np.abs(bb.mu)) == 0.0
    assert bb.lam0.size == 1 and bb.lam0[0, 0, 0] == 0.0


def test_blocks_hyp_identity_eta():
    bb = d("hyp4").blocks()
    assert np.allclose(bb.ad_eta()[0], np.eye(3))


def test_blocks_reassemble_exactly():
    for name in ("heis3", "so3", "solv12", "cplxhyp2", "nil7", "hyp3"):
        assert d(name).reassembly_defect() == 0.0


def test_blocks_skew_components():
    for name in ("so3", "cplxhyp2", "nil7"):
        bb = d(name).blocks()
        for comp in (bb.lam0, bb.lam1, bb.lam2, bb.mu, bb.nu0):
            if comp.size:
                assert np.max(np.abs(comp + np.swapaxes(comp, 0, 1))) == 0.0


# ---------------------------------------------------------------------------
# blockwise moment operator
# ---------------------------------------------------------------------------

def test_mm_blocks_heis3():
    dec = d("heis3")
    assert np.allclose(dec.mm_from_blocks().matrix, dec.moment().matrix, atol=1e-12)


def test_mm_blocks_solv12():
    dec = d("solv12")
    m = dec.mm_from_blocks().matrix
    assert m[0, 0] == pytest.approx(-2.5, abs=1e-12)
    assert np.allclose(m[1:, 1:], 0.0, atol=1e-12)
    assert np.allclose(m, dec.moment().matrix, atol=1e-12)


def test_mm_blocks_matches_direct_on_catalog():
    for name in ("cplxhyp2", "hyp5", "so3", "fil4"):
        dec = d(name)
        assert np.allclose(dec.mm_from_blocks().matrix, dec.moment().matrix, atol=1e-10)


def test_mm_blocks_requires_lam1_zero():
    # heis3 declared with h = span(e0, e1), n = span(e2) has lam1 != 0
    dec = MetricDecomposition(get("heis3").tensor(), 0, 2, 1)
    with pytest.raises(DecompositionError):
        dec.mm_from_blocks()


# ---------------------------------------------------------------------------
# derivation block lemma
# ---------------------------------------------------------------------------

def test_derivation_blocks_zero():
    rep = d("solv12").derivation_block_check(np.zeros((3, 3)))
    assert rep.all_pass


def test_derivation_blocks_diagonal_derivation():
    # D = diag(0; 1, 2) is a derivation of solv12 (commutes with ad a, kills a)
    dd = np.diag([0.0, 1.0, 2.0])
    rep = d("solv12").derivation_block_check(dd)
    assert rep.all_pass
    assert rep.trace_p == pytest.approx(3.0)
    assert rep.trace_n == pytest.approx(3.0)


def test_derivation_blocks_inner():
    dec = d("cplxhyp2")
    ad0 = dec.bracket.ad(np.eye(4)[0])
    rep = dec.derivation_block_check(ad0)
    assert rep.all_pass


def test_derivation_blocks_rejects_non_derivation():
    with pytest.raises(DecompositionError):
        d("solv12").derivation_block_check(np.diag([1.0, 1.0, 1.0]))


# ---------------------------------------------------------------------------
# moment operator invariants on the p-bracket
# ---------------------------------------------------------------------------

def test_moment_dual_identity_on_catalog():
    rng = np.random.default_rng(2)
    for name in ("solv12", "cplxhyp2", "so3"):
        dec = d(name)
        mu = dec.p_bracket
        m = moment_operator(mu)
        for _ in range(20):
            e = rng.standard_normal((dec.dim_p, dec.dim_p))
            lhs = float(np.trace(m @ e))
            rhs = 0.25 * tensor_inner(pi_action(e, mu), mu)
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_u_subalgebra_of_cplxhyp2():
    dec = d("cplxhyp2")
    ub, dropped = dec.u_bracket()
    assert dropped == 0.0
    assert ub.norm == 0.0  # u = R a is abelian
    u = dec.u_decomposition()
    assert np.allclose(u.ricci().matrix, 0.0)


def test_derivation_blocks_cplxhyp2_diagonal():
    # diag(0; 1, 1, 2) is a derivation with equal traces 4 on p and on n
    dd = np.diag([0.0, 1.0, 1.0, 2.0])
    rep = d("cplxhyp2").derivation_block_check(dd)
    assert rep.all_pass
    assert rep.trace_p == pytest.approx(4.0)
    assert rep.trace_n == pytest.approx(4.0)


def test_sphere_presentation_with_isotropy():
    # so(3) split as k = span(e_z), h = span(e_x, e_y): the unit round
    # 2-sphere; exercises a nonzero isotropy block and lam2 = [h,h] -> k
    mu = AlgebraTensor(3, ((0, 1, 2, 1.0), (0, 2, 1, -1.0), (1, 2, 0, 1.0)))
    dec = MetricDecomposition(mu, 1, 2, 0)
    assert np.allclose(dec.ricci().matrix, np.eye(2), atol=1e-12)
    kill = dec.killing()
    assert kill.neg_definite_on_k and kill.kp_zero
    assert np.allclose(kill.k_block, [[-2.0]])
    assert np.max(np.abs(dec.blocks().lam2)) == 1.0
    # Ricci commutes with the isotropy action
    adz = dec.ad_matrix(np.eye(3)[0])[dec.sp, dec.sp]
    ric = dec.ricci().matrix
    assert np.max(np.abs(adz @ ric - ric @ adz)) <= 1e-12
