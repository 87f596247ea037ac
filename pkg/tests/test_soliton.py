import numpy as np
import pytest

from homsol.catalog import get
from homsol.constructions import build_semidirect
from homsol.decomposition import MetricDecomposition, sym
from homsol.soliton import (
    SolitonCertificate,
    algebraic_soliton_equivalences,
    f_operator_check,
    nilsoliton_fit,
    soliton_fit,
    stratum_compatibility_check,
    structure_battery,
)
from homsol.tensor import AlgebraTensor, derivation_algebra

from conftest import random_construction


def fit_oracle(ric, ders, c_fixed=None):
    """Dense least squares over {c I + S(D)} with an explicit design matrix."""
    n = ric.shape[0]
    cols = []
    if c_fixed is None:
        cols.append(np.eye(n).reshape(-1))
    for d in ders:
        cols.append((0.5 * (d + d.T)).reshape(-1))
    a = np.array(cols).T
    b = ric.reshape(-1) if c_fixed is None else (ric - c_fixed * np.eye(n)).reshape(-1)
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    return float(np.linalg.norm(a @ x - b))


# ---------------------------------------------------------------------------
# nilsoliton fits
# ---------------------------------------------------------------------------

def test_heis3_nilsoliton():
    cert = nilsoliton_fit(get("heis3").tensor())
    assert cert.c == pytest.approx(-1.5, abs=1e-9)
    assert np.allclose(cert.d1, np.diag([1.0, 1.0, 2.0]), atol=1e-9)
    assert cert.residual <= 1e-12
    assert cert.tag == "AlgebraicSoliton"


def test_fil4_nilsoliton():
    cert = nilsoliton_fit(get("fil4").tensor())
    assert cert.c == pytest.approx(-1.5, abs=1e-9)
    assert np.allclose(cert.d1, np.diag([0.5, 1.0, 1.5, 2.0]), atol=1e-9)
    assert cert.residual <= 1e-12


def test_heis3_r_nilsoliton():
    # central line ordered third: eigenvalue -c + 0 = 3/2 sits there
    cert = nilsoliton_fit(get("heis3_r").tensor())
    assert cert.c == pytest.approx(-1.5, abs=1e-9)
    assert np.allclose(cert.d1, np.diag([1.0, 1.0, 1.5, 2.0]), atol=1e-9)


def test_abelian_fit_is_flat():
    cert = nilsoliton_fit(AlgebraTensor(4))
    assert cert.c == 0.0
    assert np.allclose(cert.d1, 0.0)
    assert cert.tag == "Einstein"


def test_abelian_fit_with_imposed_constant():
    cert = nilsoliton_fit(AlgebraTensor(3), c_fixed=-2.0)
    assert np.allclose(cert.d1, 2.0 * np.eye(3))
    assert cert.residual <= 1e-12


def test_nilsoliton_rejects_non_nilpotent():
    with pytest.raises(Exception):
        nilsoliton_fit(get("so3").tensor())


def test_fit_matches_dense_oracle():
    for name in ("heis3", "fil4", "heis3_r", "nil7"):
        mu = get(name).tensor()
        cert = nilsoliton_fit(mu)
        from homsol.decomposition import MetricDecomposition

        ric = MetricDecomposition(mu, 0, 0, mu.dim).ricci().matrix
        want = fit_oracle(ric, derivation_algebra(mu))
        assert cert.residual == pytest.approx(want, abs=1e-9)


def test_nil7_is_not_a_nilsoliton():
    cert = nilsoliton_fit(get("nil7").tensor())
    assert cert.residual > 1e-3
    assert cert.tag == "NotDetected"


def test_fit_scaling_covariance():
    # ip -> s ip rescales c by 1/s and keeps the tag
    base = get("heis3").tensor()
    for s in (0.25, 2.0, 9.0):
        cert = nilsoliton_fit(base, ip=s * np.eye(3))
        assert cert.c == pytest.approx(-1.5 / s, rel=1e-9)
        assert cert.tag == "AlgebraicSoliton"


# ---------------------------------------------------------------------------
# full decomposition fits
# ---------------------------------------------------------------------------

def test_solv12_fit():
    cert = soliton_fit(get("solv12").decomposition())
    assert cert.c == pytest.approx(-5.0, abs=1e-9)
    assert np.allclose(sym(cert.d_p), np.diag([0.0, 2.0, -1.0]), atol=1e-9)
    assert cert.residual <= 1e-12
    assert cert.tag == "AlgebraicSoliton"
    assert cert.flags["solvsoliton-isometric"]


def test_hyp_fit_einstein():
    for n in (2, 5):
        cert = soliton_fit(get(f"hyp{n}").decomposition())
        assert cert.tag == "Einstein"
        assert cert.c == pytest.approx(-(n - 1.0), abs=1e-9)
        assert np.linalg.norm(sym(cert.d_p)) <= 1e-9


def test_so3_fit_einstein_positive():
    cert = soliton_fit(get("so3").decomposition())
    assert cert.tag == "Einstein"
    assert cert.c == pytest.approx(0.5, abs=1e-12)
    assert cert.flags["semisimple-Einstein"]


def test_cplxhyp2_fit():
    cert = soliton_fit(get("cplxhyp2").decomposition())
    assert cert.tag == "Einstein"
    assert cert.c == pytest.approx(-1.5, abs=1e-9)


def test_full_fit_scaling_covariance():
    dec = get("solv12").decomposition()
    for s in (0.5, 3.0):
        cert = soliton_fit(dec.scaled_metric(s))
        assert cert.c == pytest.approx(-5.0 / s, rel=1e-9)
        assert cert.tag == "AlgebraicSoliton"


# ---------------------------------------------------------------------------
# structure battery
# ---------------------------------------------------------------------------

def test_battery_solv12():
    dec = get("solv12").decomposition()
    rep = structure_battery(dec, soliton_fit(dec))
    assert rep.applicable
    assert rep.all_pass
    for cond in rep.conditions:
        assert cond.residual <= 1e-9


def test_battery_cplxhyp2():
    dec = get("cplxhyp2").decomposition()
    rep = structure_battery(dec, soliton_fit(dec))
    assert rep.all_pass
    assert np.allclose(rep.d1, np.diag([1.0, 1.0, 2.0]), atol=1e-9)


def test_battery_lambda1_negative_control():
    # heis3 with h = span(e0, e1), n = span(e2): [h,h] lands in n
    dec = MetricDecomposition(get("heis3").tensor(), 0, 2, 1)
    cert = SolitonCertificate(
        c=-1.0,
        d_full=np.zeros((3, 3)),
        d1=np.zeros((1, 1)),
        residual=0.0,
        tag="SemiAlgebraicSoliton",
        derivation_defect=0.0,
        sym_derivation_defect=0.0,
        dim_h=2,
    )
    rep = structure_battery(dec, cert)
    assert not rep.condition("hh-inside-u").passed
    assert rep.condition("hh-inside-u").residual > 1e-6


def test_battery_not_applicable_for_nonexpanding():
    dec = get("so3").decomposition()
    rep = structure_battery(dec, soliton_fit(dec))
    assert not rep.applicable  # c > 0; computations still reported
    assert rep.condition("hh-inside-u").passed


# ---------------------------------------------------------------------------
# F-operator shape
# ---------------------------------------------------------------------------

def test_f_check_cplxhyp2():
    dec = get("cplxhyp2").decomposition()
    rep = f_operator_check(dec, soliton_fit(dec))
    assert not rep.skipped
    assert rep.branch == "nilpotent-part"
    assert rep.t == pytest.approx(0.5, abs=1e-12)
    # the two scalar formulas must agree
    assert rep.t_ratio_form == pytest.approx(rep.t, abs=1e-9)
    assert np.allclose(np.diag(rep.f), [0.0, 1.0, 1.0, 2.0], atol=1e-9)
    assert rep.passed


def test_f_check_solv12_abelian_branch():
    dec = get("solv12").decomposition()
    rep = f_operator_check(dec, soliton_fit(dec))
    assert rep.branch == "abelian-part"
    assert rep.t == pytest.approx(5.0, abs=1e-9)
    assert rep.trace_identity <= 1e-9
    assert rep.passed


def test_f_trace_identity_values():
    # c tr F + tr F^2 on solv12: -5 * 10 + 50 = 0
    dec = get("solv12").decomposition()
    rep = f_operator_check(dec, soliton_fit(dec))
    assert float(np.trace(rep.f)) == pytest.approx(10.0, abs=1e-9)
    assert float(np.trace(rep.f @ rep.f)) == pytest.approx(50.0, abs=1e-9)


def test_f_check_empty_n():
    dec = get("so3").decomposition()
    rep = f_operator_check(dec, soliton_fit(dec))
    assert rep.branch == "empty-n"
    assert rep.passed


# ---------------------------------------------------------------------------
# the seven equivalences
# ---------------------------------------------------------------------------

def test_equivalences_solv12_all_true():
    dec = get("solv12").decomposition()
    rep = algebraic_soliton_equivalences(dec, soliton_fit(dec))
    assert rep.all_agree
    assert rep.verdict


def test_equivalences_on_catalog_expanding():
    for name in ("hyp3", "cplxhyp2", "heis3", "solv12"):
        dec = get(name).decomposition()
        cert = soliton_fit(dec)
        rep = algebraic_soliton_equivalences(dec, cert)
        assert rep.all_agree, (name, rep.residuals)


def test_equivalences_on_builder_instances(rng):
    for _ in range(25):
        data = random_construction(rng)
        res = build_semidirect(data)
        rep = algebraic_soliton_equivalences(res.decomposition, res.certificate)
        assert rep.all_agree, rep.residuals


# ---------------------------------------------------------------------------
# compatibility checks
# ---------------------------------------------------------------------------

def test_compat_heis3():
    dec = get("heis3").decomposition()
    rep = stratum_compatibility_check(dec, soliton_fit(dec))
    assert rep.all_pass
    assert rep.condition("constant-from-label").passed  # c = -(1/4) * 2 * 3


def test_compat_cplxhyp2():
    dec = get("cplxhyp2").decomposition()
    rep = stratum_compatibility_check(dec, soliton_fit(dec))
    assert rep.all_pass
    # the |mu|^2-scalar variant fails here since |mu|^2 = 2 != 3 = |beta|^2
    assert rep.mu_scalar_variant_residual > 1e-3


def test_compat_skips_abelian_part():
    dec = get("solv12").decomposition()
    rep = stratum_compatibility_check(dec, soliton_fit(dec))
    assert rep.skipped


# ---------------------------------------------------------------------------
# fit optimality against the dense oracle on small instances
# ---------------------------------------------------------------------------

def test_full_fit_optimality_small(rng):
    from homsol.soliton import constrained_derivations

    for name in ("solv12", "heis3", "hyp3", "cplxhyp2"):
        dec = get(name).decomposition()
        cert = soliton_fit(dec)
        basis = constrained_derivations(dec)
        ric = dec.ricci().matrix
        cols = [np.eye(dec.dim_p).reshape(-1)] + [
            sym(b[dec.sp, dec.sp]).reshape(-1) for b in basis
        ]
        a = np.array(cols).T
        x, *_ = np.linalg.lstsq(a, ric.reshape(-1), rcond=None)
        oracle = float(np.linalg.norm(a @ x - ric.reshape(-1)))
        assert cert.residual <= oracle + 1e-9


def test_heis3_plus_line_central_last_ordering():
    # same algebra with the central line ordered last: fit is ordering-blind
    mu = AlgebraTensor(4, ((0, 1, 2, 1.0),))
    cert = nilsoliton_fit(mu)
    assert cert.c == pytest.approx(-1.5, abs=1e-9)
    assert np.allclose(cert.d1, np.diag([1.0, 1.0, 2.0, 1.5]), atol=1e-9)


def test_fallback_fit_when_declared_n_is_not_nilradical():
    # heis3 with n = span(e2) only: the canonical family pins D to the
    # 1-dim n-block and cannot reach the true certificate, so the fit must
    # fall back to the full derivation family and still land on c = -3/2
    dec = MetricDecomposition(get("heis3").tensor(), 0, 2, 1)
    cert = soliton_fit(dec)
    assert cert.tag == "AlgebraicSoliton"
    assert cert.c == pytest.approx(-1.5, abs=1e-9)
    assert cert.residual <= 1e-9
    assert cert.derivation_defect <= 1e-9


def test_sphere_fit_einstein_with_isotropy():
    mu = AlgebraTensor(3, ((0, 1, 2, 1.0), (0, 2, 1, -1.0), (1, 2, 0, 1.0)))
    dec = MetricDecomposition(mu, 1, 2, 0)
    cert = soliton_fit(dec)
    assert cert.tag == "Einstein"
    assert cert.c == pytest.approx(1.0, abs=1e-9)
    assert cert.flags["semisimple-Einstein"]
    rep = structure_battery(dec, cert)
    assert not rep.applicable  # c > 0
    assert all(c.passed for c in rep.conditions)
