import pytest

from cartanweyl.brs import (ConformalBRS, GhostSpec, PoincareBRS,
                            algebraic_connection, brs_vary, composite_ghost,
                            linearization_check, modified_brs_residuals,
                            nilpotency_residuals, residual_weyl_brs,
                            russian_residual, two_steps_in_one, _is_zero)
from cartanweyl.cartan import build_normal, gauge_transform, random_gauge
from cartanweyl.dressing import full_pipeline
from cartanweyl.forms import MForm, gcomm
from cartanweyl.jets import GhostJet

from conftest import POINT3

K = 4

GHOSTS = GhostSpec(eps="1/2 + x0/3 - x1*x2/5",
                   iota=["x1/2", "1/3 - x0/4", "x2/2 + 1/5"],
                   lorentz=["x0/2 + 1/6", "x1/3 - 1/7", "1/4 + x2/8"])


@pytest.fixture
def scrambled(mobius3, vielbein3, rng):
    conn0 = build_normal(vielbein3, mobius3, POINT3, K)
    ge = random_gauge(mobius3, rng)
    mats = ge.matrices(mobius3, POINT3, K)
    conn = gauge_transform(conn0, mats["gamma"], mats["gamma_inv"])
    return conn


@pytest.fixture
def scn(scrambled):
    return ConformalBRS(scrambled, None, GHOSTS, POINT3)


def test_flat_connection_zero_ghost_varies_trivially(mobius3, flat3):
    conn = build_normal(flat3, mobius3, POINT3, K)
    spec = GhostSpec(eps="0", iota=["0"] * 3, lorentz=["0"] * 3)
    s = ConformalBRS(conn, None, spec, POINT3)
    assert brs_vary(s, "varpi").value_norm() == 0.0


def test_undressed_russian_formula(scn):
    cache = {}
    A = scn.L_varpi.ev(cache)
    F = scn.T_omega.ev(cache)
    v = scn.T_v.ev(cache)
    sA = scn.L_varpi.stotal().ev(cache)
    sv = scn.T_v.stotal().ev(cache)
    r0, r1, r2 = russian_residual(A, v, F, sA, sv)
    assert r0 < 1e-10 and r1 < 1e-10 and r2 < 1e-10


def test_russian_formula_with_zero_ghost(mobius3, vielbein3):
    """v = 0: the formula reduces to the structure equation F = dA + A^2."""
    conn = build_normal(vielbein3, mobius3, POINT3, K)
    spec = GhostSpec(eps="0", iota=["0"] * 3, lorentz=["0"] * 3)
    s = ConformalBRS(conn, None, spec, POINT3)
    cache = {}
    A = s.L_varpi.ev(cache)
    F = s.T_omega.ev(cache)
    v = s.T_v.ev(cache)
    sA = s.L_varpi.stotal().ev(cache)
    sv = s.T_v.stotal().ev(cache)
    assert max(russian_residual(A, v, F, sA, sv)) < 1e-12


def test_modified_russian_formula(scn):
    cache = {}
    A = scn.T_varpi0.ev(cache)
    F = scn.T_omega0.ev(cache)
    vt = scn.composite_ghost_term("full")
    v = vt.ev(cache)
    sA = scn.T_varpi0.stotal().ev(cache)
    sv = vt.stotal().ev(cache)
    r = russian_residual(A, v, F, sA, sv)
    assert max(r) < 1e-10


def test_nilpotency_and_sector_split(scn):
    out = nilpotency_residuals(scn, names=("varpi", "v", "u1", "u0", "u", "Omega"))
    for name, v in out.items():
        assert v < 1e-10, (name, v)


def test_first_composite_ghost(scn):
    v1 = composite_ghost(scn, "u1")
    assert (v1 - scn.expected_first_ghost()).value_norm() < 1e-12
    # the inversion slot (1,2) of v-hat_1 is deps . e^-1, not iota
    blk = scn.model.block(v1, 3, 1)
    assert blk.value_norm() == 0.0


def test_final_composite_ghost(scn):
    vW = composite_ghost(scn, "full")
    assert (vW - scn.expected_final_ghost()).value_norm() < 1e-12


def test_composite_ghost_identity_dressing(scn):
    """u = 1 keeps the ghost: evaluate v-hat with the trivial dressing."""
    cache = {}
    eye = scn.T_one  # (1,1) identity leaf exists; build full identity instead
    v = scn.T_v.ev(cache)
    n = scn.model.n
    ident = MForm.identity(scn.m, n, scn.order)
    vhat = ident.wedge(v.wedge(ident))  # u^-1 v u with su = 0
    assert (vhat - v).value_norm() == 0.0


def test_u1_sector_rules(scn):
    cache = {}
    u1 = scn.T_u1.ev(cache)
    vi = scn.V["i"].ev(cache)
    vl = scn.V["L"].ev(cache)
    su1_i = brs_vary(scn, "u1", "i")
    assert (su1_i + vi.wedge(u1)).value_norm() < 1e-13
    su1_L = brs_vary(scn, "u1", "L")
    assert (su1_L - gcomm(u1, vl)).value_norm() < 1e-13
    # the Weyl image's (1,2) slot is -eps q + deps . e^-1
    su1_W = brs_vary(scn, "u1", "W")
    blk = scn.model.block(su1_W, 1, 2)
    eps = scn.eps_jet
    einv = scn.einv
    q = scn.u1.q
    for a in range(scn.m):
        want = GhostJet(scn.m, eps.order - 1)
        want = want - (eps * GhostJet.from_float(q.data[0, a, 0, :], scn.m))
        for mu in range(scn.m):
            want = want + eps.derivative(mu) * GhostJet.from_float(einv[mu, a], scn.m)
        assert (blk.gdata[0, a, 0] - want).value_norm() < 1e-13


def test_u0_rules(scn):
    cache = {}
    u0 = scn.T_u0.ev(cache)
    m, n = scn.m, scn.model.n
    epst = MForm.zeros(m, (n, n), 0, 1, scn.eps_jet.order, ghost=True)
    for i in range(1, m + 1):
        epst.gdata[i, i, 0] = scn.eps_jet
    assert (brs_vary(scn, "u0", "W") - epst.wedge(u0)).value_norm() < 1e-13
    vl = scn.V["L"].ev(cache)
    assert (brs_vary(scn, "u0", "L") + vl.wedge(u0)).value_norm() < 1e-13
    assert brs_vary(scn, "u0", "i").value_norm() == 0.0


def test_three_ghost_cases(scn):
    """Gauge-like, dressing-like, and mixed transformation laws of u1."""
    cache = {}
    u1 = scn.T_u1.ev(cache)
    u1inv = scn.T_u1inv.ev(cache)
    vl = scn.V["L"].ev(cache)
    vi = scn.V["i"].ev(cache)
    # case one: s_L u1 = [u1, v_L] keeps the Lorentz ghost unchanged
    su = brs_vary(scn, "u1", "L")
    vhat = u1inv.wedge(vl.wedge(u1)) + u1inv.wedge(su)
    assert (vhat - vl).value_norm() < 1e-13
    # case two: s_i u1 = -v_i u1 erases the inversion ghost
    su = brs_vary(scn, "u1", "i")
    vhat = u1inv.wedge(vi.wedge(u1)) + u1inv.wedge(su)
    assert vhat.value_norm() < 1e-13
    # case three: the full ghost leaves exactly the first composite ghost
    assert (composite_ghost(scn, "u1") - scn.expected_first_ghost()).value_norm() < 1e-12


def test_two_steps_in_one(scn):
    ell, rho, resid_dec, resid_ghost = two_steps_in_one(scn)
    assert resid_dec < 1e-12
    assert resid_ghost < 1e-12
    # ell is the erased-sector ghost matrix
    cache = {}
    want = scn.V["L"].ev(cache) + scn.V["i"].ev(cache)
    assert (ell - want).value_norm() == 0.0


def test_two_steps_pure_erased_sectors(scrambled):
    """v_W = 0: the composite ghost dies and su = -ell u."""
    spec = GhostSpec(eps="0", iota=GHOSTS.iota, lorentz=GHOSTS.lorentz)
    s = ConformalBRS(scrambled, None, spec, POINT3)
    vhat = composite_ghost(s, "full")
    assert vhat.value_norm() < 1e-13
    ell, rho, resid_dec, _ = two_steps_in_one(s)
    assert rho.value_norm() == 0.0
    assert resid_dec < 1e-13


def test_modified_brs_lemma_both_stages(scn):
    for stage in ("u1", "full"):
        rA, rF, rv = modified_brs_residuals(scn, stage)
        assert rA < 1e-10 and rF < 1e-10 and rv < 1e-10, stage


def test_residual_weyl_brs_components(scrambled, scn):
    fields = full_pipeline(scrambled)
    out = residual_weyl_brs(fields, scn)
    for name, v in out.items():
        assert v < 1e-10, (name, v)


def test_flat_christoffel_variation(mobius3, flat3):
    """Flat scenario: s_W Gamma = delta deps + delta deps - eta^-1 deps eta."""
    conn = build_normal(flat3, mobius3, POINT3, K)
    s = ConformalBRS(conn, None, GHOSTS, POINT3)
    fields = full_pipeline(conn)
    vhat = composite_ghost(s, "full")
    s_varpi0 = (vhat.ext_d() + gcomm(fields.varpi0, vhat)).scale(-1.0)
    blk = s.model.block(s_varpi0, 2, 2)
    eps = s.eps_jet
    deps = [eps.derivative(mu) for mu in range(3)]
    eta = s.model.eta
    for r in range(3):
        for mu in range(3):
            for nu in range(3):
                want = GhostJet(3, deps[0].order)
                if r == nu:
                    want = want + deps[mu]
                if r == mu:
                    want = want + deps[nu]
                if mu == nu:
                    want = want - deps[r].scale(eta[r] * eta[mu])
                assert (blk.gdata[r, nu, mu] - want).value_norm() < 1e-13


def test_sector_triviality_after_full_dressing(scn):
    for x in ("L", "i"):
        t0 = scn.T_varpi0.svar(x)
        t1 = scn.T_omega0.svar(x)
        n0 = 0.0 if _is_zero(t0) else t0.ev({}).value_norm()
        n1 = 0.0 if _is_zero(t1) else t1.ev({}).value_norm()
        assert n0 < 1e-12 and n1 < 1e-12


def test_algebraic_connection(scrambled, scn):
    fields = full_pipeline(scrambled)
    vhat, entry_defect, rr = algebraic_connection(fields, scn)
    assert entry_defect < 1e-12
    assert max(rr) < 1e-10


def test_algebraic_connection_flat(mobius3, flat3):
    """Flat, eps != 0: blocks are (eps, deps; dx, eps delta, eta^-1 deps^T;
    dx^T eta, -eps)."""
    conn = build_normal(flat3, mobius3, POINT3, K)
    s = ConformalBRS(conn, None, GHOSTS, POINT3)
    fields = full_pipeline(conn)
    vhat = composite_ghost(s, "full")
    eps = s.eps_jet
    eta = s.model.eta
    m = 3
    blk = s.model.block(vhat, 1, 1)
    assert (blk.gdata[0, 0, 0] - eps).value_norm() == 0.0
    blk = s.model.block(vhat, 2, 3)
    for r in range(m):
        want = eps.derivative(r).scale(eta[r])
        assert (blk.gdata[r, 0, 0] - want).value_norm() < 1e-14
    # eps = 0 reduces the algebraic connection to varpi0 itself
    spec0 = GhostSpec(eps="0", iota=["0"] * 3, lorentz=["0"] * 3)
    s0 = ConformalBRS(conn, None, spec0, POINT3)
    v0 = composite_ghost(s0, "full")
    assert v0.value_norm() == 0.0


def test_gr_composite_ghost_vanishes(poincare3, vielbein3):
    conn = build_normal(vielbein3, poincare3, POINT3, K)
    e = vielbein3.jets_at(POINT3, K)
    s = PoincareBRS(conn, e, GHOSTS.lorentz, POINT3)
    out = s.residuals()
    assert out["composite_ghost"] == 0.0
    assert out["su_rule"] == 0.0
    assert out["s_gamma_hat"] < 1e-12
    assert out["s_omega_hat"] < 1e-12
    assert out["s2_varpi"] < 1e-12


def test_linearization(mobius3, vielbein3):
    conn = build_normal(vielbein3, mobius3, POINT3, K)
    out = linearization_check(conn, vielbein3, mobius3, "x0/4 - x1*x2/6",
                              POINT3, K)
    for key in ("g", "Gamma", "P", "C", "W"):
        assert out[key] < 1e-6, (key, out[key])


def test_ds_plus_sd_vanishes(scn):
    """d and s anticommute on every field where both act."""
    from cartanweyl.brs import D
    for term in (scn.L_varpi, scn.T_u1, scn.T_v):
        lhs = D(term).stotal()
        rhs = term.stotal()
        # s(D t) + D(s t) must evaluate to zero
        cache = {}
        got = lhs.ev(cache) + rhs.ev(cache).ext_d()
        assert got.value_norm() < 1e-12


def test_ghost_degree_bookkeeping(scn):
    sv = brs_vary(scn, "varpi")
    assert sv.q == 1 and sv.p == 1
    sO = brs_vary(scn, "Omega")
    assert sO.q == 1 and sO.p == 2
    vhat = composite_ghost(scn, "full")
    assert vhat.q == 1 and vhat.p == 0


def test_first_stage_weyl_brs_blocks(mobius3, vielbein3):
    """s_W of the first-stage pair matches the block matrices with the
    Lorentz ghost switched off: s_W theta = eps theta, s_W F1 = 0 (normal),
    s_W Pi1 = -eps Pi1 - (deps e^-1) F1."""
    conn = build_normal(vielbein3, mobius3, POINT3, K)
    s = ConformalBRS(conn, None, GHOSTS, POINT3)
    fields = full_pipeline(conn)
    sW_varpi1 = s.T_varpi1.svar("W").ev({})
    sW_omega1 = s.T_omega1.svar("W").ev({})
    m = 3
    eps = s.eps_jet
    # s_W theta = eps theta
    blk = s.model.block(sW_varpi1, 2, 1)
    th = s.model.block(fields.varpi1, 2, 1)
    for a in range(m):
        for mu in range(m):
            want = eps * GhostJet.from_float(th.data[a, 0, mu, :], m)
            assert (blk.gdata[a, 0, mu] - want).value_norm() < 1e-13
    # normal case: the middle curvature block is inert
    assert s.model.block(sW_omega1, 2, 2).value_norm() < 1e-12
    # s_W Pi1 = -eps Pi1 - (deps . e^-1) F1
    blk = s.model.block(sW_omega1, 1, 2)
    Pi1 = s.model.block(fields.Omega1, 1, 2)
    F1 = s.model.block(fields.Omega1, 2, 2)
    deps_row = [GhostJet(m, eps.order - 1) for _ in range(m)]
    for b in range(m):
        for mu in range(m):
            acc = GhostJet(m, eps.order - 1)
            for lam in range(m):
                acc = acc + eps.derivative(lam) * GhostJet.from_float(s.einv[lam, b], m)
            deps_row[b] = acc
    from cartanweyl.forms import form_comps
    for f, _ in enumerate(form_comps(m, 2)):
        for b in range(m):
            want = (eps * GhostJet.from_float(Pi1.data[0, b, f, :], m)).scale(-1.0)
            for a in range(m):
                want = want - deps_row[a] * GhostJet.from_float(F1.data[a, b, f, :], m)
            assert (blk.gdata[0, b, f] - want).value_norm() < 1e-12


def test_first_stage_sector_behavior(scn):
    """After u1: the inversion sector is erased while the Lorentz sector
    still acts as a gauge transformation: s_L varpi1 = -D1 v_L."""
    cache = {}
    t_i = scn.T_varpi1.svar("i")
    n_i = 0.0 if _is_zero(t_i) else t_i.ev(cache).value_norm()
    assert n_i < 1e-12
    t_iO = scn.T_omega1.svar("i")
    assert (0.0 if _is_zero(t_iO) else t_iO.ev(cache).value_norm()) < 1e-12
    sL = scn.T_varpi1.svar("L").ev(cache)
    varpi1 = scn.T_varpi1.ev(cache)
    vl = scn.V["L"].ev(cache)
    want = (vl.ext_d() + gcomm(varpi1, vl)).scale(-1.0)
    assert (sL - want).value_norm() < 1e-12
    sLO = scn.T_omega1.svar("L").ev(cache)
    omega1 = scn.T_omega1.ev(cache)
    assert (sLO - gcomm(omega1, vl)).value_norm() < 1e-12


def test_second_reduction_chains_to_final_ghost(scn):
    """Dressing the first composite ghost by u0 gives the final ghost."""
    v0 = composite_ghost(scn, "u0")
    assert (v0 - scn.expected_final_ghost()).value_norm() < 1e-12
    assert (v0 - composite_ghost(scn, "full")).value_norm() < 1e-12
