"""Named check suites, report assembly and the degrees-of-freedom table.

Every suite maps a scenario to a list of (name, residual, threshold) rows,
taking the max residual over the scenario's sample points.  Reports keep a
deterministic payload (no timings inside) so golden-file comparisons and
the byte-identical-report guarantee hold.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import tensors
from .cartan import (GaugeElement, KleinModel, VielbeinField, assemble,
                     build_normal, curvature, gauge_transform, normality_residual,
                     random_gauge, random_polynomial)
from .dressing import (compatibility_residuals, dressed_normality,
                       full_pipeline, gr_dress)
from .errors import CartanWeylError, ScenarioError
from .forms import MForm, gcomm
from .jets import jmul, jtrunc, order_of
from .weyl import (WeylElement, closed_form_laws, state_of, weyl_group_law_residual,
                   weyl_matrices, weyl_transform_dressed, weyl_transform_midlevel)

# Default thresholds by check family; scenario.tolerance covers the rest.
STRICT = 1e-10   # exact algebraic identities (Bianchi, nilpotency, Russian)
ORACLE = 1e-8    # cross-route comparisons through independent formulas
LINEAR = 1e-6    # finite differences in the group parameter


@dataclass
class CheckRow:
    name: str
    residual: float
    threshold: float

    @property
    def passed(self):
        return bool(self.residual <= self.threshold)


@dataclass
class Report:
    scenario: dict
    rows: list = field(default_factory=list)
    tensors: dict = field(default_factory=dict)
    dof: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def add(self, name, residual, threshold):
        self.rows.append(CheckRow(name, float(residual), float(threshold)))

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    def payload(self):
        out = {
            "scenario": self.scenario,
            "checks": [
                {"name": r.name, "residual": repr(r.residual),
                 "threshold": repr(r.threshold), "pass": r.passed}
                for r in self.rows
            ],
        }
        if self.tensors:
            out["tensors"] = self.tensors
        if self.dof:
            out["dof"] = self.dof
        return out

    def to_json(self):
        doc = {"payload": self.payload(),
               "meta": {"wall_time_s": self.wall_time}}
        return json.dumps(doc, indent=2, sort_keys=True)

    def summary_lines(self):
        lines = []
        for r in self.rows:
            status = "PASS" if r.passed else "FAIL"
            lines.append(f"[{status}] {r.name}: residual {r.residual:.3e} "
                         f"(threshold {r.threshold:.1e})")
        return lines


def _merge(worst, new):
    for k, v in new.items():
        worst[k] = max(worst.get(k, 0.0), v)


# ---------------------------------------------------------------------------
# scenario plumbing
# ---------------------------------------------------------------------------

def scenario_model(scn):
    return KleinModel(scn.model, scn.chart)


def scenario_vielbein(scn):
    return VielbeinField(scn.chart, scn.vielbein)


def base_connection(scn, model, vb, point, rng):
    """Input connection plus its effective vielbein at full jet order.

    The theta block of the returned connection equals e dx for the returned
    e, including the z and S factors of any scramble.
    """
    conn = build_normal(vb, model, point, scn.jet_order)
    e = vb.jets_at(point, scn.jet_order)
    if not scn.normal:
        conn = deformed_connection(conn, model, point, scn.jet_order, rng)
    if scn.gauge:
        if scn.gauge.get("seeded"):
            ge = random_gauge(model, rng)
        else:
            ge = GaugeElement(z=scn.gauge.get("z"), so=scn.gauge.get("so"),
                              r=scn.gauge.get("r"))
        mats = ge.matrices(model, point, scn.jet_order)
        conn = gauge_transform(conn, mats["gamma"], mats["gamma_inv"])
        if "Sinv" in mats:
            e = tensors.jeinsum("ab,bm->am", mats["Sinv"], e, model.m)
        if "z" in mats:
            e = jmul(mats["z"][None, None, :], e, model.m)
    return conn, e


def deformed_connection(conn, model, point, order, rng):
    """Add a seeded g-valued 1-form: torsion, trace and Ricci defects at once."""
    from .exprs import eval_jet
    m = model.m
    names = model.chart.names
    chart = model.chart

    def rand_scalar_1form(shape):
        out = MForm.zeros(m, shape, 1, 0, order)
        for i in range(shape[0]):
            for j in range(shape[1]):
                for mu in range(m):
                    poly = random_polynomial(rng, m, names, degree=1, scale=0.5)
                    out.data[i, j, mu, :] = eval_jet(poly, chart, point, order).coeffs
        return out

    a = conn.a() + rand_scalar_1form((1, 1))
    alpha = conn.alpha() + rand_scalar_1form((1, m))
    theta = conn.theta()
    # so(eta)-valued perturbation of A keeps g-valuedness but adds torsion
    sig = model.eta
    dA = MForm.zeros(m, (m, m), 1, 0, order)
    for i in range(m):
        for j in range(i + 1, m):
            for mu in range(m):
                poly = random_polynomial(rng, m, names, degree=1, scale=0.5)
                c = eval_jet(poly, chart, point, order).coeffs
                dA.data[i, j, mu, :] += sig[j] * c
                dA.data[j, i, mu, :] -= sig[i] * c
    A = conn.A() + dA
    return assemble(model, a=a, alpha=alpha, theta=theta, A=A)


def scenario_weyl(scn):
    return WeylElement(scn.weyl if scn.weyl else "x0/4")


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def gauge_suite(scn, report):
    model = scenario_model(scn)
    vb = scenario_vielbein(scn)
    tol = scn.tolerance
    worst = {}
    for idx, point in enumerate(scn.points):
        rng = np.random.default_rng((scn.seed, scn.point_offset + idx))
        conn, _ = base_connection(scn, model, vb, point, rng)
        curv = curvature(conn)
        w, Om = conn.omega, curv.omega2
        res = {}
        res["bianchi"] = (Om.ext_d() + gcomm(w.truncate(Om.order), Om)).value_norm()
        if model.kind == "mobius":
            ge = random_gauge(model, rng)
            mats = ge.matrices(model, point, scn.jet_order)
            conn_g = gauge_transform(conn, mats["gamma"], mats["gamma_inv"])
            curv_g = curvature(conn_g)
            conj = mats["gamma_inv"].wedge(Om.wedge(mats["gamma"]))
            res["curvature_equivariance"] = (curv_g.omega2 - conj).value_norm()
            # right action on a random pair
            g2 = random_gauge(model, rng)
            m2 = g2.matrices(model, point, scn.jet_order)
            lhs = gauge_transform(conn_g, m2["gamma"], m2["gamma_inv"])
            g12 = mats["gamma"].wedge(m2["gamma"])
            g12i = m2["gamma_inv"].wedge(mats["gamma_inv"])
            rhs = gauge_transform(conn, g12, g12i)
            res["right_action"] = (lhs.omega - rhs.omega).value_norm()
            # unipotent factor: a -> a - r theta; Weyl factor: theta -> z theta
            r_ge = GaugeElement(r=[f"x{i}/3 + 1/{4 + i}" for i in range(model.m)])
            m1 = r_ge.matrices(model, point, scn.jet_order)
            c1 = gauge_transform(conn, m1["gamma1"], m1["gamma1_inv"])
            rth = m1["r"].wedge(conn.theta())
            res["unipotent_trace_shift"] = (c1.a() - (conn.a() - rth)).value_norm()
            z_ge = GaugeElement(z="1 + x0/4")
            mw = z_ge.matrices(model, point, scn.jet_order)
            cw = gauge_transform(conn, mw["W"], mw["Winv"])
            zth = MForm.zeros(model.m, (model.m, 1), 1, 0, conn.theta().order)
            zth.data[:, 0, :, :] = jmul(mw["z"][None, None, :],
                                        conn.theta().data[:, 0, :, :], model.m)
            res["weyl_soldering_scale"] = (cw.theta() - zth).value_norm()
        if scn.normal and not scn.gauge:
            e = vb.jets_at(point, scn.jet_order)
            t, r_, f_ = normality_residual(curv, e[..., 0], model)
            res["normality_theta"] = t
            if model.kind == "mobius":
                # GR normality is torsion-freeness only: Ric(F) is the
                # actual Ricci tensor there and need not vanish
                res["normality_ricci"] = r_
                res["normality_trace"] = f_
        _merge(worst, res)
    for name, v in sorted(worst.items()):
        thr = STRICT if name == "bianchi" else tol
        report.add(f"gauge/{name}", v, thr)


def dressing_suite(scn, report, keep_tensors=False):
    model = scenario_model(scn)
    if model.kind == "poincare":
        return _poincare_dressing_suite(scn, report)
    vb = scenario_vielbein(scn)
    tol = scn.tolerance
    worst = {}
    tensor_dump = {}
    for idx, point in enumerate(scn.points):
        rng = np.random.default_rng((scn.seed, scn.point_offset + idx))
        conn, e_full = base_connection(scn, model, vb, point, rng)
        fields = full_pipeline(conn, e_full)
        res = dict(fields.diagnostics)
        res["single_step"] = fields.single_step_residual
        # invariance under the erased sectors, same composite output
        ge1 = random_gauge(model, rng, with_z=False, with_s=False)
        geS = random_gauge(model, rng, with_z=False, with_r=False)
        for tag, ge in (("k1", ge1), ("so", geS)):
            mats = ge.matrices(model, point, scn.jet_order)
            conn_g = gauge_transform(conn, mats["gamma"], mats["gamma_inv"])
            fg = full_pipeline(conn_g)
            res[f"invariance_{tag}_varpi0"] = (fields.varpi0 - fg.varpi0).value_norm()
            res[f"invariance_{tag}_Omega0"] = (fields.Omega0 - fg.Omega0).value_norm()
        # midpoint equivariance: varpi1^S = S^-1 varpi1 S + S^-1 dS
        matsS = geS.matrices(model, point, scn.jet_order)
        conn_S = gauge_transform(conn, matsS["S_emb"], matsS["Sinv_emb"])
        fS = full_pipeline(conn_S)
        expect = matsS["Sinv_emb"].wedge(fields.varpi1.wedge(matsS["S_emb"])) \
            + matsS["Sinv_emb"].wedge(matsS["S_emb"].ext_d())
        res["equivariance_varpi1_S"] = (fS.varpi1 - expect).value_norm()
        expectO = matsS["Sinv_emb"].wedge(fields.Omega1.wedge(matsS["S_emb"]))
        res["equivariance_Omega1_S"] = (fS.Omega1 - expectO).value_norm()
        # compatibility conditions
        comp = compatibility_residuals(conn, e_full, ge1, geS, model, point,
                                       scn.jet_order)
        for k, v in comp.items():
            res[f"compat_{k}"] = v
        # tensors against the classical oracle
        B = tensors.classical_bundle(e_full, scn.signature, model.m)
        res["oracle_g"] = float(np.abs(fields.g[..., 0] - B["g"][..., 0]).max())
        if scn.normal:
            # only torsion-free inputs reduce Gamma to the Levi-Civita symbols
            res["oracle_Gamma"] = float(np.abs(fields.Gamma[..., 0]
                                               - B["Gamma"][..., 0]).max())
            res["oracle_P"] = float(np.abs(fields.P[..., 0] - B["P"][..., 0]).max())
            res["oracle_C"] = float(np.abs(fields.C - B["C"][..., 0]).max())
            res["oracle_W"] = float(np.abs(fields.W - B["W"][..., 0]).max())
            t, ric, f0 = dressed_normality(fields)
            res["dressed_torsion"] = t
            res["dressed_ricci"] = ric
            res["dressed_trace"] = f0
        if keep_tensors:
            tensor_dump[str(list(point))] = {
                "g": fields.g[..., 0].tolist(),
                "Gamma": fields.Gamma[..., 0].tolist(),
                "P": fields.P[..., 0].tolist(),
                "T": fields.T.tolist(),
                "f0": fields.f0.tolist(),
                "C": fields.C.tolist(),
                "W": fields.W.tolist(),
            }
        _merge(worst, res)
    for name, v in sorted(worst.items()):
        thr = ORACLE if name.startswith("oracle") else tol
        report.add(f"dressing/{name}", v, thr)
    if keep_tensors:
        report.tensors = tensor_dump


def _poincare_dressing_suite(scn, report):
    model = scenario_model(scn)
    vb = scenario_vielbein(scn)
    tol = scn.tolerance
    worst = {}
    for idx, point in enumerate(scn.points):
        rng = np.random.default_rng((scn.seed, scn.point_offset + idx))
        conn = build_normal(vb, model, point, scn.jet_order)
        e = vb.jets_at(point, scn.jet_order)
        _, _, Gamma, R, T, g, diag = gr_dress(conn, e)
        res = dict(diag)
        B = tensors.classical_bundle(e, scn.signature, model.m)
        res["oracle_Gamma"] = float(np.abs(Gamma[..., 0] - B["Gamma"][..., 0]).max())
        res["oracle_R"] = float(np.abs(R - B["Riemann"][..., 0]).max())
        res["torsion"] = float(np.abs(T).max())
        # Lorentz invariance of the dressed outputs
        ge = random_gauge(model, rng, with_z=False, with_r=False)
        mats = ge.matrices(model, point, scn.jet_order)
        conn_S = gauge_transform(conn, mats["gamma"], mats["gamma_inv"])
        eS = tensors.jeinsum("ab,bm->am", mats["Sinv"], e, model.m)
        _, _, G2, R2, T2, _, _ = gr_dress(conn_S, eS)
        res["so_invariance_Gamma"] = float(np.abs(Gamma[..., 0] - G2[..., 0]).max())
        res["so_invariance_R"] = float(np.abs(R - R2).max())
        res["so_invariance_T"] = float(np.abs(T - T2).max())
        _merge(worst, res)
    for name, v in sorted(worst.items()):
        thr = ORACLE if name.startswith("oracle") else tol
        report.add(f"gr/{name}", v, thr)


def weyl_suite(scn, report):
    model = scenario_model(scn)
    if model.kind != "mobius":
        raise ScenarioError("the weyl suite needs the Moebius model")
    vb = scenario_vielbein(scn)
    tol = scn.tolerance
    wz = scenario_weyl(scn)
    m = model.m
    worst = {}
    for idx, point in enumerate(scn.points):
        rng = np.random.default_rng((scn.seed, scn.point_offset + idx))
        conn, e_full = base_connection(scn, model, vb, point, rng)
        fields = full_pipeline(conn, e_full)
        st = state_of(fields)
        z, zeta = wz.at(scn.chart, point, scn.jet_order)
        mats = weyl_matrices(model, z, zeta, fields.e)
        res = {}
        res["wbar_closed_form"] = (mats["wbar"] - mats["wbar_closed"]).full_norm()
        res["k1_u1_commute"] = _k1_u1_commutator(fields, mats).value_norm()
        stW, _ = weyl_transform_dressed(st, z, zeta)
        laws = closed_form_laws(st, z, zeta)
        res["law_metric"] = float(np.abs(stW.g[..., 0] - laws["g"]).max())
        res["law_christoffel"] = float(np.abs(stW.Gamma[..., 0] - laws["Gamma"]).max())
        res["law_schouten"] = float(np.abs(stW.P[..., 0] - laws["P"]).max())
        res["law_torsion"] = float(np.abs(stW.T - laws["T"]).max())
        res["law_trace"] = float(np.abs(stW.f0 - laws["f0"]).max())
        res["law_weyl_tensor"] = float(np.abs(stW.W - laws["W"]).max())
        res["law_cotton"] = float(np.abs(stW.C - laws["C"]).max())
        # antisymmetric parts are inert
        asym = 0.5 * (stW.Gamma[..., 0] - stW.Gamma[..., 0].transpose(0, 2, 1))
        asym0 = 0.5 * (fields.Gamma[..., 0] - fields.Gamma[..., 0].transpose(0, 2, 1))
        res["law_antisym_christoffel"] = float(np.abs(asym - asym0).max())
        # route three: Weyl-transform the input connection and redo everything
        WB = MForm.identity(m, model.n, scn.jet_order)
        WB.data[0, 0, 0] = jtrunc(z, m, scn.jet_order)
        WB.data[model.n - 1, model.n - 1, 0] = jtrunc(mats["zinv"], m, scn.jet_order)
        WBi = MForm.identity(m, model.n, scn.jet_order)
        WBi.data[0, 0, 0] = jtrunc(mats["zinv"], m, scn.jet_order)
        WBi.data[model.n - 1, model.n - 1, 0] = jtrunc(z, m, scn.jet_order)
        conn_W = gauge_transform(conn, WB, WBi)
        fW = full_pipeline(conn_W)
        res["route_pipeline_varpi0"] = (stW.varpi0 - fW.varpi0).value_norm()
        res["route_pipeline_Omega0"] = (stW.Omega0 - fW.Omega0).value_norm()
        if scn.normal:
            # and from the rescaled vielbein through the normal construction
            e2 = jmul(z[None, None, :], fields.e, m)
            conn2 = build_normal(e2, model, point, order_of(m, e2))
            f2 = full_pipeline(conn2)
            res["route_rescaled_g"] = float(np.abs(stW.g[..., 0] - f2.g[..., 0]).max())
            res["route_rescaled_Gamma"] = float(np.abs(stW.Gamma[..., 0]
                                                       - f2.Gamma[..., 0]).max())
            res["route_rescaled_P"] = float(np.abs(stW.P[..., 0] - f2.P[..., 0]).max())
            res["route_rescaled_C"] = float(np.abs(stW.C - f2.C).max())
            res["route_rescaled_W"] = float(np.abs(stW.W - f2.W).max())
            res["weyl_tensor_invariance"] = float(np.abs(stW.W - fields.W).max())
            t, ric, f0n = (float(np.abs(stW.T).max()),
                           float(np.abs(np.einsum("anas->ns", stW.W)).max()),
                           float(np.abs(stW.f0).max()))
            res["normality_preserved_T"] = t
            res["normality_preserved_ric"] = ric
            res["normality_preserved_f0"] = f0n
        # redundancy: entry (2,3) of the transformed pair
        res["redundancy_varpi"] = _redundancy_varpi(stW, model)
        res["redundancy_omega"] = _redundancy_omega(stW, model)
        # group law
        w2 = WeylElement("x1/5 + x0*x0/10")
        res["group_law"] = weyl_group_law_residual(st, wz, w2, scn.chart, point,
                                                   scn.jet_order)
        # first-stage (internal-index) action
        v1W, O1W, closed, _ = weyl_transform_midlevel(fields, z, zeta)
        for nm, ij, M in [("theta", (2, 1), v1W), ("A1", (2, 2), v1W),
                          ("alpha1", (1, 2), v1W), ("f1", (1, 1), O1W),
                          ("Theta1", (2, 1), O1W), ("F1", (2, 2), O1W),
                          ("Pi1", (1, 2), O1W)]:
            res[f"midlevel_{nm}"] = (model.block(M, *ij) - closed[nm]).value_norm()
        if scn.normal:
            res["midlevel_F1_invariance"] = (model.block(O1W, 2, 2)
                                             - model.block(fields.Omega1, 2, 2)).value_norm()
        _merge(worst, res)
    for name, v in sorted(worst.items()):
        thr = ORACLE if name.startswith(("law", "route")) else tol
        report.add(f"weyl/{name}", v, thr)


def _k1_u1_commutator(fields, mats):
    """u1 and k1 commute (both unipotent on the same row pattern)."""
    return mats["k1"].wedge(fields.u1.mat) - fields.u1.mat.wedge(mats["k1"])


def _redundancy_varpi(stW, model):
    m = model.m
    b12 = model.block(stW.varpi0, 1, 2)
    b23 = model.block(stW.varpi0, 2, 3)
    gWinv = np.linalg.inv(stW.g[..., 0])
    want = np.einsum("rl,nl->rn", gWinv, b12.data[0, :, :, 0].T)
    got = b23.data[:, 0, :, 0]
    return float(np.abs(got - want.reshape(got.shape)).max())


def _redundancy_omega(stW, model):
    m = model.m
    b12 = model.block(stW.Omega0, 1, 2)
    b23 = model.block(stW.Omega0, 2, 3)
    gWinv = np.linalg.inv(stW.g[..., 0])
    # b12.data[0, lam, f, 0]: row entry lam at 2-form component f
    want = np.einsum("rl,lf->rf", gWinv, b12.data[0, :, :, 0])
    got = b23.data[:, 0, :, 0]
    return float(np.abs(got - want).max())


def brs_suite(scn, report):
    from .brs import (ConformalBRS, GhostSpec, PoincareBRS, algebraic_connection,
                      composite_ghost, linearization_check, modified_brs_residuals,
                      nilpotency_residuals, residual_weyl_brs, russian_residual,
                      two_steps_in_one)
    model = scenario_model(scn)
    vb = scenario_vielbein(scn)
    tol = scn.tolerance
    worst = {}
    ghosts = scn.ghosts or {}
    m = model.m
    if model.kind == "poincare":
        for point in scn.points:
            conn = build_normal(vb, model, point, scn.jet_order)
            pscn = PoincareBRS(conn, vb.jets_at(point, scn.jet_order),
                               ghosts.get("lorentz"), point)
            _merge(worst, pscn.residuals())
        for name, v in sorted(worst.items()):
            report.add(f"brs-gr/{name}", v, STRICT)
        return
    spec = GhostSpec(eps=ghosts.get("eps", "1/2 + x0/3"),
                     iota=ghosts.get("iota"), lorentz=ghosts.get("lorentz"))
    for idx, point in enumerate(scn.points):
        rng = np.random.default_rng((scn.seed, scn.point_offset + idx))
        conn, e_full = base_connection(scn, model, vb, point, rng)
        scn_b = ConformalBRS(conn, e_full, spec, point)
        fields = full_pipeline(conn, e_full)
        res = {}
        cache = {}
        A = scn_b.L_varpi.ev(cache)
        F = scn_b.T_omega.ev(cache)
        v = scn_b.T_v.ev(cache)
        sA = scn_b.L_varpi.stotal().ev(cache)
        sv = scn_b.T_v.stotal().ev(cache)
        r0, r1, r2 = russian_residual(A, v, F, sA, sv)
        res["russian_deg0"], res["russian_deg1"], res["russian_deg2"] = r0, r1, r2
        Ah = scn_b.T_varpi0.ev(cache)
        Fh = scn_b.T_omega0.ev(cache)
        vh_t = scn_b.composite_ghost_term("full")
        vh = vh_t.ev(cache)
        sAh = scn_b.T_varpi0.stotal().ev(cache)
        svh = vh_t.stotal().ev(cache)
        d0, d1, d2 = russian_residual(Ah, vh, Fh, sAh, svh)
        res["russian_dressed_deg0"] = d0
        res["russian_dressed_deg1"] = d1
        res["russian_dressed_deg2"] = d2
        _merge(worst, res)
        _merge(worst, nilpotency_residuals(scn_b, names=("varpi", "v", "u1", "u0")))
        v1 = composite_ghost(scn_b, "u1")
        _merge(worst, {"first_ghost": (v1 - scn_b.expected_first_ghost()).value_norm()})
        _merge(worst, {"final_ghost": (vh - scn_b.expected_final_ghost()).value_norm()})
        # sector transformation rules of the dressing fields
        u1 = scn_b.T_u1.ev(cache)
        vi = scn_b.V["i"].ev(cache)
        vl = scn_b.V["L"].ev(cache)
        _merge(worst, {
            "u1_inversion_rule": (scn_b.T_u1.svar("i").ev(cache) + vi.wedge(u1)).value_norm(),
            "u1_lorentz_rule": (scn_b.T_u1.svar("L").ev(cache) - gcomm(u1, vl)).value_norm(),
        })
        u0 = scn_b.T_u0.ev(cache)
        epst = MForm.zeros(m, (model.n, model.n), 0, 1, scn_b.eps_jet.order,
                           ghost=True)
        for i in range(1, m + 1):
            epst.gdata[i, i, 0] = scn_b.eps_jet
        su0W = scn_b.T_u0.svar("W").ev(cache)
        _merge(worst, {"u0_weyl_rule": (su0W - epst.wedge(u0)).value_norm()})
        ell, rho, rd, rg = two_steps_in_one(scn_b)
        _merge(worst, {"two_steps_decomposition": rd, "two_steps_ghost": rg})
        lem1 = modified_brs_residuals(scn_b, "u1")
        lemf = modified_brs_residuals(scn_b, "full")
        _merge(worst, {
            "lemma_u1_connection": lem1[0], "lemma_u1_curvature": lem1[1],
            "lemma_u1_ghost": lem1[2],
            "lemma_full_connection": lemf[0], "lemma_full_curvature": lemf[1],
            "lemma_full_ghost": lemf[2],
        })
        _merge(worst, residual_weyl_brs(fields, scn_b))
        vh2, entry_defect, rr = algebraic_connection(fields, scn_b)
        _merge(worst, {"algebraic_connection_entries": entry_defect,
                       "algebraic_connection_russian": max(rr)})
    phi = scn.weyl if scn.weyl else "x0/4"
    for point in scn.points:
        conn0 = build_normal(vb, model, point, scn.jet_order)
        lin = linearization_check(conn0, vb, model, phi, point, scn.jet_order)
        for k, v in lin.items():
            worst[f"linearization_{k}"] = max(worst.get(f"linearization_{k}", 0.0), v)
    for name, v in sorted(worst.items()):
        if name.startswith("linearization"):
            thr = LINEAR
        elif name.startswith(("russian", "s2", "sH2", "sP2", "mixed")):
            thr = STRICT
        else:
            thr = tol
        report.add(f"brs/{name}", v, thr)


SUITES = {
    "gauge": (gauge_suite,),
    "dressing": (dressing_suite,),
    "weyl": (weyl_suite,),
    "brs": (brs_suite,),
    "all": (gauge_suite, dressing_suite, weyl_suite, brs_suite),
}


def run_check(scn, suite="all", points_parallel=False):
    """Execute a named suite for a scenario; returns the Report.

    With ``points_parallel`` the sample points run on a thread pool as
    single-point sub-scenarios; the per-point seeding makes the merged
    report identical to the sequential one.
    """
    if suite not in SUITES:
        raise ScenarioError(f"unknown suite {suite!r}: choose from {sorted(SUITES)}")
    t0 = time.perf_counter()
    if points_parallel and len(scn.points) > 1:
        from concurrent.futures import ThreadPoolExecutor
        import copy
        subs = []
        for idx, point in enumerate(scn.points):
            sub = copy.deepcopy(scn)
            sub.points = [point]
            sub.point_offset = idx
            subs.append(sub)
        with ThreadPoolExecutor(max_workers=min(8, len(subs))) as pool:
            parts = list(pool.map(lambda s_: run_check(s_, suite), subs))
        report = Report(scenario=scn.to_dict())
        merged = {}
        for part in parts:
            for row in part.rows:
                prev = merged.get(row.name)
                if prev is None or row.residual > prev.residual:
                    merged[row.name] = row
        report.rows = [merged[k] for k in sorted(merged)]
        report.wall_time = time.perf_counter() - t0
        return report
    report = Report(scenario=scn.to_dict())
    for fn in SUITES[suite]:
        if fn is weyl_suite and scenario_model(scn).kind != "mobius":
            continue
        try:
            fn(scn, report)
        except CartanWeylError as ex:
            name = fn.__name__.replace("_suite", "")
            raise type(ex)(f"[{name} suite] {ex}") from ex
    report.wall_time = time.perf_counter() - t0
    return report


def compute_tensors(scn):
    """Tensor dump report: g, Gamma, P, T, C, W, f0 at each sample point."""
    report = Report(scenario=scn.to_dict())
    t0 = time.perf_counter()
    dressing_suite(scn, report, keep_tensors=True)
    report.wall_time = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# degrees-of-freedom accounting
# ---------------------------------------------------------------------------

def dof_report(m):
    """Field-count bookkeeping before and after the dressing operation.

    Both columns must total m(m+1)/2 - 1, the size of a conformal class.
    """
    if m < 3:
        raise ScenarioError("the accounting needs m >= 3")
    so_dim = m * (m - 1) // 2
    start_vars = m * (1 + so_dim + 2 * m)
    start_syms = so_dim + 1 + m
    start_constraints = {
        "torsion": m * so_dim,
        "ricci": m * (m + 1) // 2,
        "trace": so_dim,
    }
    start_total = start_vars - start_syms - sum(start_constraints.values())
    out_vars = {
        "metric": m * (m + 1) // 2,
        "linear_connection": m ** 3,
        "schouten": 0,
    }
    out_syms = 1
    out_constraints = {
        "metricity": m * m * (m + 1) // 2,
        "torsion": m * m * (m - 1) // 2,
    }
    out_total = sum(out_vars.values()) - out_syms - sum(out_constraints.values())
    return {
        "m": m,
        "starting": {
            "variables": start_vars,
            "symmetries": start_syms,
            "constraints": start_constraints,
            "total": start_total,
        },
        "outcoming": {
            "variables": out_vars,
            "symmetries": out_syms,
            "constraints": out_constraints,
            "total": out_total,
        },
        "conformal_class": m * (m + 1) // 2 - 1,
        "columns_agree": start_total == out_total == m * (m + 1) // 2 - 1,
    }
