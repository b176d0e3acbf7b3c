"""Finite residual Weyl action on the dressed fields.

The rescaling z acts on the dressed pair through conjugation by a single
z-dependent matrix (built from the dressing factors and the two diagonal
representations of the Weyl group), and equivalently through closed-form
block laws for every extracted tensor.  Both routes are implemented; the
test suite diffs them and also re-derives everything from the rescaled
vielbein, turning the derivation chain into executable identities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cartan import k1_matrix
from .dressing import extract_tensors, full_pipeline, u0_from_vielbein
from .errors import ExprDomainError
from .exprs import eval_jet, parse_expr
from .forms import MForm
from .jets import jder, jmul, jrecip, jtrunc, order_of
from .tensors import jeinsum


@dataclass
class WeylElement:
    """Positive rescaling field z = exp(phi) with exact jets of zeta = d phi."""

    phi: object  # Expr or str

    def at(self, chart, point, order):
        phi = parse_expr(self.phi) if isinstance(self.phi, str) else self.phi
        pj = eval_jet(phi, chart, point, order).coeffs
        from .jets import jexp
        z = jexp(pj, chart.m)
        if z[0] <= 0.0:
            raise ExprDomainError("Weyl factor must stay positive")
        zeta = np.stack([jder(pj, chart.m, mu) for mu in range(chart.m)])
        return z, zeta


@dataclass
class DressedState:
    """The data the Weyl action moves around: dressed pair + vielbein."""

    model: object
    varpi0: MForm
    Omega0: MForm
    e: np.ndarray
    g: np.ndarray
    Gamma: np.ndarray
    P: np.ndarray
    T: np.ndarray
    f0: np.ndarray
    C: np.ndarray
    W: np.ndarray


def state_of(fields):
    return DressedState(
        model=fields.model, varpi0=fields.varpi0, Omega0=fields.Omega0,
        e=fields.e, g=fields.g, Gamma=fields.Gamma, P=fields.P,
        T=fields.T, f0=fields.f0, C=fields.C, W=fields.W)


def weyl_matrices(model, z, zeta, e):
    """W, Wtilde, k1 and the combined Wbar (with inverses and a closed form).

    Wbar = u0^-1 k1 u0 W Wtilde with k1 the unipotent built on zeta . e^-1;
    the closed form has entries (z, z zeta, z^-1 zeta g^-1 zeta^T / 2; 0,
    z delta, z^-1 g^-1 zeta^T; 0, 0, z^-1).
    """
    m = model.m
    order = min(order_of(m, z), order_of(m, zeta), order_of(m, e))
    n = model.n
    zinv = jrecip(z, m)
    W = MForm.identity(m, n, order)
    W.data[0, 0, 0] = jtrunc(z, m, order)
    W.data[n - 1, n - 1, 0] = jtrunc(zinv, m, order)
    Winv = MForm.identity(m, n, order)
    Winv.data[0, 0, 0] = jtrunc(zinv, m, order)
    Winv.data[n - 1, n - 1, 0] = jtrunc(z, m, order)
    Wt = MForm.identity(m, n, order)
    Wtinv = MForm.identity(m, n, order)
    for i in range(1, m + 1):
        Wt.data[i, i, 0] = jtrunc(z, m, order)
        Wtinv.data[i, i, 0] = jtrunc(zinv, m, order)
    from .jets import jmat_inv
    einv = jmat_inv(e, m)
    xi_arr = jeinsum("m,ma->a", zeta, einv, m)  # zeta . e^-1
    xi = MForm.zeros(m, (1, m), 0, 0, order_of(m, xi_arr))
    xi.data[0, :, 0, :] = xi_arr
    k1 = k1_matrix(xi, model)
    k1inv = k1_matrix(xi.scale(-1.0), model)
    u0 = u0_from_vielbein(e, model)
    wbar = u0.inv.wedge(k1.wedge(u0.mat.wedge(W.wedge(Wt))))
    wbar_inv = Wtinv.wedge(Winv.wedge(u0.inv.wedge(k1inv.wedge(u0.mat))))
    # closed form for the same matrix
    g = jeinsum("am,an->mn", np.asarray(model.eta)[:, None, None] * e, e, m)
    ginv = jmat_inv(g, m)
    zg = jeinsum("l,lr->r", zeta, ginv, m)       # zeta with one index raised
    zz = jeinsum("r,r->", zeta, zg, m)           # zeta . g^-1 . zeta^T
    k = wbar.order
    closed = MForm.zeros(m, (n, n), 0, 0, k)
    closed.data[0, 0, 0] = jtrunc(z, m, k)
    closed.data[n - 1, n - 1, 0] = jtrunc(zinv, m, k)
    for i in range(m):
        closed.data[i + 1, i + 1, 0] = jtrunc(z, m, k)
        closed.data[0, i + 1, 0] = jtrunc(jmul(z, zeta[i], m), m, k)
        closed.data[i + 1, n - 1, 0] = jtrunc(jmul(zinv, zg[i], m), m, k)
    closed.data[0, n - 1, 0] = jtrunc(0.5 * jmul(zinv, zz, m), m, k)
    return {
        "W": W, "Winv": Winv, "Wt": Wt, "Wtinv": Wtinv,
        "k1": k1, "k1inv": k1inv, "xi": xi,
        "wbar": wbar, "wbar_inv": wbar_inv, "wbar_closed": closed,
        "z": z, "zinv": zinv, "zeta": zeta, "g": g, "ginv": ginv,
        "u0": u0, "einv": einv,
    }


def weyl_transform_dressed(state, z, zeta):
    """Conjugation route: move the dressed pair by the combined matrix.

    Returns the new DressedState (with e -> z e) plus the matrix bundle.
    """
    model = state.model
    m = model.m
    mats = weyl_matrices(model, z, zeta, state.e)
    wbar, wbar_inv = mats["wbar"], mats["wbar_inv"]
    varpi0W = wbar_inv.wedge(state.varpi0.wedge(wbar)) + wbar_inv.wedge(wbar.ext_d())
    Omega0W = wbar_inv.wedge(state.Omega0.wedge(wbar))
    e_new = jmul(z[None, None, :], state.e, m)
    g, Gamma, P, T, f0, C, W = extract_tensors(varpi0W, Omega0W, model)
    new = DressedState(model=model, varpi0=varpi0W, Omega0=Omega0W, e=e_new,
                       g=g, Gamma=Gamma, P=P, T=T, f0=f0, C=C, W=W)
    return new, mats


def closed_form_laws(state, z, zeta):
    """Component transformation laws evaluated on the untransformed tensors.

    Valid with or without normality; value-level arrays keyed by tensor name.
    """
    m = state.model.m
    kv = min(order_of(m, state.g), order_of(m, zeta), order_of(m, z))
    g = jtrunc(state.g, m, kv)[..., 0]
    from .jets import jmat_inv
    ginv = jmat_inv(jtrunc(state.g, m, kv), m)[..., 0]
    Gam = state.Gamma[..., 0]
    P = state.P[..., 0]
    zv = z[0]
    zt = zeta[..., 0]
    # dzeta[mu, nu] = d_mu zeta_nu = d_mu d_nu phi (symmetric since zeta is exact)
    dzeta = np.array([[jder(zeta[nu], m, mu)[0] for nu in range(m)]
                      for mu in range(m)])
    ztup = ginv @ zt
    zz = float(zt @ ztup)
    laws = {}
    laws["g"] = zv ** 2 * g
    laws["Gamma"] = (Gam
                     + np.einsum("rn,m->rmn", np.eye(m), zt)
                     + np.einsum("rm,n->rmn", np.eye(m), zt)
                     - np.einsum("r,mn->rmn", ztup, g))
    laws["P"] = (P + dzeta - np.einsum("l,lmn->mn", zt, Gam)
                 - np.outer(zt, zt) + 0.5 * zz * g)
    laws["T"] = state.T.copy()
    laws["f0"] = state.f0 - np.einsum("l,lms->ms", zt, state.T)
    laws["W"] = (state.W
                 + np.einsum("rms,n->rnms", state.T, zt)
                 - np.einsum("r,ams,an->rnms", ztup, state.T, g))
    laws["C"] = (state.C
                 - np.einsum("l,lnms->nms", zt, state.W)
                 + np.einsum("n,ms->nms", zt, state.f0)
                 + 0.5 * zz * np.einsum("bms,bn->nms", state.T, g)
                 - np.einsum("l,lms,n->nms", zt, state.T, zt))
    return laws


def weyl_transform_midlevel(fields, z, zeta):
    """First-stage action: conjugate (varpi1, Omega1) by k1 W.

    Returns the conjugated (varpi1W, Omega1W) plus closed-form blocks for
    theta, A1, alpha1, f1, Theta, F1, Pi1.
    """
    model = fields.model
    m = model.m
    mats = weyl_matrices(model, z, zeta, fields.e)
    k1W = mats["k1"].wedge(mats["W"])
    k1W_inv = mats["Winv"].wedge(mats["k1inv"])
    varpi1W = k1W_inv.wedge(fields.varpi1.wedge(k1W)) + k1W_inv.wedge(k1W.ext_d())
    Omega1W = k1W_inv.wedge(fields.Omega1.wedge(k1W))
    # closed forms
    xi = mats["xi"]
    from .forms import eta_t
    eta = model.eta
    xit = eta_t(xi, eta)
    blk = lambda M, i, j: model.block(M, i, j)
    theta = blk(fields.varpi1, 2, 1)
    A1 = blk(fields.varpi1, 2, 2)
    alpha1 = blk(fields.varpi1, 1, 2)
    f1 = blk(fields.Omega1, 1, 1)
    Theta1 = blk(fields.Omega1, 2, 1)
    F1 = blk(fields.Omega1, 2, 2)
    Pi1 = blk(fields.Omega1, 1, 2)
    closed = {}
    closed["theta"] = _scale_rows(theta, z)
    closed["A1"] = A1 + theta.wedge(xi) - xit.wedge(_transpose_theta(theta, eta))
    Dxi = xi.ext_d() - xi.wedge(A1)
    corr = (alpha1 + Dxi - xi.wedge(theta.wedge(xi))
            + xi.wedge(xit).wedge(_transpose_theta(theta, eta)).scale(0.5))
    closed["alpha1"] = _scale_rows(corr, mats["zinv"])
    closed["f1"] = f1 - xi.wedge(Theta1)
    closed["Theta1"] = _scale_rows(Theta1, z)
    closed["F1"] = F1 + Theta1.wedge(xi) - xit.wedge(_transpose_theta(Theta1, eta))
    f1_eye = _eye_times(f1, m)
    corr2 = (Pi1 - xi.wedge(F1 - f1_eye) - xi.wedge(Theta1.wedge(xi))
             + xi.wedge(xit).wedge(_transpose_theta(Theta1, eta)).scale(0.5))
    closed["Pi1"] = _scale_rows(corr2, mats["zinv"])
    return varpi1W, Omega1W, closed, mats


def _scale_rows(M, z):
    """Multiply every entry of a float MForm by the scalar jet z."""
    m = M.m
    k = min(M.order, order_of(m, z))
    out = M.truncate(k).copy()
    zk = jtrunc(z, m, k)
    out.data = jmul(zk[None, None, None, :], out.data, m)
    return out


def _transpose_theta(theta, eta):
    """theta^t = (eta theta)^T for a column of forms."""
    from .forms import eta_t
    return eta_t(theta, eta)


def _eye_times(f, m):
    """Scalar (1,1) form times the m x m identity."""
    out = MForm.zeros(f.m, (m, m), f.p, f.q, f.order)
    for i in range(m):
        out.data[i, i] = f.data[0, 0]
    return out


def rescaled_vielbein(e, z, m):
    return jmul(z[None, None, :], e, m)


def weyl_consistency(vb_or_e, wz, model, point, order):
    """Two-route oracle for a normal scenario.

    Route one transforms the dressed pipeline output of e; route two runs
    the whole construction again from the rescaled vielbein e' = z e.  The
    report maps tensor names to the max defect between the routes.
    """
    from .cartan import build_normal
    m = model.m
    e = vb_or_e if isinstance(vb_or_e, np.ndarray) \
        else vb_or_e.jets_at(point, order)
    conn = build_normal(e, model, point, order)
    fields = full_pipeline(conn, e)
    z, zeta = wz.at(model.chart, point, order)
    stW, _ = weyl_transform_dressed(state_of(fields), z, zeta)
    e2 = rescaled_vielbein(e, z, m)
    f2 = full_pipeline(build_normal(e2, model, point, order), e2)
    return {
        "g": float(np.abs(stW.g[..., 0] - f2.g[..., 0]).max()),
        "Gamma": float(np.abs(stW.Gamma[..., 0] - f2.Gamma[..., 0]).max()),
        "P": float(np.abs(stW.P[..., 0] - f2.P[..., 0]).max()),
        "T": float(np.abs(stW.T - f2.T).max()),
        "f0": float(np.abs(stW.f0 - f2.f0).max()),
        "C": float(np.abs(stW.C - f2.C).max()),
        "W": float(np.abs(stW.W - f2.W).max()),
    }


def weyl_group_law_residual(state, w1, w2, chart, point, order):
    """Apply z1 then z2 versus z1 z2 on all dressed fields (value norms)."""
    z1, zeta1 = w1.at(chart, point, order)
    z2, zeta2 = w2.at(chart, point, order)
    s1, _ = weyl_transform_dressed(state, z1, zeta1)
    s12, _ = weyl_transform_dressed(s1, z2, zeta2)
    z12 = jmul(z1, z2, chart.m)
    zeta12 = zeta1 + zeta2
    s_both, _ = weyl_transform_dressed(state, z12, zeta12)
    return max((s12.varpi0 - s_both.varpi0).value_norm(),
               (s12.Omega0 - s_both.Omega0).value_norm())
