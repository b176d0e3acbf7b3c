"""Klein model data and the Cartan connection machinery on one chart.

Supports the Moebius model (matrix size m+2, bilinear form Sigma with -1
corners and an eta middle block) and the Poincare model (size m+1).  The
connection and curvature are plain MForms with block accessors following the
(row, column) labels of the model's 3x3 (or 2x2) block grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensors
from .errors import (AlgebraResidualError, DegenerateVielbeinError, ShapeError)
from .exprs import eval_jet, parse_expr
from .forms import MForm, algebra_residual, block_matrix, eta_t, form_comps
from .jets import (Chart, jcos, jcosh, jmat_inv, jmul, jrecip, jsin, jsinh,
                   order_of, space)


@dataclass(frozen=True)
class KleinModel:
    """Model geometry: which gauge group and block layout apply."""

    kind: str  # "mobius" | "poincare"
    chart: Chart

    def __post_init__(self):
        if self.kind not in ("mobius", "poincare"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "mobius" and self.chart.m < 3:
            raise ValueError("the Moebius model needs chart dimension m >= 3")

    @property
    def m(self):
        return self.chart.m

    @property
    def n(self):
        return self.m + 2 if self.kind == "mobius" else self.m + 1

    @property
    def eta(self):
        return np.asarray(self.chart.signature, dtype=float)

    @property
    def sigma(self):
        """The invariant bilinear form of the Moebius model."""
        if self.kind != "mobius":
            raise ShapeError("Sigma exists only for the Moebius model")
        n = self.n
        S = np.zeros((n, n))
        S[0, n - 1] = -1.0
        S[n - 1, 0] = -1.0
        S[1:n - 1, 1:n - 1] = np.diag(self.eta)
        return S

    def bounds(self, label):
        """(start, stop) row/col range of a 1-based block label."""
        m = self.m
        if self.kind == "mobius":
            edges = [0, 1, m + 1, m + 2]
        else:
            edges = [0, m, m + 1]
        return edges[label - 1], edges[label]

    def block(self, mform, i, j):
        return mform.block(self.bounds(i), self.bounds(j))

    def set_block(self, mform, i, j, sub):
        mform.set_block(self.bounds(i), self.bounds(j), sub)


@dataclass
class CartanConnection:
    model: KleinModel
    omega: MForm

    def block(self, i, j):
        return self.model.block(self.omega, i, j)

    @property
    def order(self):
        return self.omega.order

    # Moebius block names
    def a(self):
        return self.block(1, 1)

    def alpha(self):
        return self.block(1, 2)

    def theta(self):
        return self.block(2, 1) if self.model.kind == "mobius" else self.block(1, 2)

    def A(self):
        return self.block(2, 2) if self.model.kind == "mobius" else self.block(1, 1)


@dataclass
class Curvature:
    model: KleinModel
    omega2: MForm

    def block(self, i, j):
        return self.model.block(self.omega2, i, j)

    def f(self):
        return self.block(1, 1)

    def Pi(self):
        return self.block(1, 2)

    def Theta(self):
        return self.block(2, 1) if self.model.kind == "mobius" else self.block(1, 2)

    def F(self):
        return self.block(2, 2) if self.model.kind == "mobius" else self.block(1, 1)


def assemble(model, a=None, alpha=None, theta=None, A=None, tol=1e-9):
    """Build the g-valued connection matrix from its independent blocks.

    Moebius blocks: a scalar 1-form, alpha row 1-form, theta column 1-form,
    A an so(eta)-valued 1-form; the eta-transposed and trace blocks are
    derived.  Poincare uses (A, theta) only.
    """
    m = model.m
    eta = model.eta
    if theta is None or A is None:
        raise ShapeError("theta and A are required")
    if theta.shape != (m, 1) or A.shape != (m, m):
        raise ShapeError("theta must be (m,1) and A (m,m)")
    if model.kind == "poincare":
        order = min(theta.order, A.order)
        zero_row = MForm.zeros(model.chart.m, (1, m), 1, 0, order)
        zero_c = MForm.zeros(model.chart.m, (1, 1), 1, 0, order)
        omega = block_matrix([[A, theta], [zero_row, zero_c]],
                             model.chart.m, 1, 0, order)
        resid = algebra_residual(A, "so", eta=np.diag(eta))
        scale = max(1.0, omega.full_norm())
        if resid / scale > tol:
            raise AlgebraResidualError(
                f"A block is not so(eta)-valued: residual {resid:.3e}")
        return CartanConnection(model, omega)
    if a is None or alpha is None:
        raise ShapeError("Moebius connections need a and alpha blocks")
    if a.shape != (1, 1) or alpha.shape != (1, m):
        raise ShapeError("a must be (1,1) and alpha (1,m)")
    order = min(a.order, alpha.order, theta.order, A.order)
    omega = block_matrix(
        [[a, alpha, None],
         [theta, A, eta_t(alpha, eta)],
         [None, eta_t(theta, eta), a.scale(-1.0)]],
        model.chart.m, 1, 0, order)
    resid = algebra_residual(omega, "o2m", sigma=model.sigma)
    scale = max(1.0, omega.full_norm())
    if resid / scale > tol:
        raise AlgebraResidualError(
            f"assembled connection is not g-valued: residual {resid:.3e}")
    return CartanConnection(model, omega)


def curvature(conn):
    """Omega = d varpi + varpi wedge varpi."""
    w = conn.omega
    return Curvature(conn.model, w.ext_d() + w.wedge(w))


def gauge_transform(conn, gamma, gamma_inv):
    """varpi^gamma = gamma^-1 varpi gamma + gamma^-1 d gamma."""
    w = conn.omega
    new = gamma_inv.wedge(w.wedge(gamma)) + gamma_inv.wedge(gamma.ext_d())
    return CartanConnection(conn.model, new)


def conjugate(curv_or_form, gamma, gamma_inv):
    x = curv_or_form.omega2 if isinstance(curv_or_form, Curvature) else curv_or_form
    out = gamma_inv.wedge(x.wedge(gamma))
    if isinstance(curv_or_form, Curvature):
        return Curvature(curv_or_form.model, out)
    return out


# ---------------------------------------------------------------------------
# vielbein fields and the normal connection
# ---------------------------------------------------------------------------

@dataclass
class VielbeinField:
    """m x m matrix of expressions; the metric g = e^T eta e is derived."""

    chart: Chart
    entries: list  # m x m nested list of Expr or str
    det_floor: float = 1e-8
    _parsed: list = field(default=None, repr=False)

    def __post_init__(self):
        m = self.chart.m
        if len(self.entries) != m or any(len(r) != m for r in self.entries):
            raise ShapeError("vielbein must be an m x m grid of expressions")
        self._parsed = [[c if not isinstance(c, str) else parse_expr(c)
                         for c in row] for row in self.entries]

    def jets_at(self, point, order):
        m = self.chart.m
        C = space(m, order).size
        e = np.empty((m, m, C))
        for a in range(m):
            for mu in range(m):
                e[a, mu] = eval_jet(self._parsed[a][mu], self.chart, point, order).coeffs
        det = float(np.linalg.det(e[..., 0]))
        if abs(det) < self.det_floor:
            raise DegenerateVielbeinError(
                f"|det e| = {abs(det):.3e} < {self.det_floor:.1e} at point {tuple(point)}")
        return e


def spin_connection(e, signature, m):
    """Unique torsion-free eta-antisymmetric A with d theta + A theta = 0.

    Solved in closed form from the anholonomy of e:
      K^a_bc = (d_mu e^a_nu - d_nu e^a_mu) einv^mu_b einv^nu_c
      omega_ab,c = (K_abc + K_bca - K_cab) / 2    (first index lowered)
      A^a_b = eta^aa omega_ab,c e^c_mu dx^mu
    Returns the (m, m, m, C') array A[a, b, mu].
    """
    from .jets import jder
    sig = np.asarray(signature, dtype=float)
    einv = jmat_inv(e, m)
    de = np.stack([jder(e, m, mu) for mu in range(m)])  # (mu, a, nu, C')
    anti = de - de.transpose(2, 1, 0, 3)  # anti[mu, a, nu] = d_mu e^a_nu - d_nu e^a_mu
    k1 = tensors.jeinsum("man,mb->abn", anti, einv, m)
    K = tensors.jeinsum("abn,nc->abc", k1, einv, m)
    Klow = sig[:, None, None, None] * K
    # cyclic solution omega_ab,c = (K_abc + K_bca - K_cab) / 2
    omega_low = 0.5 * (Klow + Klow.transpose(2, 0, 1, 3) - Klow.transpose(1, 2, 0, 3))
    Aup = sig[:, None, None, None] * omega_low  # A^a_b,c frame indices
    return tensors.jeinsum("abc,cm->abm", Aup, e, m)


def build_normal(vielbein, model, point, order, tol=1e-9):
    """Normal Cartan connection from a vielbein at one sample point.

    Moebius: a = 0, theta = e dx, A the spin connection, alpha the Schouten
    1-form in frame indices.  Poincare: the torsion-free (A, theta) pair.
    """
    m = model.m
    ch = model.chart
    e = vielbein.jets_at(point, order) if isinstance(vielbein, VielbeinField) else vielbein
    A_arr = spin_connection(e, ch.signature, m)  # (a, b, mu, C-1)
    theta = MForm.zeros(m, (m, 1), 1, 0, order)
    theta.data[:, 0, :, :] = e  # component mu <- e[a, mu]
    A = MForm.zeros(m, (m, m), 1, 0, order - 1)
    A.data[:, :, :, :] = A_arr
    if model.kind == "poincare":
        return assemble(model, theta=theta, A=A, tol=tol)
    bundle = tensors.classical_bundle(e, ch.signature, m)
    P = bundle["P"]  # (mu, nu, C-2)
    einv = jmat_inv(e, m)
    alpha_arr = tensors.jeinsum("mn,na->ma", P, einv, m)  # (mu, a, C-2)
    kP = order_of(m, alpha_arr)
    alpha = MForm.zeros(m, (1, m), 1, 0, kP)
    alpha.data[0, :, :, :] = alpha_arr.transpose(1, 0, 2)  # [a, comp mu]
    a = MForm.zeros(m, (1, 1), 1, 0, order)
    return assemble(model, a=a, alpha=alpha, theta=theta, A=A, tol=tol)


def normality_residual(curv, e_values, model):
    """(|Theta|, |Ric(F)|, |f|) value-level norms of the normality defects."""
    m = model.m
    theta_n = curv.Theta().value_norm()
    Fb = curv.F()
    comps = form_comps(m, 2)
    Fv = np.zeros((m, m, m, m))
    for f, (mu, nu) in enumerate(comps):
        M = Fb.data[:, :, f, 0] if not Fb.is_ghost else None
        Fv[:, :, mu, nu] = M
        Fv[:, :, nu, mu] = -M
    einv_v = np.linalg.inv(e_values)
    Ffr = np.einsum("abmn,mc,nd->abcd", Fv, einv_v, einv_v)
    ric = np.einsum("abad->bd", Ffr)
    ric_n = float(np.abs(ric).max())
    if model.kind == "poincare":
        return theta_n, ric_n, 0.0
    f_n = curv.f().value_norm()
    return theta_n, ric_n, f_n


# ---------------------------------------------------------------------------
# gauge elements
# ---------------------------------------------------------------------------

def _so_factor(model, pair, angle, order):
    """Plane rotation/boost embedded in the m x m Lorentz block."""
    m = model.m
    a, b = pair
    sig = model.eta
    C = space(m, order).size
    S = np.zeros((m, m, C))
    for i in range(m):
        S[i, i, 0] = 1.0
    if sig[a] == sig[b]:
        c, s = jcos(angle, m), jsin(angle, m)
        S[a, a], S[b, b] = c, c
        S[a, b], S[b, a] = -s, s
    else:
        ch, sh = jcosh(angle, m), jsinh(angle, m)
        S[a, a], S[b, b] = ch, ch
        S[a, b], S[b, a] = sh, sh
    return S


@dataclass
class GaugeElement:
    """Factorized gauge transformation gamma = W(z) S gamma_1(r).

    Any factor may be omitted; expressions are strings or Expr nodes.
    """

    z: object = None                 # positive scalar field
    so: list = None                  # coefficients per (a<b) generator pair
    r: list = None                   # covector field entries

    def _parse(self, x):
        return parse_expr(x) if isinstance(x, str) else x

    def matrices(self, model, point, order):
        """MForms (gamma, gamma_inv) plus factor data at one point."""
        m = model.m
        ch = model.chart
        n = model.n
        C = space(m, order).size
        out = {}
        # Lorentz factor S as raw (m, m, C)
        S = np.zeros((m, m, C))
        for i in range(m):
            S[i, i, 0] = 1.0
        if self.so:
            pairs = [(a, b) for a in range(m) for b in range(a + 1, m)]
            for pair, coeff in zip(pairs, self.so):
                if coeff is None:
                    continue
                ang = eval_jet(self._parse(coeff), ch, point, order).coeffs
                S = jmul(S[:, :, None, :], _so_factor(model, pair, ang, order)[None, :, :, :], m).sum(axis=1)
        sig = model.eta
        Sinv = np.einsum("a,bac,b->abc", sig, S, sig)  # eta S^T eta
        out["S"] = S
        out["Sinv"] = Sinv
        if model.kind == "poincare":
            gamma = MForm.identity(m, n, order)
            ginv = MForm.identity(m, n, order)
            gamma.data[:m, :m] = S[:, :, None, :]
            ginv.data[:m, :m] = Sinv[:, :, None, :]
            out["gamma"], out["gamma_inv"] = gamma, ginv
            out["S_emb"], out["Sinv_emb"] = gamma, ginv
            return out
        # Weyl factor
        if self.z is not None:
            z = eval_jet(self._parse(self.z), ch, point, order).coeffs
            if z[0] <= 0.0:
                raise DegenerateVielbeinError("gauge factor z must be positive")
        else:
            z = np.zeros(C)
            z[0] = 1.0
        zinv = jrecip(z, m)
        out["z"] = z
        W = MForm.identity(m, n, order)
        W.data[0, 0, 0] = z
        W.data[n - 1, n - 1, 0] = zinv
        Winv = MForm.identity(m, n, order)
        Winv.data[0, 0, 0] = zinv
        Winv.data[n - 1, n - 1, 0] = z
        S_emb = MForm.identity(m, n, order)
        S_emb.data[1:m + 1, 1:m + 1] = S[:, :, None, :]
        Sinv_emb = MForm.identity(m, n, order)
        Sinv_emb.data[1:m + 1, 1:m + 1] = Sinv[:, :, None, :]
        if self.r is not None:
            r = MForm.zeros(m, (1, m), 0, 0, order)
            for i, expr in enumerate(self.r):
                r.data[0, i, 0, :] = eval_jet(self._parse(expr), ch, point, order).coeffs
        else:
            r = MForm.zeros(m, (1, m), 0, 0, order)
        out["r"] = r
        g1 = k1_matrix(r, model)
        g1_inv = k1_matrix(r.scale(-1.0), model)
        out["gamma1"], out["gamma1_inv"] = g1, g1_inv
        out["gamma0"] = W.wedge(S_emb)
        out["gamma0_inv"] = Sinv_emb.wedge(Winv)
        out["W"], out["Winv"] = W, Winv
        out["S_emb"], out["Sinv_emb"] = S_emb, Sinv_emb
        out["gamma"] = out["gamma0"].wedge(g1)
        out["gamma_inv"] = g1_inv.wedge(out["gamma0_inv"])
        return out


def k1_matrix(r, model):
    """Unipotent K1-type matrix [[1, r, r r^t / 2], [0, 1, r^t], [0, 0, 1]]."""
    m = model.m
    eta = model.eta
    rt = eta_t(r, eta)
    rrt = r.wedge(rt).scale(0.5)
    one = MForm.identity(m, 1, r.order)
    eye_m = MForm.identity(m, m, r.order)
    return block_matrix(
        [[one, r, rrt],
         [None, eye_m, rt],
         [None, None, one]],
        m, 0, 0, r.order)


def random_polynomial(rng, m, names, degree=2, scale=1.0):
    """Low-degree polynomial with coefficients drawn from [-1/2, 1/2].

    Nonconstant coefficients shrink with the monomial degree so values stay
    bounded on the sample box and gauge z factors stay positive.
    """
    from .exprs import poly_expr
    coeffs = {}
    for beta in space(m, degree).monos:
        deg = sum(beta)
        u = float(rng.uniform(-0.5, 0.5))
        if deg > 0:
            u /= 2.0 * (m ** deg)
        coeffs[beta] = round(u * scale, 6)
    return poly_expr(coeffs, names)


def random_gauge(model, rng, degree=2, with_z=True, with_s=True, with_r=True):
    """Generic gauge element for scramble tests (seeded, deterministic)."""
    m = model.m
    names = model.chart.names
    z = None
    if with_z:
        from .exprs import add, const
        z = add(const(1), random_polynomial(rng, m, names, degree))
    so = None
    if with_s:
        so = [random_polynomial(rng, m, names, degree)
              for _ in range(m * (m - 1) // 2)]
    r = None
    if with_r:
        r = [random_polynomial(rng, m, names, degree) for _ in range(m)]
    return GaugeElement(z=z, so=so, r=r)
