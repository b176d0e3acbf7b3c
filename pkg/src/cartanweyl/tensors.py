"""Classical coordinate tensor calculus over jet coefficients.

Independent oracle route: everything here is computed from the metric by the
textbook index formulas, never through the Cartan-connection machinery.  All
arrays carry jet coefficients on the trailing axis; the jet order drops by
one per derivative taken.

Index conventions (fixed once, shared with the dressing route):
  Gamma[rho, mu, nu]        Christoffel symbols, first lower index = form index
  R[rho, nu, mu, sigma]     Riemann from R = d Gamma + Gamma^2, antisym (mu, sigma)
  Ricci[nu, sigma] = R[lam, nu, lam, sigma]
  P = -1/(m-2) (Ricci - R g / (2(m-1)))
  Cotton[nu, mu, sigma] = cov_mu P[sigma, nu] - cov_sigma P[mu, nu]
  Weyl[rho, nu, mu, sigma]  traceless completion of Riemann by P and g
"""

from __future__ import annotations

import numpy as np

from .jets import jder, jmat_inv, jmul, jtrunc, order_of


def jeinsum(spec, a, b, m):
    """Two-operand einsum with jet-valued entries (trailing coeff axis).

    Contracted labels are those missing from the output.  Products go through
    the truncated jet convolution, so orders mix correctly.
    """
    ins, out = spec.split("->")
    la, lb = ins.split(",")
    contracted = [c for c in dict.fromkeys(la + lb) if c not in out]
    full = out + "".join(contracted)
    sizes = {}
    for lbl, size in zip(la, a.shape[:-1]):
        sizes[lbl] = size
    for lbl, size in zip(lb, b.shape[:-1]):
        sizes[lbl] = size

    def arrange(x, labels):
        # transpose to the order of `full` and insert singleton axes
        perm = [labels.index(c) for c in full if c in labels]
        x = x.transpose(*perm, x.ndim - 1)
        shape = [sizes[c] if c in labels else 1 for c in full] + [x.shape[-1]]
        return x.reshape(shape)

    va = arrange(a, la)
    vb = arrange(b, lb)
    prod = jmul(va, vb, m)
    if contracted:
        axes = tuple(range(len(out), len(full)))
        prod = prod.sum(axis=axes)
    return prod


def _dstack(a, m):
    """Stack partial derivatives over a new leading axis."""
    return np.stack([jder(a, m, nu) for nu in range(m)])


def metric_from_vielbein(e, signature):
    """g = e^T eta e for a vielbein array e[a, mu, :]."""
    m = e.shape[0]
    sig = np.asarray(signature, dtype=float)
    weighted = sig[:, None, None] * e
    return jeinsum("am,an->mn", weighted, e, m)


def inverse_metric(g, m):
    return jmat_inv(g, m)


def christoffel(g, ginv, m):
    dg = _dstack(g, m)  # dg[d, i, j] = partial_d g_ij
    A = dg.transpose(1, 0, 2, 3) + dg.transpose(1, 2, 0, 3) - dg
    return 0.5 * jeinsum("rl,lmn->rmn", ginv, A, m)


def riemann(gamma, m):
    dG = _dstack(gamma, m)  # dG[d, rho, a, b] = partial_d Gamma[rho, a, b]
    t1 = dG.transpose(1, 3, 0, 2, 4)   # [rho, nu, mu, sigma] = d_mu G[rho, sigma, nu]
    t2 = dG.transpose(1, 3, 2, 0, 4)   # [rho, nu, mu, sigma] = d_sigma G[rho, mu, nu]
    q1 = jeinsum("rml,lsn->rnms", gamma, gamma, m)  # G[rho,mu,lam] G[lam,sigma,nu]
    q2 = jeinsum("rsl,lmn->rnms", gamma, gamma, m)  # G[rho,sigma,lam] G[lam,mu,nu]
    k = min(order_of(m, t1), order_of(m, q1))
    return (jtrunc(t1, m, k) - jtrunc(t2, m, k)
            + jtrunc(q1, m, k) - jtrunc(q2, m, k))


def ricci(riem):
    return np.einsum("anas...->ns...", riem)


def ricci_scalar(ric, ginv, m):
    return jeinsum("ns,ns->", ginv, ric, m)


def schouten_from_ricci(ric, scal, g, m):
    dim = g.shape[0]
    k = order_of(m, ric)
    gk = jtrunc(g, m, k)
    return (-1.0 / (dim - 2)) * (ric - jeinsum(",mn->mn", scal, gk, m) / (2.0 * (dim - 1)))


def covariant_dP(P, gamma, m):
    """cov[mu, sigma, nu] = d_mu P[sigma, nu] - G[lam,mu,sigma] P[lam,nu]
    - G[lam,mu,nu] P[sigma,lam]."""
    dP = _dstack(P, m)
    gp1 = jeinsum("lms,ln->msn", gamma, P, m)
    gp2 = jeinsum("lmn,sl->msn", gamma, P, m)
    k = order_of(m, dP)
    return dP - jtrunc(gp1, m, k) - jtrunc(gp2, m, k)


def cotton(P, gamma, m):
    cov = covariant_dP(P, gamma, m)
    return cov.transpose(2, 0, 1, 3) - cov.transpose(2, 1, 0, 3)


def weyl_tensor(riem, P, g, ginv, m):
    """W[rho, nu, mu, sigma] = R + (delta wedge P + P-raised wedge g) terms."""
    k = order_of(m, riem)
    Pk = jtrunc(P, m, k)
    gk = jtrunc(g, m, k)
    dim = g.shape[0]
    delta = np.eye(dim)
    W = riem.copy()
    W = W + np.einsum("rm,snc->rnmsc", delta, Pk) \
          - np.einsum("rs,mnc->rnmsc", delta, Pk)
    praise = jeinsum("ml,lr->mr", Pk, jtrunc(ginv, m, k), m)  # P[mu,lam] ginv[lam,rho]
    W = W + jeinsum("mr,sn->rnms", praise, gk, m) \
          - jeinsum("sr,mn->rnms", praise, gk, m)
    return W


def classical_bundle(e, signature, m):
    """All oracle tensors from a vielbein jet array in one pass."""
    g = metric_from_vielbein(e, signature)
    ginv = inverse_metric(g, m)
    gamma = christoffel(g, ginv, m)
    riem = riemann(gamma, m)
    ric = ricci(riem)
    scal = ricci_scalar(ric, jtrunc(ginv, m, order_of(m, ric)), m)
    P = schouten_from_ricci(ric, scal, g, m)
    C = cotton(P, gamma, m)
    W = weyl_tensor(riem, P, g, ginv, m)
    return {
        "g": g, "ginv": ginv, "Gamma": gamma, "Riemann": riem,
        "Ricci": ric, "Rscal": scal, "P": P, "C": C, "W": W,
    }


def values(d):
    """Map a dict of jet arrays to the value (order-zero) coefficients."""
    return {k: v[..., 0] for k, v in d.items()}
