"""Method of Moving Asymptotes (Svanberg 1987) for the bound formulation.

The problem handed to MMA is

    min  a0 z + sum(c_i y_i + d_i y_i^2 / 2)
    s.t. f_i(x) - a_i z - y_i <= 0,   xmin <= x <= xmax,  z, y >= 0

with f0 = 0, a0 = 1, a_i = 1, c_i = 1000, d_i = 0, so that z bounds all the
constraint values from above.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RAA0 = 1e-5
ALBEFA = 0.1
EPSIMIN = 1e-7


@dataclass
class Subproblem:
    low: np.ndarray
    upp: np.ndarray
    alfa: np.ndarray
    beta: np.ndarray
    p0: np.ndarray
    q0: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    b: np.ndarray

    def approx(self, x: np.ndarray):
        """Values of the convex approximations (f0~, f_i~ + b_i) at x."""
        ux, xl = self.upp - x, x - self.low
        return self.p0 @ (1 / ux) + self.q0 @ (1 / xl), self.P @ (1 / ux) + self.Q @ (1 / xl)


def asymptotes(k, x, xold1, xold2, low, upp, xmin, xmax, init=0.5, incr=1.2, decr=0.7):
    span = xmax - xmin
    if k <= 2:
        return x - init * span, x + init * span
    zzz = (x - xold1) * (xold1 - xold2)
    factor = np.ones_like(x)
    factor[zzz > 0] = incr
    factor[zzz < 0] = decr
    low = x - factor * (xold1 - low)
    upp = x + factor * (upp - xold1)
    low = np.clip(low, x - 10 * span, x - 0.01 * span)
    upp = np.clip(upp, x + 0.01 * span, x + 10 * span)
    return low, upp


def build_subproblem(x, low, upp, xmin, xmax, df0dx, fval, dfdx, move=None) -> Subproblem:
    span = np.maximum(xmax - xmin, 1e-5)
    alfa = np.maximum.reduce([low + ALBEFA * (x - low), xmin] + ([x - move * span] if move else []))
    beta = np.minimum.reduce([upp - ALBEFA * (upp - x), xmax] + ([x + move * span] if move else []))
    ux2, xl2 = (upp - x) ** 2, (x - low) ** 2

    p0, q0 = np.maximum(df0dx, 0), np.maximum(-df0dx, 0)
    pq0 = 0.001 * (p0 + q0) + RAA0 / span
    p0, q0 = (p0 + pq0) * ux2, (q0 + pq0) * xl2

    P, Q = np.maximum(dfdx, 0), np.maximum(-dfdx, 0)
    PQ = 0.001 * (P + Q) + RAA0 / span
    P, Q = (P + PQ) * ux2, (Q + PQ) * xl2
    b = P @ (1 / (upp - x)) + Q @ (1 / (x - low)) - fval
    return Subproblem(low, upp, alfa, beta, p0, q0, P, Q, b)


def subsolv(sp: Subproblem, a0, a, c, d, epsimin: float = EPSIMIN):
    """Primal-dual Newton solve of the MMA subproblem; returns (x, y, z, lam).

    The barrier parameter is driven down to ``epsimin``; the returned x is
    biased off the exact subproblem optimum by roughly that amount.
    """
    low, upp, alfa, beta = sp.low, sp.upp, sp.alfa, sp.beta
    p0, q0, P, Q, b = sp.p0, sp.q0, sp.P, sp.Q, sp.b
    m, n = P.shape
    een, eem = np.ones(n), np.ones(m)
    epsi = 1.0
    x = 0.5 * (alfa + beta)
    y = eem.copy()
    z = 1.0
    lam = eem.copy()
    xsi = np.maximum(een / (x - alfa), een)
    eta = np.maximum(een / (beta - x), een)
    mu = np.maximum(eem, 0.5 * c)
    zet = 1.0
    s = eem.copy()

    def residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi):
        ux, xl = upp - x, x - low
        plam = p0 + P.T @ lam
        qlam = q0 + Q.T @ lam
        gvec = P @ (1 / ux) + Q @ (1 / xl)
        return np.concatenate(
            [
                plam / ux**2 - qlam / xl**2 - xsi + eta,
                c + d * y - mu - lam,
                [a0 - zet - a @ lam],
                gvec - a * z - y + s - b,
                xsi * (x - alfa) - epsi,
                eta * (beta - x) - epsi,
                mu * y - epsi,
                [zet * z - epsi],
                lam * s - epsi,
            ]
        )

    while epsi > epsimin:
        res = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi)
        resnorm, resmax = np.linalg.norm(res), np.abs(res).max()
        it = 0
        while resmax > 0.9 * epsi and it < 200:
            it += 1
            ux, xl = upp - x, x - low
            plam = p0 + P.T @ lam
            qlam = q0 + Q.T @ lam
            gvec = P @ (1 / ux) + Q @ (1 / xl)
            GG = P / ux**2 - Q / xl**2
            delx = plam / ux**2 - qlam / xl**2 - epsi / (x - alfa) + epsi / (beta - x)
            dely = c + d * y - lam - epsi / y
            delz = a0 - a @ lam - epsi / z
            dellam = gvec - a * z - y - b + epsi / lam
            diagx = 2 * (plam / ux**3 + qlam / xl**3) + xsi / (x - alfa) + eta / (beta - x)
            diagy = d + mu / y
            diaglamyi = s / lam + 1 / diagy
            blam = dellam + dely / diagy - GG @ (delx / diagx)
            AA = np.zeros((m + 1, m + 1))
            AA[:m, :m] = np.diag(diaglamyi) + (GG / diagx) @ GG.T
            AA[:m, m] = a
            AA[m, :m] = a
            AA[m, m] = -zet / z
            sol = np.linalg.solve(AA, np.concatenate([blam, [delz]]))
            dlam, dz = sol[:m], sol[m]
            dx = -delx / diagx - (GG.T @ dlam) / diagx
            dy = -dely / diagy + dlam / diagy
            dxsi = -xsi + epsi / (x - alfa) - xsi * dx / (x - alfa)
            deta = -eta + epsi / (beta - x) + eta * dx / (beta - x)
            dmu = -mu + epsi / y - mu * dy / y
            dzet = -zet + epsi / z - zet * dz / z
            ds = -s + epsi / lam - s * dlam / lam

            xx = np.concatenate([y, [z], lam, xsi, eta, mu, [zet], s])
            dxx = np.concatenate([dy, [dz], dlam, dxsi, deta, dmu, [dzet], ds])
            stm = max(
                np.max(-1.01 * dxx / xx),
                np.max(-1.01 * dx / (x - alfa)),
                np.max(1.01 * dx / (beta - x)),
                1.0,
            )
            steg = 1.0 / stm
            old = (x, y, z, lam, xsi, eta, mu, zet, s)
            newnorm = 2 * resnorm
            tries = 0
            while newnorm > resnorm and tries < 50:
                tries += 1
                x, y, z, lam, xsi, eta, mu, zet, s = (
                    o + steg * dd for o, dd in zip(old, (dx, dy, dz, dlam, dxsi, deta, dmu, dzet, ds))
                )
                res = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi)
                newnorm = np.linalg.norm(res)
                steg /= 2
            resnorm, resmax = newnorm, np.abs(res).max()
        epsi *= 0.1
    return x, y, z, lam


@dataclass
class MMA:
    """Iteration state for the bound formulation over box [xmin, xmax]."""

    n: int
    m: int
    xmin: np.ndarray = None
    xmax: np.ndarray = None
    c: float = 1000.0
    asyinit: float = 0.5
    asydecr: float = 0.7
    asyincr: float = 1.2
    move: float | None = None
    epsimin: float = EPSIMIN
    k: int = 0
    low: np.ndarray = field(default=None, repr=False)
    upp: np.ndarray = field(default=None, repr=False)
    xold1: np.ndarray = field(default=None, repr=False)
    xold2: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.xmin = np.zeros(self.n) if self.xmin is None else np.asarray(self.xmin, float)
        self.xmax = np.ones(self.n) if self.xmax is None else np.asarray(self.xmax, float)

    def update(self, x, fval, dfdx):
        """One MMA step; returns (x_new, z)."""
        x = np.asarray(x, dtype=float)
        fval = np.asarray(fval, dtype=float)
        dfdx = np.atleast_2d(np.asarray(dfdx, dtype=float))
        if not (np.isfinite(fval).all() and np.isfinite(dfdx).all()):
            raise FloatingPointError("non-finite constraint values or gradients")
        self.k += 1
        if self.xold1 is None:
            self.xold1 = x.copy()
            self.xold2 = x.copy()
        self.low, self.upp = asymptotes(
            self.k, x, self.xold1, self.xold2, self.low, self.upp, self.xmin, self.xmax,
            self.asyinit, self.asyincr, self.asydecr,
        )
        sp = build_subproblem(x, self.low, self.upp, self.xmin, self.xmax, np.zeros(self.n), fval, dfdx, self.move)
        a = np.ones(self.m)
        xnew, _, z, _ = subsolv(sp, 1.0, a, np.full(self.m, self.c), np.zeros(self.m), self.epsimin)
        xnew = np.clip(xnew, self.xmin, self.xmax)
        self.xold2, self.xold1 = self.xold1, x.copy()
        return xnew, float(z)
