"""Independent reference implementations used to cross-check the fast spectral code.

The pointwise oracle never calls an FFT: fields are summed as explicit exponential
series on a finer point set (M = 2N points per axis, enough to resolve every
quadratic product of dealiased inputs exactly), products are formed pointwise and
projected back by direct summation.  Projection, curl and Leray are recoded here.
"""
from __future__ import annotations

from math import factorial

import numpy as np
from scipy.linalg import expm

from .spectral import Grid, SpectralField
from .systems import PhysParams, PlasmaState, System


class PointwiseOracle:
    def __init__(self, grid: Grid, M: int = None):
        self.grid = grid
        self.M = 2 * grid.N if M is None else M
        d, N = grid.d, grid.N
        cut = N // 3
        freqs = np.fft.fftfreq(N, 1.0 / N).astype(int)
        idx = np.array(np.meshgrid(*([np.arange(N)] * d), indexing="ij")).reshape(d, -1).T
        ints = freqs[idx]
        keep = np.all(np.abs(ints) <= cut, axis=1)
        self.index = [tuple(i) for i in idx[keep]]
        scale = 2 * np.pi / grid.L
        self.kvec = np.zeros((len(self.index), 3))
        self.kvec[:, :d] = ints[keep] * scale
        pts = np.arange(self.M) * grid.L / self.M
        xs = np.array(np.meshgrid(*([pts] * d), indexing="ij")).reshape(d, -1).T
        self.phase = np.exp(1j * xs @ self.kvec[:, :d].T)  # (points, modes)

    # modes <-> points
    def _coeffs(self, u: SpectralField) -> np.ndarray:
        return np.array([[c[i] for i in self.index] for c in u.data])  # (comp, modes)

    def values(self, u: SpectralField) -> np.ndarray:
        return np.real(self._coeffs(u) @ self.phase.T)  # (comp, points)

    def grad(self, u: SpectralField) -> np.ndarray:
        c = self._coeffs(u)
        return np.real(np.einsum("cm,mk,pm->ckp", c, 1j * self.kvec, self.phase))  # (comp, dir, points)

    def project(self, vals: np.ndarray, radius: float) -> SpectralField:
        c = vals @ np.conj(self.phase) / self.phase.shape[0]
        kk = np.linalg.norm(self.kvec, axis=1)
        c = np.where(kk <= radius * (1 + 1e-12), c, 0)
        out = np.zeros((vals.shape[0],) + self.grid.shape, dtype=complex)
        for m, i in enumerate(self.index):
            out[(slice(None),) + i] = c[:, m]
        return SpectralField(self.grid, out)

    # per-mode linear algebra written without the spectral module
    def _k_full(self):
        g = self.grid
        n = np.fft.fftfreq(g.N, 1.0 / g.N) * (2 * np.pi / g.L)
        ks = np.meshgrid(*([n] * g.d), indexing="ij")
        return [ks[i] if i < g.d else np.zeros(g.shape) for i in range(3)]

    def leray(self, u: SpectralField) -> SpectralField:
        k = self._k_full()
        k2 = k[0] ** 2 + k[1] ** 2 + k[2] ** 2
        kd = sum(k[i] * u.data[i] for i in range(3))
        safe = np.where(k2 == 0, 1.0, k2)
        return SpectralField(self.grid, np.array([u.data[i] - k[i] * kd / safe for i in range(3)]))

    def curl(self, u: SpectralField) -> SpectralField:
        k = self._k_full()
        a = u.data
        return SpectralField(self.grid, 1j * np.array([k[1] * a[2] - k[2] * a[1],
                                                       k[2] * a[0] - k[0] * a[2],
                                                       k[0] * a[1] - k[1] * a[0]]))

    def frac(self, u: SpectralField, alpha: float) -> SpectralField:
        k = self._k_full()
        mag = np.sqrt(k[0] ** 2 + k[1] ** 2 + k[2] ** 2)
        w = np.ones(self.grid.shape) if alpha == 0 else mag ** (2 * alpha)
        return SpectralField(self.grid, u.data * w)

    def deriv_along(self, u: SpectralField, a) -> SpectralField:
        k = self._k_full()
        return SpectralField(self.grid, u.data * 1j * (a[0] * k[0] + a[1] * k[1] + a[2] * k[2]))

    def cut(self, u: SpectralField, radius: float) -> SpectralField:
        k = self._k_full()
        mag = np.sqrt(k[0] ** 2 + k[1] ** 2 + k[2] ** 2)
        return SpectralField(self.grid, np.where(mag <= radius * (1 + 1e-12), u.data, 0))

    # pointwise products
    @staticmethod
    def _cross(a, b):
        return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])

    def cross(self, a, b, radius):
        return self.project(self._cross(self.values(a), self.values(b)), radius)

    def advect(self, a, b, radius):
        av, gb = self.values(a), self.grad(b)
        return self.project(np.einsum("kp,ckp->cp", av, gb), radius)

    def dot(self, a, b, radius):
        return self.project(np.sum(self.values(a) * self.values(b), axis=0)[None], radius)


def oracle_rhs(state: PlasmaState, params: PhysParams, M: int = None) -> dict:
    """Full time derivatives per field computed with the pointwise oracle."""
    o = PointwiseOracle(state.grid, M)
    n = min(state.n, state.grid.kmax)
    s = params.system
    v, E, B = state.v, state.E, state.B
    sig, c, nu = params.sigma, params.c, params.nu
    bs = np.asarray(params.B_star, dtype=float)
    P = lambda f: o.leray(o.cut(f, n))
    out = {}
    if s in (System.NSM, System.NSM_STAR, System.MAXWELL):
        if v is None:
            v = SpectralField.zeros(state.grid)
        j = c * E + o.cross(v, B, n)
        if s is System.NSM_STAR:
            j = j + o.cut(SpectralField(state.grid, _const_cross(v.data, bs)), n)
        j = j * sig
        out["E"] = (o.curl(B) - j) * c
        out["B"] = -c * o.curl(E)
        if s is not System.MAXWELL:
            force = o.cross(j, B, n)
            if s is System.NSM_STAR:
                force = force + o.cut(SpectralField(state.grid, _const_cross(j.data, bs)), n)
            out["v"] = -nu * o.frac(v, params.alpha) + P(force - o.advect(v, v, n))
    elif s is System.MAXWELL_FREE:
        out["E"] = c * o.curl(B)
        out["B"] = -c * o.curl(E)
    elif s is System.HMHD:
        J = o.curl(B)
        jxb = o.cross(J, B, n)
        out["v"] = -nu * o.frac(v, params.alpha) + P(jxb - o.advect(v, v, n))
        out["B"] = (-(1 / sig) * o.frac(B, params.beta) + o.curl(o.cross(v, B, n))
                    - (params.kappa / sig) * o.curl(jxb))
    elif s is System.MHD:
        half = o.dot(B, B, n) * 0.5
        k = o._k_full()
        gradp = SpectralField(state.grid, 1j * np.array([k[i] * half.data[0] for i in range(3)]))
        out["v"] = -nu * o.frac(v, params.alpha) + P(o.advect(B, B, n) - gradp - o.advect(v, v, n))
        out["B"] = -(1 / sig) * o.frac(B, params.beta) + o.advect(B, v, n) - o.advect(v, B, n)
    elif s is System.HALL:
        out["B"] = -(1 / sig) * o.frac(B, params.beta) - (params.kappa / sig) * o.curl(o.cross(o.curl(B), B, n))
    elif s is System.HMHD_STAR:
        J = o.curl(B)
        kap = params.kappa
        out["v"] = (-nu * o.frac(v, params.alpha) + o.leray(o.deriv_along(B, bs))
                    + P(o.advect(B, B, n) - o.advect(v, v, n)))
        out["B"] = (o.deriv_along(v, bs) - (1 / sig) * o.frac(B, params.beta) - (kap / sig) * o.deriv_along(J, bs)
                    + o.advect(B, v, n) - o.advect(v, B, n)
                    + (kap / sig) * (o.advect(J, B, n) - o.advect(B, J, n)))
    return out


def _const_cross(d, b):
    return np.array([d[1] * b[2] - d[2] * b[1], d[2] * b[0] - d[0] * b[2], d[0] * b[1] - d[1] * b[0]])


# ----------------------------------------------------------------------------
# linear Maxwell oracle

def maxwell_mode_matrix(k, sigma: float, c: float) -> np.ndarray:
    """6x6 generator of (E, B) at wavevector k for dE = c (ik x B - sigma c E), dB = -c ik x E."""
    k = np.asarray(k, dtype=float)
    K = 1j * np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    A = np.zeros((6, 6), dtype=complex)
    A[:3, :3] = -sigma * c * c * np.eye(3)
    A[:3, 3:] = c * K
    A[3:, :3] = -c * K
    return A


def linear_nsm_oracle(state: PlasmaState, params: PhysParams, t: float) -> PlasmaState:
    """Exact solution of the NSM system with all nonlinear terms removed, mode by mode."""
    g = state.grid
    E = state.E.data.reshape(3, -1)
    B = state.B.data.reshape(3, -1)
    kf = np.zeros((3, E.shape[1]))
    kf[: g.d] = g.k[: g.d].reshape(g.d, -1)
    Eo, Bo = np.empty_like(E), np.empty_like(B)
    for m in range(E.shape[1]):
        y = expm(maxwell_mode_matrix(kf[:, m], params.sigma, params.c) * t) @ np.concatenate([E[:, m], B[:, m]])
        Eo[:, m], Bo[:, m] = y[:3], y[3:]
    kmag = np.sqrt(np.sum(kf**2, axis=0))
    w = np.ones_like(kmag) if params.alpha == 0 else kmag ** (2 * params.alpha)
    vo = state.v.data.reshape(3, -1) * np.exp(-params.nu * w * t)
    sh = (3,) + g.shape
    return state.replace(t=state.t + t, v=state.v.with_data(vo.reshape(sh)),
                         E=state.E.with_data(Eo.reshape(sh)), B=state.B.with_data(Bo.reshape(sh)))


def heat_mode_solution(w0: complex, f_coeffs, rate: float, t: float) -> complex:
    """Closed form for w' = -rate w + f(t) with polynomial forcing f(t) = sum_p f_p t^p."""
    out = w0 * np.exp(-rate * t)
    for p, fp in enumerate(f_coeffs):
        out = out + fp * _poly_duhamel(rate, t, p)
    return out


def _poly_duhamel(r: float, t: float, p: int) -> float:
    """int_0^t exp(-r (t - s)) s^p ds."""
    if r * t < 1.0:
        # sum_q (-r)^q t^(p+q+1) p! / (p+q+1)!, cancellation-free for small r t
        return float(sum((-r) ** q * t ** (p + q + 1) * factorial(p) / factorial(p + q + 1) for q in range(40)))
    I = (1 - np.exp(-r * t)) / r
    for q in range(1, p + 1):
        I = (t**q - q * I) / r
    return float(I)
