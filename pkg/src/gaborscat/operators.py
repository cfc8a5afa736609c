"""Discrete forward map from contrast-source coefficients to scattered-field
coefficients.

The coupling factorizes as an x-side tensor (window/dual sums with their
phases) against a z-side tensor (kernel-table Toeplitz blocks with triangle
boundary masks):

    G[(s,t,l),(m,n,k)] = sum_over_live_(q,p)  Xf[(s,t),(m,n);(q,p)] * Z[(q,p);(l,k)]

with q = m-s-u, p = n+t+v on the spatial side and q = s+v-m, p = n+t+u on the
spectral side.  green_apply contracts through the live (q,p) columns without
forming G; assemble_dense materializes G by one matmul per side.  All scalar
prefactors (k0^2, X^2/sqrt(pi), X*sqrt(2/pi)) and the spectral-to-spatial
conversion phase e^{-2 pi j a b s t} are pinned by the end-to-end unit-source
test against brute-force quadrature of the exact Green function.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, SizeCap
from .frame import (DualWindow, FrameParams, analysis_grid, dual_window_value,
                    frame_element, spectral_dual_coeffs)
from .kernels import ZGrid
from .scene import Scene, contrast_at
from .tables import KernelTable


def coeff_shape(fp: FrameParams, zg: ZGrid) -> tuple[int, int, int]:
    return (2 * fp.M + 1, 2 * fp.N + 1, zg.n_k + 1)


def _check_coeffs(c: np.ndarray, fp: FrameParams, zg: ZGrid):
    if c.shape[:3] != coeff_shape(fp, zg):
        raise DimensionMismatch(
            f"coefficient shape {c.shape[:3]} != {coeff_shape(fp, zg)}")


def _z_blocks(table: KernelTable) -> tuple[np.ndarray, np.ndarray]:
    """Live (q,p) columns and their (l,k) coupling blocks.

    Z[c, l, k] = [k < n_k] T[q,p,k-l] + [k > 0] T[q,p,l-k]; the masks drop the
    triangle half that the z-interval boundary cuts away.
    """
    n_k = table.zg.n_k
    live = np.argwhere(np.abs(table.data).max(axis=2) > 0)
    if len(live) == 0:
        live = np.array([[table.q_max, table.p_max]])
    rows = table.data[live[:, 0], live[:, 1], :]         # (nlive, 2*n_k+1)
    l_idx = np.arange(n_k + 1)
    k_idx = np.arange(n_k + 1)
    d_fall = k_idx[None, :] - l_idx[:, None] + n_k       # k - l
    d_rise = l_idx[:, None] - k_idx[None, :] + n_k       # l - k
    z = (rows[:, d_fall] * (k_idx < n_k)[None, None, :]
         + rows[:, d_rise] * (k_idx > 0)[None, None, :])
    return live, z


def _x_factor_spatial(fp: FrameParams, dw: DualWindow, live: np.ndarray,
                      q_max: int, p_max: int, k0: float) -> np.ndarray:
    """Xf[s,t,m,n,c] for live columns c; includes every scalar and phase factor."""
    ab = fp.alpha * fp.beta
    ms = fp.m_range
    ns = fp.n_range
    nm, nn = len(ms), len(ns)
    col_of = -np.ones((2 * q_max + 1, 2 * p_max + 1), dtype=int)
    col_of[live[:, 0], live[:, 1]] = np.arange(len(live))
    xf = np.zeros((nm, nn, nm, nn, len(live)), dtype=complex)
    s_g = ms[:, None]
    m_g = ms[None, :]
    for iu, u in enumerate(range(-dw.n_u, dw.n_u + 1)):
        q_idx = m_g - s_g - u + q_max                    # (ns, nm)
        q_ok = (q_idx >= 0) & (q_idx < 2 * q_max + 1)
        for iv, v in enumerate(range(-dw.n_v, dw.n_v + 1)):
            t_g = ns[:, None]
            n_g = ns[None, :]
            p_idx = n_g + t_g + v + p_max                # (nt, nn)
            p_ok = (p_idx >= 0) & (p_idx < 2 * p_max + 1)
            w_tn = (np.conj(dw.a[iu, iv])
                    * np.exp(-2j * np.pi * ab * u * (t_g + v))
                    * np.exp(-np.pi / 2 * fp.beta ** 2 * (v + t_g - n_g) ** 2))
            cols = col_of[np.clip(q_idx, 0, None)[:, :, None, None],
                          np.clip(p_idx, 0, None)[None, None, :, :]]
            valid = q_ok[:, :, None, None] & p_ok[None, None, :, :] & (cols >= 0)
            si, mi, ti, ni = np.nonzero(valid)
            np.add.at(xf, (si, ti, mi, ni, cols[valid]),
                      np.broadcast_to(w_tn[None, None, :, :],
                                      valid.shape)[valid])
    phase_row = np.exp(-2j * np.pi * ab * np.outer(ms, ns))     # e^{-2pi j ab s t}
    phase_col = np.exp(+2j * np.pi * ab * np.outer(ms, ns))     # e^{+2pi j ab m n}
    xf *= phase_row[:, :, None, None, None]
    xf *= phase_col[None, None, :, :, None]
    xf *= k0 * k0 * fp.X ** 2 / np.sqrt(np.pi)
    return xf


def _x_factor_spectral(fp: FrameParams, dw: DualWindow, live: np.ndarray,
                       q_max: int, p_max: int, k0: float) -> np.ndarray:
    ab = fp.alpha * fp.beta
    a_hat = spectral_dual_coeffs(dw, fp)                 # (2 n_v+1, 2 n_u+1)
    ms = fp.m_range
    ns = fp.n_range
    nm, nn = len(ms), len(ns)
    col_of = -np.ones((2 * q_max + 1, 2 * p_max + 1), dtype=int)
    col_of[live[:, 0], live[:, 1]] = np.arange(len(live))
    xf = np.zeros((nm, nn, nm, nn, len(live)), dtype=complex)
    s_g = ms[:, None]
    m_g = ms[None, :]
    for ih, uh in enumerate(range(-dw.n_v, dw.n_v + 1)):    # kx-shift index
        t_g = ns[:, None]
        n_g = ns[None, :]
        p_idx = n_g + t_g + uh + p_max
        p_ok = (p_idx >= 0) & (p_idx < 2 * p_max + 1)
        decay = np.exp(-np.pi / 2 * fp.beta ** 2 * (n_g - t_g - uh) ** 2)
        for jv, vh in enumerate(range(-dw.n_u, dw.n_u + 1)):  # phase index
            q_idx = s_g + vh - m_g + q_max
            q_ok = (q_idx >= 0) & (q_idx < 2 * q_max + 1)
            w_tn = (np.conj(a_hat[ih, jv])
                    * np.exp(-2j * np.pi * ab * t_g * vh) * decay)
            cols = col_of[np.clip(q_idx, 0, None)[:, :, None, None],
                          np.clip(p_idx, 0, None)[None, None, :, :]]
            valid = q_ok[:, :, None, None] & p_ok[None, None, :, :] & (cols >= 0)
            si, mi, ti, ni = np.nonzero(valid)
            np.add.at(xf, (si, ti, mi, ni, cols[valid]),
                      np.broadcast_to(w_tn[None, None, :, :],
                                      valid.shape)[valid])
    phase_row = np.exp(-2j * np.pi * ab * np.outer(ms, ns))
    phase_col = np.exp(+2j * np.pi * ab * np.outer(ms, ns))
    xf *= phase_row[:, :, None, None, None]
    xf *= phase_col[None, None, :, :, None]
    xf *= k0 * k0 * fp.X * np.sqrt(2 / np.pi)
    return xf


@dataclass
class DiscreteOperator:
    """Precomputed forward-map factors plus the sampled contrast slices."""
    fp: FrameParams
    zg: ZGrid
    k0: float
    dual: DualWindow
    spatial_table: KernelTable
    spectral_table: KernelTable
    grid: np.ndarray
    chi_slices: np.ndarray                   # (n_k+1, ngrid), real
    xf_spatial: np.ndarray = field(repr=False, default=None)
    z_spatial: np.ndarray = field(repr=False, default=None)
    xf_spectral: np.ndarray = field(repr=False, default=None)
    z_spectral: np.ndarray = field(repr=False, default=None)
    synth_matrix: np.ndarray = field(repr=False, default=None)
    analysis_matrix: np.ndarray = field(repr=False, default=None)

    @property
    def n_unknowns(self) -> int:
        nm, nn, nk = coeff_shape(self.fp, self.zg)
        return nm * nn * nk


def build_operator(scene: Scene | None, fp: FrameParams, zg: ZGrid,
                   dual: DualWindow, spatial_table: KernelTable,
                   spectral_table: KernelTable,
                   grid: np.ndarray | None = None) -> DiscreteOperator:
    """Assemble the factorized operator; scene=None means chi == 0."""
    for t in (spatial_table, spectral_table):
        if t.fp != fp or t.zg != zg:
            raise DimensionMismatch("table metadata inconsistent with fp/zg")
    xs = analysis_grid(fp) if grid is None else np.asarray(grid, dtype=float)
    k0 = spatial_table.cfg.k0
    if scene is None:
        chi = np.zeros((zg.n_k + 1, len(xs)))
    else:
        chi = np.array([contrast_at(xs, z_k, scene) for z_k in zg.nodes])

    live_s, z_s = _z_blocks(spatial_table)
    live_p, z_p = _z_blocks(spectral_table)
    op = DiscreteOperator(
        fp=fp, zg=zg, k0=k0, dual=dual, spatial_table=spatial_table,
        spectral_table=spectral_table, grid=xs, chi_slices=chi,
        xf_spatial=_x_factor_spatial(fp, dual, live_s, spatial_table.q_max,
                                     spatial_table.p_max, k0),
        z_spatial=z_s,
        xf_spectral=_x_factor_spectral(fp, dual, live_p, spectral_table.q_max,
                                       spectral_table.p_max, k0),
        z_spectral=z_p)

    mod = np.exp(1j * fp.beta * fp.K * np.outer(xs, fp.n_range))
    nm, nn = 2 * fp.M + 1, 2 * fp.N + 1
    synth = np.empty((len(xs), nm * nn), dtype=complex)
    ana = np.empty((nm * nn, len(xs)), dtype=complex)
    h = float(xs[1] - xs[0])
    for im, m in enumerate(fp.m_range):
        gm = frame_element(xs, m, 0, fp).real
        eta_m = np.conj(dual_window_value(xs - fp.alpha * m * fp.X, dual, fp))
        for inn in range(nn):
            synth[:, im * nn + inn] = gm * mod[:, inn]
            ana[im * nn + inn, :] = h * eta_m * np.conj(mod[:, inn])
    op.synth_matrix = synth
    op.analysis_matrix = ana
    return op


def green_apply(coeffs: np.ndarray, op: DiscreteOperator) -> np.ndarray:
    """Scattered-field coefficients k0^2 (G * J) for J given as (m, n, k[, batch])."""
    c = np.asarray(coeffs, dtype=complex)
    _check_coeffs(c, op.fp, op.zg)
    nm, nn, nk = coeff_shape(op.fp, op.zg)
    batch = c.shape[3:]
    nb = int(np.prod(batch)) if batch else 1
    cb = c.reshape(nm * nn, nk, nb)
    c_by_k = np.ascontiguousarray(cb.transpose(1, 0, 2)).reshape(nk, -1)
    out = np.zeros((nm * nn, nk * nb), dtype=complex)
    for xf, z in ((op.xf_spatial, op.z_spatial), (op.xf_spectral, op.z_spectral)):
        nc = z.shape[0]
        v = (z.reshape(nc * nk, nk) @ c_by_k).reshape(nc, nk, nm * nn, nb)
        v = np.ascontiguousarray(v.transpose(2, 0, 1, 3)).reshape(
            nm * nn * nc, nk * nb)
        out += xf.reshape(nm * nn, -1) @ v
    return out.reshape(c.shape)


def contrast_multiply(coeffs: np.ndarray, op: DiscreteOperator) -> np.ndarray:
    """Per-slice multiply by chi(x, z_l): synthesize, scale, analyze back."""
    c = np.asarray(coeffs, dtype=complex)
    _check_coeffs(c, op.fp, op.zg)
    nm, nn, nk = coeff_shape(op.fp, op.zg)
    nb = int(np.prod(c.shape[3:])) if c.ndim > 3 else 1
    flat = c.reshape(nm * nn, nk * nb)
    fields = (op.synth_matrix @ flat).reshape(-1, nk, nb)
    fields *= op.chi_slices.T[:, :, None]
    out = op.analysis_matrix @ fields.reshape(-1, nk * nb)
    return out.reshape(c.shape)


def forward_residual(coeffs: np.ndarray, inc_coeffs: np.ndarray,
                     op: DiscreteOperator) -> np.ndarray:
    """Residual J - J_inc - chi*(G J) of the contrast-source equation."""
    c = np.asarray(coeffs, dtype=complex)
    j0 = np.asarray(inc_coeffs, dtype=complex)
    _check_coeffs(c, op.fp, op.zg)
    if j0.shape != c.shape:
        raise DimensionMismatch("J and J_inc shapes differ")
    return c - j0 - contrast_multiply(green_apply(c, op), op)


def assemble_green_matrix(op: DiscreteOperator) -> np.ndarray:
    """Dense matrix of green_apply in (m*nn + n)*nk + k flattening."""
    nm, nn, nk = coeff_shape(op.fp, op.zg)
    n = nm * nn * nk
    out = None
    for xf, z in ((op.xf_spatial, op.z_spatial), (op.xf_spectral, op.z_spectral)):
        big = xf.reshape(-1, xf.shape[-1]) @ z.reshape(z.shape[0], -1)
        big = big.reshape(nm, nn, nm, nn, nk, nk).transpose(0, 1, 4, 2, 3, 5)
        big = np.ascontiguousarray(big).reshape(n, n)
        if out is None:
            out = big
        else:
            out += big
    return out


def assemble_dense(op: DiscreteOperator, cap: int = 8000,
                   col_block: int = 512) -> np.ndarray:
    """System matrix I - chi*G; columns are forward-map images of unit vectors.

    The contrast projection runs over column blocks to bound the synthesized
    grid-field temporary.
    """
    n = op.n_unknowns
    if n > cap:
        raise SizeCap(
            f"{n} unknowns exceed the dense cap {cap}; use the iterative solver")
    nm, nn, nk = coeff_shape(op.fp, op.zg)
    a = assemble_green_matrix(op)
    out = np.empty_like(a)
    chi_t = op.chi_slices.T[:, :, None]
    for j0 in range(0, n, col_block):
        j1 = min(j0 + col_block, n)
        view = np.ascontiguousarray(
            a.reshape(nm * nn, nk, n)[:, :, j0:j1]).reshape(nm * nn, -1)
        fields = (op.synth_matrix @ view).reshape(-1, nk, j1 - j0)
        fields *= chi_t
        block = op.analysis_matrix @ fields.reshape(-1, nk * (j1 - j0))
        out.reshape(nm * nn, nk, n)[:, :, j0:j1] = block.reshape(
            nm * nn, nk, j1 - j0)
    out *= -1
    out[np.arange(n), np.arange(n)] += 1
    return out
