"""Constitutive assembly for the penalized Ericksen-Leslie system.

Unknowns: velocity u (dim components, divergence-free) and director d
(always 3 components; in 2D the flow lives in the plane but d may tilt).

    u_t + (u.grad)u + grad P = -div(grad d o grad d) + div sigma
    div u = 0
    d_t + (u.grad)d - omega d + (lambda2/lambda1) A d
        = -(1/lambda1) (Lap d - grad_d W(d))

with W(d) = (|d|^2 - 1)^2 / (4 eps^2), A and omega the symmetric and
antisymmetric parts of grad u, (grad d o grad d)_ij = grad_i d . grad_j d,
and the Leslie stress

    sigma = mu1 (d.Ad) d(x)d + mu2 N(x)d + mu3 d(x)N + mu4 A
          + mu5 (Ad)(x)d + mu6 d(x)(Ad),          (a(x)b)_ij = a_i b_j,

where N = d_t + (u.grad)d - omega d is the co-rotational rate, recovered
here through its constitutive form N = -(lambda2 A d + (Lap d - grad_d W))
/ lambda1.

Discrete staging rule (load-bearing for the energy identities): N, Ad,
omega d, d(x)d, and d.Ad are dealiased BEFORE entering outer products, and
the state fields are kept band-limited by the solver.  With collocation
(grid-mean) quadrature the semi-discrete energy law then balances to
rounding error; see tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coeffs import LeslieCoefficients
from .errors import ParameterError, RegimeError
from .spectral import SpectralGrid


@dataclass
class FieldState:
    """Velocity + director on one grid at one time.

    u: (dim,) + grid shape, d: (3,) + grid shape.  The solver keeps u
    divergence-free and both fields band-limited; constructing a state does
    not enforce those invariants, only shapes and finiteness.
    """

    grid: SpectralGrid
    coeffs: LeslieCoefficients
    time: float
    u: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        g = self.grid
        self.u = np.asarray(self.u, dtype=np.float64)
        self.d = np.asarray(self.d, dtype=np.float64)
        if self.u.shape != (g.dim,) + g.shape:
            raise ParameterError(f"u must have shape {(g.dim,) + g.shape}, got {self.u.shape}")
        if self.d.shape != (3,) + g.shape:
            raise ParameterError(f"d must have shape {(3,) + g.shape}, got {self.d.shape}")
        if not np.isfinite(self.time):
            raise ParameterError(f"time must be finite, got {self.time}")
        if not (np.isfinite(self.u).all() and np.isfinite(self.d).all()):
            raise ParameterError("non-finite values in state fields")

    def with_fields(self, u: np.ndarray, d: np.ndarray, time: float) -> "FieldState":
        return FieldState(grid=self.grid, coeffs=self.coeffs, time=time, u=u, d=d)


def penalty(d: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise W(d) = (|d|^2-1)^2/(4 eps^2) and grad_d W = (|d|^2-1) d / eps^2."""
    if epsilon <= 0.0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    s = np.sum(d * d, axis=0) - 1.0
    W = s * s / (4.0 * epsilon ** 2)
    gradW = (s / epsilon ** 2) * d
    return W, gradW


def ericksen_stress(grad_d: np.ndarray) -> np.ndarray:
    """(grad d o grad d)_ij = sum_c d_i(d_c) d_j(d_c), pointwise, symmetric."""
    return np.einsum("ic...,jc...->ij...", grad_d, grad_d)


def mat_vec_director(M: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Apply a (dim x dim) field to the director, embedding into 3 components.

    In 2D the third output component is zero (the in-plane tensor cannot
    rotate d out of or into the plane); in 3D this is the plain product.
    """
    dim = M.shape[0]
    out = np.zeros((3,) + M.shape[2:], dtype=np.float64)
    out[:dim] = np.einsum("ij...,j...->i...", M, d[:dim])
    return out


@dataclass
class RegularizationConfig:
    """Higher-order viscosity regularization of the Galerkin scheme.

    Adds (1/M) div(|grad u|^(r-2) grad u) to the momentum RHS and advects
    with the truncated velocity [u]_M (modes up to M) in divergence form
    div([u]_M (x) u).  N_modes, when set, additionally truncates the evolved
    velocity to |k_j| <= N_modes each step (the director is untouched).
    """

    enabled: bool = True
    M: int = 8
    r: float = 4.0
    N_modes: int | None = None

    def __post_init__(self):
        if self.M < 1:
            raise ParameterError(f"regularization M must be >= 1, got {self.M}")
        if not self.r > 10.0 / 3.0:
            raise ParameterError(f"regularization exponent r must exceed 10/3, got {self.r}")
        if self.N_modes is not None:
            if self.N_modes < 1:
                raise ParameterError(f"N_modes must be >= 1, got {self.N_modes}")
            if self.M > self.N_modes:
                raise ParameterError(f"require M <= N_modes, got M={self.M}, N_modes={self.N_modes}")


@dataclass
class ConstitutiveBundle:
    """Every field the stepper and the energy audit share, computed once.

    Staged (dealiased) quantities: Ad, omega_d, N, dAd, tension, sigma_nl.
    tension = Lap d - dealias(grad_d W) and N = -(lambda2 Ad + tension)/lambda1,
    so lambda1 N + lambda2 Ad + tension = 0 holds to rounding by construction.
    """

    grad_u: np.ndarray       # (dim, dim) + grid, grad_u[i, j] = d_i u_j
    A: np.ndarray            # symmetric part
    omega: np.ndarray        # antisymmetric part
    grad_d: np.ndarray       # (dim, 3) + grid
    lap_d: np.ndarray        # (3,) + grid
    W_val: np.ndarray        # scalar grid field, pointwise
    gradW: np.ndarray        # (3,) + grid, pointwise
    Ad: np.ndarray           # dealias(A d), 3 components
    omega_d: np.ndarray      # dealias(omega d), 3 components
    tension: np.ndarray      # Lap d - dealias(gradW)
    N: np.ndarray            # co-rotational rate via the constitutive identity
    dAd: np.ndarray          # scalar dealias(dealias(d(x)d) : A)
    dd: np.ndarray           # dealias(d(x)d), (dim, dim) + grid block
    sigma_nl: np.ndarray     # Leslie stress minus the mu4 A part, dealiased
    sigma: np.ndarray        # mu4 A + sigma_nl


def constitutive(state: FieldState) -> ConstitutiveBundle:
    """Assemble all constitutive fields for one state.

    Requires lambda1 < 0 (the director relaxation rate); everything else is
    algebra.  One FFT pass per field, dealiasing applied per the staging rule.
    """
    g = state.grid
    c = state.coeffs
    if c.lambda1 >= 0.0:
        raise RegimeError(f"constitutive assembly requires lambda1 < 0, got {c.lambda1}")

    grad_u = g.gradient(state.u)
    A = 0.5 * (grad_u + grad_u.swapaxes(0, 1))
    omega = 0.5 * (grad_u - grad_u.swapaxes(0, 1))
    grad_d = g.gradient(state.d)
    lap_d = g.laplacian(state.d)
    W_val, gradW = penalty(state.d, c.epsilon)

    Ad = g.dealias(mat_vec_director(A, state.d))
    omega_d = g.dealias(mat_vec_director(omega, state.d))
    tension = lap_d - g.dealias(gradW)
    N = -(c.lambda2 * Ad + tension) / c.lambda1

    d_blk = state.d[: g.dim]
    dd = g.dealias(np.einsum("i...,j...->ij...", d_blk, d_blk))
    dAd = g.dealias(np.einsum("ij...,ij...->...", dd, A))

    N_blk = N[: g.dim]
    Ad_blk = Ad[: g.dim]
    pieces = (
        c.mu1 * dAd * dd
        + c.mu2 * np.einsum("i...,j...->ij...", N_blk, d_blk)
        + c.mu3 * np.einsum("i...,j...->ij...", d_blk, N_blk)
        + c.mu5 * np.einsum("i...,j...->ij...", Ad_blk, d_blk)
        + c.mu6 * np.einsum("i...,j...->ij...", d_blk, Ad_blk)
    )
    sigma_nl = g.dealias(pieces)
    sigma = c.mu4 * A + sigma_nl

    return ConstitutiveBundle(
        grad_u=grad_u, A=A, omega=omega, grad_d=grad_d, lap_d=lap_d,
        W_val=W_val, gradW=gradW, Ad=Ad, omega_d=omega_d, tension=tension,
        N=N, dAd=dAd, dd=dd, sigma_nl=sigma_nl, sigma=sigma,
    )


def leslie_stress(grid: SpectralGrid, c: LeslieCoefficients, d: np.ndarray,
                  A: np.ndarray, N: np.ndarray, Ad: np.ndarray) -> np.ndarray:
    """Assemble sigma from already-staged ingredient fields.

    Used by tests against hand-computed single-point values; constitutive()
    inlines the same expression.
    """
    dim = grid.dim
    d_blk, N_blk, Ad_blk = d[:dim], N[:dim], Ad[:dim]
    dd = grid.dealias(np.einsum("i...,j...->ij...", d_blk, d_blk))
    dAd = grid.dealias(np.einsum("ij...,ij...->...", dd, A))
    pieces = (
        c.mu1 * dAd * dd
        + c.mu2 * np.einsum("i...,j...->ij...", N_blk, d_blk)
        + c.mu3 * np.einsum("i...,j...->ij...", d_blk, N_blk)
        + c.mu5 * np.einsum("i...,j...->ij...", Ad_blk, d_blk)
        + c.mu6 * np.einsum("i...,j...->ij...", d_blk, Ad_blk)
    )
    return c.mu4 * A + grid.dealias(pieces)


def transport_N(state: FieldState, bundle: ConstitutiveBundle | None = None) -> np.ndarray:
    """Co-rotational rate N = d_t + (u.grad)d - omega d via the director equation."""
    if bundle is None:
        bundle = constitutive(state)
    return bundle.N


@dataclass
class SplitRHS:
    """total = diffusion + explicit; diffusion is the Fourier-diagonal part."""

    total: np.ndarray
    diffusion: np.ndarray
    explicit: np.ndarray


def director_rhs(state: FieldState, bundle: ConstitutiveBundle | None = None) -> SplitRHS:
    """d_t = -(u.grad)d + omega d - (lambda2/lambda1) Ad - (1/lambda1)(Lap d - grad_d W).

    diffusion = -(1/lambda1) Lap d (a positive multiple, since lambda1 < 0);
    the penalty gradient stays explicit.
    """
    g = state.grid
    c = state.coeffs
    if bundle is None:
        bundle = constitutive(state)
    transport = g.dealias(np.einsum("i...,ic...->c...", state.u, bundle.grad_d))
    dealiased_gradW = bundle.lap_d - bundle.tension
    explicit = (
        -transport
        + bundle.omega_d
        - (c.lambda2 / c.lambda1) * bundle.Ad
        + dealiased_gradW / c.lambda1
    )
    diffusion = bundle.lap_d / (-c.lambda1)
    return SplitRHS(total=diffusion + explicit, diffusion=diffusion, explicit=explicit)


def visco_reg_stress(grid: SpectralGrid, grad_u: np.ndarray, r: float) -> np.ndarray:
    """dealias(|grad u|^(r-2) grad u) with the pointwise Frobenius magnitude."""
    mag2 = np.sum(grad_u * grad_u, axis=(0, 1))
    return grid.dealias(mag2 ** (0.5 * (r - 2.0)) * grad_u)


def _momentum_force(state: FieldState, bundle: ConstitutiveBundle,
                    reg: RegularizationConfig | None, convective: str) -> np.ndarray:
    """Unprojected momentum RHS minus the pressure gradient and the mu4 diffusion."""
    g = state.grid
    if reg is not None and reg.enabled:
        # divergence form with the truncated advecting velocity [u]_M
        u_M = g.truncate_modes(state.u, min(reg.M, g.n // 2))
        uu = g.dealias(np.einsum("i...,j...->ij...", u_M, state.u))
        conv = g.div_tensor(uu)
        stress = bundle.sigma_nl - ericksen_stress(bundle.grad_d) \
            + visco_reg_stress(g, bundle.grad_u, reg.r) / float(reg.M)
    else:
        if convective == "convective":
            conv = g.dealias(np.einsum("i...,ij...->j...", state.u, bundle.grad_u))
        elif convective == "skew":
            adv = g.dealias(np.einsum("i...,ij...->j...", state.u, bundle.grad_u))
            uu = g.dealias(np.einsum("i...,j...->ij...", state.u, state.u))
            conv = 0.5 * (adv + g.div_tensor(uu))
        else:
            raise ParameterError(f"unknown convective form {convective!r}")
        stress = bundle.sigma_nl - ericksen_stress(bundle.grad_d)
    return g.div_tensor(g.dealias(stress)) - conv


def momentum_rhs(state: FieldState, bundle: ConstitutiveBundle | None = None,
                 reg: RegularizationConfig | None = None,
                 convective: str = "convective") -> SplitRHS:
    """Leray-projected u_t; diffusion = (mu4/2) Lap u handled spectrally.

    Precondition: u divergence-free and band-limited (then the projected
    diffusion equals the raw Laplacian and the split is consistent).
    """
    g = state.grid
    if bundle is None:
        bundle = constitutive(state)
    force = _momentum_force(state, bundle, reg, convective)
    explicit = g.leray(force)
    diffusion = 0.5 * state.coeffs.mu4 * g.laplacian(state.u)
    return SplitRHS(total=diffusion + explicit, diffusion=diffusion, explicit=explicit)
