"""Energy bookkeeping, dissipation channels, and blow-up criterion monitors.

All quadrature is the collocation grid mean on the unit box.  The total
energy is

    E = 1/2 ||u||^2 + 1/2 ||grad d||^2 + int W(d),

and along solutions dE/dt = -(D_visc + D_mu1 + D_N + D_Ad + D_cross) - D_reg,
with the equivalent case-1 grouping (under Parodi)

    dE/dt = -(D_visc + D_mu1 + D_case1_director + D_case1_Ad) - D_reg.

Residuals compare a finite-difference dE/dt of a state pair against the
channel sum evaluated at the earlier state, so they measure the time
discretization only; the spatial assembly balances to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .physics import ConstitutiveBundle, FieldState, RegularizationConfig, constitutive, penalty

CSV_COLUMNS = (
    "time", "E_total", "E_kinetic", "E_elastic", "E_penalty",
    "D_mu1", "D_visc", "D_Ad", "D_N", "D_cross",
    "D_case1_director", "D_case1_Ad", "D_reg",
    "residual_general", "residual_case1",
    "sup_curl_u", "sup_grad_d", "B_integral", "G_bracket",
    "Y3", "A_qty", "logsob_ratio",
)


@dataclass(frozen=True)
class EnergyReport:
    """Energies, dissipation channels, and audit residuals at one instant."""

    time: float
    E_total: float
    E_kinetic: float
    E_elastic: float
    E_penalty: float
    D_mu1: float = 0.0
    D_visc: float = 0.0
    D_Ad: float = 0.0
    D_N: float = 0.0
    D_cross: float = 0.0
    D_case1_director: float = 0.0
    D_case1_Ad: float = 0.0
    D_reg: float = 0.0
    residual_general: float = 0.0
    residual_case1: float = 0.0
    norm_N_sq: float = 0.0
    norm_Ad_sq: float = 0.0

    @property
    def dissipation_general(self) -> float:
        return self.D_mu1 + self.D_visc + self.D_Ad + self.D_N + self.D_cross + self.D_reg

    @property
    def dissipation_case1(self) -> float:
        return self.D_mu1 + self.D_visc + self.D_case1_director + self.D_case1_Ad + self.D_reg


def energies(state: FieldState) -> tuple[float, float, float, float]:
    """(E_kinetic, E_elastic, E_penalty, E_total) by grid quadrature."""
    g = state.grid
    ek = 0.5 * g.l2_inner(state.u, state.u)
    grad_d = g.gradient(state.d)
    ee = 0.5 * g.l2_inner(grad_d, grad_d)
    W, _ = penalty(state.d, state.coeffs.epsilon)
    ep = g.mean(W)
    return ek, ee, ep, ek + ee + ep


def total_energy(state: FieldState) -> EnergyReport:
    """Energies only; channels and residuals zero."""
    ek, ee, ep, et = energies(state)
    return EnergyReport(time=state.time, E_total=et, E_kinetic=ek,
                        E_elastic=ee, E_penalty=ep)


def channels(state: FieldState, bundle: ConstitutiveBundle | None = None,
             reg: RegularizationConfig | None = None) -> EnergyReport:
    """Full instantaneous report: energies plus every dissipation channel.

    D_visc   = mu4 ||A||^2            (= (mu4/2)||grad u||^2 for div-free u)
    D_mu1    = mu1 ||dAd||^2
    D_N      = -lambda1 ||N||^2
    D_Ad     = (mu5+mu6) ||Ad||^2
    D_cross  = -(lambda2-mu2-mu3) <N, Ad>
    D_case1_director = (-1/lambda1) ||Lap d - grad_d W||^2
    D_case1_Ad       = (mu5+mu6+lambda2^2/lambda1) ||Ad||^2
    D_reg    = (1/M) mean |grad u|^r   (0 when regularization is off)
    """
    g = state.grid
    c = state.coeffs
    if bundle is None:
        bundle = constitutive(state)

    ek = 0.5 * g.l2_inner(state.u, state.u)
    ee = 0.5 * g.l2_inner(bundle.grad_d, bundle.grad_d)
    ep = g.mean(bundle.W_val)

    n2_N = g.l2_inner(bundle.N, bundle.N)
    n2_Ad = g.l2_inner(bundle.Ad, bundle.Ad)
    d_visc = c.mu4 * g.l2_inner(bundle.A, bundle.A)
    d_mu1 = c.mu1 * g.l2_inner(bundle.dAd, bundle.dAd)
    d_n = -c.lambda1 * n2_N
    d_ad = (c.mu5 + c.mu6) * n2_Ad
    d_cross = -(c.lambda2 - c.mu2 - c.mu3) * g.l2_inner(bundle.N, bundle.Ad)
    d_c1_dir = g.l2_inner(bundle.tension, bundle.tension) / (-c.lambda1)
    d_c1_ad = (c.mu5 + c.mu6 + c.lambda2 ** 2 / c.lambda1) * n2_Ad

    d_reg = 0.0
    if reg is not None and reg.enabled:
        mag2 = np.sum(bundle.grad_u * bundle.grad_u, axis=(0, 1))
        d_reg = float(np.mean(mag2 ** (0.5 * reg.r))) / float(reg.M)

    return EnergyReport(
        time=state.time, E_total=ek + ee + ep, E_kinetic=ek, E_elastic=ee,
        E_penalty=ep, D_mu1=d_mu1, D_visc=d_visc, D_Ad=d_ad, D_N=d_n,
        D_cross=d_cross, D_case1_director=d_c1_dir, D_case1_Ad=d_c1_ad,
        D_reg=d_reg, norm_N_sq=n2_N, norm_Ad_sq=n2_Ad,
    )


def energy_law_audit(prev: FieldState, next_state: FieldState,
                     reg: RegularizationConfig | None = None,
                     dt: float | None = None) -> EnergyReport:
    """Audit one state pair: finite-difference dE/dt against channels at prev.

    residual_general = (E_next - E_prev)/dt + sum(general channels at prev)
    residual_case1   = (E_next - E_prev)/dt + sum(case-1 channels at prev)

    Both vanish as O(dt) for the continuous-in-time system; for a scheme of
    order p the per-step imbalance is O(dt^(p+1))/dt = O(dt^p).
    """
    if dt is None:
        dt = next_state.time - prev.time
    if not dt > 0.0:
        raise ParameterError(f"audit requires a positive time gap, got {dt}")
    rep = channels(prev, reg=reg)
    _, _, _, e_next = energies(next_state)
    rate = (e_next - rep.E_total) / dt
    return EnergyReport(
        time=next_state.time, E_total=e_next,
        E_kinetic=rep.E_kinetic, E_elastic=rep.E_elastic, E_penalty=rep.E_penalty,
        D_mu1=rep.D_mu1, D_visc=rep.D_visc, D_Ad=rep.D_Ad, D_N=rep.D_N,
        D_cross=rep.D_cross, D_case1_director=rep.D_case1_director,
        D_case1_Ad=rep.D_case1_Ad, D_reg=rep.D_reg,
        residual_general=rate + rep.dissipation_general,
        residual_case1=rate + rep.dissipation_case1,
        norm_N_sq=rep.norm_N_sq, norm_Ad_sq=rep.norm_Ad_sq,
    )


def case2_lower_bound_check(report: EnergyReport, eta: float, tol: float = 1e-10) -> bool:
    """Coercivity of the director channels: D_N + D_cross + D_Ad >= eta (||N||^2 + ||Ad||^2)."""
    if eta < 0.0 or not math.isfinite(eta):
        raise ParameterError(f"eta must be finite and nonnegative, got {eta}")
    lhs = report.D_N + report.D_cross + report.D_Ad
    rhs = eta * (report.norm_N_sq + report.norm_Ad_sq)
    return lhs + tol >= rhs


# -- blow-up criterion monitors -------------------------------------------------


def quantity_A(state: FieldState) -> float:
    """A(t) = ||grad u||^2 + ||Lap d - grad_d W||^2 (grid quadrature)."""
    g = state.grid
    grad_u = g.gradient(state.u)
    _, gradW = penalty(state.d, state.coeffs.epsilon)
    tension = g.laplacian(state.d) - g.dealias(gradW)
    return g.l2_inner(grad_u, grad_u) + g.l2_inner(tension, tension)


def quantity_Ys(state: FieldState, s: float) -> float:
    """Y_s = ||L^s u||^2 + ||grad (L^s d)||^2 with L = (1 - Lap)^(1/2)."""
    g = state.grid
    yu = g.sobolev_norm(state.u, s) ** 2
    filt_d = g.sobolev_filter(state.d, s)
    grad_fd = g.gradient(filt_d)
    return yu + g.l2_inner(grad_fd, grad_fd)


class BlowupMonitorState:
    """Running sup-norm history and derived blow-up criterion quantities.

    Per update (one sampled state):
      sup_curl_u = sup |curl u|, sup_grad_d = sup |grad d| (Frobenius),
      B_integral = int_0^t (sup|curl u| + sup|grad d|^4)  (trapezoid),
      G_bracket  = 1 + sup|curl u| + sup|grad d|^2
                     + (mu5+mu6)^2 sup|grad d|^(8/3) + mu1 sup|grad d|^4,
      Y3, A_qty as above, and
      logsob_ratio = sup|grad u| /
                     (1 + ||curl u||_L2 + sup|curl u| ln(e + ||u||_H3)).
    """

    def __init__(self):
        self.times: list[float] = []
        self.sup_curl_u: list[float] = []
        self.sup_grad_d: list[float] = []
        self.B_history: list[float] = []
        self.G_history: list[float] = []
        self.Y3_history: list[float] = []
        self.A_history: list[float] = []
        self.logsob_history: list[float] = []
        self.B_integral = 0.0

    def update(self, state: FieldState) -> "BlowupMonitorState":
        g = state.grid
        c = state.coeffs
        t = float(state.time)
        if self.times and not t > self.times[-1]:
            raise ParameterError(
                f"monitor updates need strictly increasing times, got {t} after {self.times[-1]}"
            )
        curl = g.curl(state.u)
        grad_u = g.gradient(state.u)
        grad_d = g.gradient(state.d)
        a = g.sup_norm(curl)
        b = g.sup_norm(grad_d)

        integrand = a + b ** 4
        if self.times:
            self.B_integral += 0.5 * (self._last_integrand + integrand) * (t - self.times[-1])
        self._last_integrand = integrand

        G = 1.0 + a + b ** 2 + (c.mu5 + c.mu6) ** 2 * b ** (8.0 / 3.0) + c.mu1 * b ** 4
        y3 = quantity_Ys(state, 3.0)
        _, gradW = penalty(state.d, c.epsilon)
        tension = g.laplacian(state.d) - g.dealias(gradW)
        a_qty = g.l2_inner(grad_u, grad_u) + g.l2_inner(tension, tension)
        h3 = g.sobolev_norm(state.u, 3.0)
        logsob = g.sup_norm(grad_u) / (1.0 + g.l2_norm(curl) + a * math.log(math.e + h3))

        self.times.append(t)
        self.sup_curl_u.append(a)
        self.sup_grad_d.append(b)
        self.B_history.append(self.B_integral)
        self.G_history.append(G)
        self.Y3_history.append(y3)
        self.A_history.append(a_qty)
        self.logsob_history.append(logsob)
        return self


def blowup_update(monitor: BlowupMonitorState, state: FieldState) -> BlowupMonitorState:
    """Functional-style wrapper around BlowupMonitorState.update."""
    return monitor.update(state)


# -- CSV output -----------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_timeseries(path, reports: list[EnergyReport], monitor: BlowupMonitorState) -> None:
    """One CSV row per sampled state; quantities are dimensionless code units.

    Column order is CSV_COLUMNS; a '# units:' comment line precedes the header
    so the header row itself stays machine-readable.
    """
    if len(reports) != len(monitor.times):
        raise ParameterError(
            f"report/monitor length mismatch: {len(reports)} vs {len(monitor.times)}"
        )
    lines = ["# units: all quantities dimensionless (unit box, unit density)"]
    lines.append(",".join(CSV_COLUMNS))
    for i, rep in enumerate(reports):
        row = (
            rep.time, rep.E_total, rep.E_kinetic, rep.E_elastic, rep.E_penalty,
            rep.D_mu1, rep.D_visc, rep.D_Ad, rep.D_N, rep.D_cross,
            rep.D_case1_director, rep.D_case1_Ad, rep.D_reg,
            rep.residual_general, rep.residual_case1,
            monitor.sup_curl_u[i], monitor.sup_grad_d[i], monitor.B_history[i],
            monitor.G_history[i], monitor.Y3_history[i], monitor.A_history[i],
            monitor.logsob_history[i],
        )
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
