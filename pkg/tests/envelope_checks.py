"""Randomized checks of the envelope and smoothed-step properties.

Each ``check_*`` runs ``trials`` random cases for one term and returns the
worst violation (<= 0 means every case held). Shared by the unit tests and
the acceptance suite.
"""

import numpy as np

from ipds_admm.linblock import mat, vec
from ipds_admm.moreau import (
    MoreauEnvelope,
    envelope_gradient,
    envelope_mu_gap,
    envelope_value,
    smoothed_prox_step,
)
from ipds_admm.terms import group_l21, l1

EXACT_TOL = 1e-10

ROWS, COLS = 3, 2


def catalog():
    """The convex terms exercised by the suite, with a closed-form envelope gradient each."""
    out = []
    for rho in (1.0, 100.0):
        out.append((f"l1(rho={rho:g})", l1(rho, 5), _huber_grad_l1(rho), 5))
        out.append((f"l21(rho={rho:g})", group_l21(rho, ROWS, COLS), _huber_grad_l21(rho), ROWS * COLS))
    return out


def _huber_grad_l1(rho):
    return lambda u, mu: np.clip(u / mu, -rho, rho)


def _huber_grad_l21(rho):
    def grad(u, mu):
        U = mat(u, ROWS, COLS)
        n = np.linalg.norm(U, axis=1, keepdims=True)
        return vec(U / np.maximum(mu, n / rho))

    return grad


def _sample(rng, dim, rho):
    # mix points inside and outside the flat region of the envelope
    scale = rng.choice([1e-3, 1e-1, 1.0, 10.0]) * max(rho, 1.0) * rng.choice([1e-3, 1.0])
    return scale * rng.standard_normal(dim)


def _mu(rng):
    return 10.0 ** rng.uniform(-4, 1)


def _rel(a, b):
    return float(np.linalg.norm(a - b)) / max(1.0, float(np.linalg.norm(b)))


def check_lipschitz_envelope(h, dim, rho, rng, trials):
    """Envelope is C_h-Lipschitz and its gradient norm is at most C_h."""
    worst = -np.inf
    ch = h.lipschitz_const
    for _ in range(trials):
        mu = _mu(rng)
        env = MoreauEnvelope(h, mu)
        u, v = _sample(rng, dim, rho), _sample(rng, dim, rho)
        worst = max(worst, float(np.linalg.norm(envelope_gradient(env, u))) - ch * (1 + EXACT_TOL))
        gap = abs(envelope_value(env, u) - envelope_value(env, v))
        worst = max(worst, gap - ch * float(np.linalg.norm(u - v)) * (1 + 1e-9) - 1e-9)
    return worst


def check_gradient_formula(h, closed_grad, dim, rho, rng, trials):
    """Gradient equals (u - prox)/mu (closed form match) and is (1/mu)-Lipschitz."""
    worst = -np.inf
    for _ in range(trials):
        mu = _mu(rng)
        env = MoreauEnvelope(h, mu)
        u, v = _sample(rng, dim, rho), _sample(rng, dim, rho)
        gu = envelope_gradient(env, u)
        worst = max(worst, _rel(gu, closed_grad(u, mu)) - EXACT_TOL)
        lip = float(np.linalg.norm(gu - envelope_gradient(env, v))) - float(np.linalg.norm(u - v)) / mu
        worst = max(worst, lip / max(1.0, float(np.linalg.norm(u - v)) / mu) - EXACT_TOL)
    return worst


def check_sandwich(h, dim, rho, rng, trials):
    """0 <= h(u) - h(u; mu) <= mu C_h^2 / 2."""
    worst = -np.inf
    ch = h.lipschitz_const
    for _ in range(trials):
        mu = _mu(rng)
        u = _sample(rng, dim, rho)
        d = h.value(u) - envelope_value(MoreauEnvelope(h, mu), u)
        slack = EXACT_TOL * max(1.0, abs(h.value(u)))
        worst = max(worst, -d - slack, d - 0.5 * mu * ch * ch - slack)
    return worst


def check_mu_gap(h, dim, rho, rng, trials):
    """The envelope grows as mu shrinks, at a rate in [0, C_h^2 / 2]."""
    worst = -np.inf
    ch = h.lipschitz_const
    for _ in range(trials):
        mu1 = _mu(rng)
        mu2 = mu1 * rng.uniform(0.01, 0.99)
        u = _sample(rng, dim, rho)
        g = envelope_mu_gap(MoreauEnvelope(h, mu1), u, mu1, mu2)
        scale = max(1.0, abs(h.value(u))) / (mu1 - mu2)
        worst = max(worst, -g - EXACT_TOL * scale, g - 0.5 * ch * ch - EXACT_TOL * scale)
    return worst


def check_gradient_mu_continuity(h, dim, rho, rng, trials):
    """||grad h(u; mu1) - grad h(u; mu2)|| <= (mu1/mu2 - 1) C_h."""
    worst = -np.inf
    ch = h.lipschitz_const
    for _ in range(trials):
        mu1 = _mu(rng)
        mu2 = mu1 * rng.uniform(0.01, 0.99)
        u = _sample(rng, dim, rho)
        d = float(np.linalg.norm(envelope_gradient(MoreauEnvelope(h, mu1), u) - envelope_gradient(MoreauEnvelope(h, mu2), u)))
        worst = max(worst, d - (mu1 / mu2 - 1.0) * ch * (1 + EXACT_TOL) - EXACT_TOL)
    return worst


def _subgradient_gap(h, point, cert, rng, dim, rho, samples=20):
    worst = -np.inf
    hp = h.value(point)
    for _ in range(samples):
        y = point + _sample(rng, dim, rho)
        gap = hp + float(cert @ (y - point)) - h.value(y)
        worst = max(worst, gap - EXACT_TOL * max(1.0, abs(h.value(y)), abs(hp)))
    return worst


def check_smoothed_step(h, closed_grad, dim, rho_h, rng, trials):
    """x_bar solves the smoothed subproblem, the certificate lies in dh(x_breve), and ||x_bar - x_breve|| <= mu C_h."""
    worst = -np.inf
    ch = h.lipschitz_const
    for _ in range(trials):
        mu = _mu(rng)
        rho = 10.0 ** rng.uniform(-2, 3)
        c = _sample(rng, dim, rho_h)
        res = smoothed_prox_step(MoreauEnvelope(h, mu), c, rho)
        # stationarity of h(.; mu) + (rho/2)||. - c||^2 at x_bar
        station = closed_grad(res.x_bar, mu) + rho * (res.x_bar - c)
        worst = max(worst, float(np.linalg.norm(station)) / max(1.0, rho * float(np.linalg.norm(c))) - EXACT_TOL)
        worst = max(worst, _rel(res.subgrad_certificate, rho * (c - res.x_bar)) - EXACT_TOL)
        worst = max(worst, _subgradient_gap(h, res.x_breve, res.subgrad_certificate, rng, dim, rho_h))
        gap = float(np.linalg.norm(res.x_bar - res.x_breve))
        worst = max(worst, gap - mu * ch * (1 + EXACT_TOL) - 1e-14)
    return worst


CHECKS = {
    "envelope is C_h-Lipschitz": lambda h, g, d, r, rng, n: check_lipschitz_envelope(h, d, r, rng, n),
    "gradient formula and 1/mu smoothness": lambda h, g, d, r, rng, n: check_gradient_formula(h, g, d, r, rng, n),
    "value sandwich": lambda h, g, d, r, rng, n: check_sandwich(h, d, r, rng, n),
    "mu gap in [0, C_h^2/2]": lambda h, g, d, r, rng, n: check_mu_gap(h, d, r, rng, n),
    "gradient mu-continuity": lambda h, g, d, r, rng, n: check_gradient_mu_continuity(h, d, r, rng, n),
    "smoothed step optimality/certificate/distance": lambda h, g, d, r, rng, n: check_smoothed_step(h, g, d, r, rng, n),
}


def run_suite(trials=200, seed=0):
    """Return ``{(check, term): worst violation}`` over the whole catalog."""
    out = {}
    for name, h, grad, dim in catalog():
        rho = 100.0 if "100" in name else 1.0
        for check, fn in CHECKS.items():
            rng = np.random.default_rng(seed)
            out[(check, name)] = fn(h, grad, dim, rho, rng, trials)
    return out
