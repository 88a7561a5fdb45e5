"""Max-min design search over energy weights, CE duration, and pilot power.

The problem is low-dimensional (K-1 continuous weights, one discrete slot
length, one continuous power), so the solver is multi-start coordinate
descent: golden-section line searches on each weight (re-projected to the
simplex) and on pilot power, and an exhaustive scan over the feasible CE
durations. Infeasible points score strictly below every feasible one, by an
amount growing with the energy-constraint violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytics import (estimation_snr_recip, gain_retention_bounds,
                        rate_from_sinr, sinr_lower_bounds)
from .scenario import carrier_power

_INFEASIBLE_BASE = -1e6
_PCE_FRACTION = 0.99  # cap alpha*p_ce at this fraction of w*T


class OptimizerError(ValueError):
    pass


@dataclass(frozen=True)
class DesignVariables:
    """One design point: simplex weights, CE duration (symbols), pilot power."""

    zeta: np.ndarray
    alpha: float
    p_ce: float


@dataclass(frozen=True)
class SolverParams:
    starts: int = 16
    tol: float = 1e-6
    max_outer: int = 40
    seed: int = 0
    presamples: int = 17


@dataclass(frozen=True)
class OptimizationResult:
    variables: DesignVariables
    objective: float
    per_tag_rates: np.ndarray
    per_tag_pe_lower: np.ndarray
    feasible: bool
    solver_trace: tuple = field(default=())


def _check_design(config, design):
    problems = []
    zeta = np.asarray(design.zeta, dtype=float)
    if zeta.shape != (config.K,):
        problems.append(f"zeta has shape {zeta.shape}, expected ({config.K},)")
        return problems
    if abs(zeta.sum() - 1.0) > 1e-9:
        problems.append(f"zeta sums to {zeta.sum():.6g}, not 1 (simplex violation)")
    if np.any(zeta < -1e-12) or np.any(zeta > 1 + 1e-12):
        problems.append("zeta entries outside [0,1]")
    if not 0 <= design.alpha < config.T:
        problems.append(f"alpha={design.alpha:g} outside [0, T={config.T:g})")
    a = int(round(design.alpha))
    if a != design.alpha or a % config.K != 0 or a // config.K < config.M:
        problems.append(
            f"alpha={design.alpha:g} must be an integer multiple of K={config.K} "
            f"with alpha/K >= M={config.M}")
    if design.p_ce < 0:
        problems.append(f"p_ce={design.p_ce:g} negative")
    if design.alpha * design.p_ce >= config.w * config.T:
        problems.append("alpha*p_ce exhausts the block energy budget")
    return problems


class _Evaluator:
    """Closed-form objective pieces at fixed config, estimator, receiver."""

    def __init__(self, config, stats, estimator, receiver=None):
        self.config = config
        self.beta = np.asarray(stats.beta, dtype=float)
        self.delta = np.asarray(config.delta, dtype=float)
        self.estimator = estimator
        self.receiver = receiver
        self.harvest_factor = config.eta * (1.0 - self.delta)

    def bounds(self, zeta, alpha, p_ce):
        cfg = self.config
        p = carrier_power(cfg.w, cfg.T, alpha, p_ce)
        c = estimation_snr_recip(self.estimator, self.beta, alpha, p_ce,
                                 self.delta, cfg.noise_power, cfg.K)
        lo, hi = gain_retention_bounds(c)
        P_lo = p * self.beta * (zeta * (cfg.M - 1) * lo + 1.0)
        P_hi = p * self.beta * (zeta * (cfg.M - 1) * hi + 1.0)
        return c, P_lo, P_hi

    def pe_lower(self, zeta, alpha, p_ce):
        _, P_lo, _ = self.bounds(zeta, alpha, p_ce)
        return self.harvest_factor * P_lo

    def rates(self, zeta, alpha, p_ce):
        cfg = self.config
        c, P_lo, P_hi = self.bounds(zeta, alpha, p_ce)
        err = self.beta ** 2 * c
        mrc, zf = sinr_lower_bounds(self.beta, self.delta, err, c, P_lo, P_hi,
                                    cfg.noise_power, cfg.tau, cfg.R, cfg.K)
        sinr = mrc if self.receiver == "mrc" else zf
        if sinr is None:
            raise OptimizerError(
                f"receiver {self.receiver!r} infeasible at R={cfg.R}, K={cfg.K}")
        return rate_from_sinr(sinr), self.harvest_factor * P_lo


def _score(values, pe_lower, rho):
    violation = np.maximum(0.0, rho - pe_lower) / max(rho, 1e-30)
    if violation.sum() > 0:
        return _INFEASIBLE_BASE * (1.0 + violation.sum())
    return float(values.min())


def _golden_max(f, lo, hi, tol, presamples):
    xs = np.linspace(lo, hi, presamples)
    vals = np.array([f(x) for x in xs])
    i = int(vals.argmax())
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, len(xs) - 1)]
    best_x, best_v = xs[i], vals[i]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        for x, v in ((c, fc), (d, fd)):
            if v > best_v:
                best_x, best_v = x, v
    return best_x, best_v


def _reweight(zeta, k, x):
    out = np.array(zeta, dtype=float)
    rest = 1.0 - out[k]
    if rest > 1e-15:
        out *= (1.0 - x) / rest
    else:
        out[:] = (1.0 - x) / max(len(out) - 1, 1)
    out[k] = x
    return np.clip(out, 0.0, 1.0) / max(np.clip(out, 0.0, 1.0).sum(), 1e-300)


def _alpha_candidates(config):
    top = int((config.T - 1) // config.K)
    if top < config.M:
        raise OptimizerError(
            f"no feasible CE duration: need K*M={config.K * config.M} symbols < T={config.T}")
    return [config.K * d for d in range(config.M, top + 1)]


def _pce_cap(config, alpha):
    return _PCE_FRACTION * config.w * config.T / alpha


def is_feasible(config, stats, design, estimator="ls"):
    """Check design invariants and the per-tag harvested-energy constraint.

    Returns (feasible, report) where report lists every violation.
    """
    problems = _check_design(config, design)
    if not problems:
        ev = _Evaluator(config, stats, estimator)
        pe = ev.pe_lower(np.asarray(design.zeta, dtype=float), design.alpha, design.p_ce)
        for k in range(config.K):
            if pe[k] < config.rho:
                problems.append(
                    f"tag {k + 1}: harvested-power lower bound {pe[k]:.3e} W "
                    f"< rho={config.rho:.3e} W")
    return (not problems), problems


def _coordinate_descent(score_at, config, zeta0, alpha0, pce0, optimize_ce, params):
    zeta = np.array(zeta0, dtype=float)
    alpha, p_ce = float(alpha0), float(pce0)
    best = score_at(zeta, alpha, p_ce)
    outer = 0
    for outer in range(1, params.max_outer + 1):
        prev = best
        if config.K > 1:
            for k in range(config.K):
                x, v = _golden_max(
                    lambda x: score_at(_reweight(zeta, k, x), alpha, p_ce),
                    0.0, 1.0, 1e-7, params.presamples)
                if v > best:
                    zeta = _reweight(zeta, k, x)
                    best = v
        if optimize_ce:
            for a in _alpha_candidates(config):
                pce_a = min(p_ce, _pce_cap(config, a))
                v = score_at(zeta, a, pce_a)
                if v > best:
                    alpha, p_ce, best = a, pce_a, v
            lo, hi = math.log(1e-6 * config.w), math.log(_pce_cap(config, alpha))
            x, v = _golden_max(lambda x: score_at(zeta, alpha, math.exp(x)),
                               lo, hi, 1e-9, params.presamples)
            if v > best:
                p_ce, best = math.exp(x), v
        if best - prev < params.tol:
            break
    return zeta, alpha, p_ce, best, outer


def _start_points(config, base_design, optimize_ce, params):
    K = config.K
    uniform = np.full(K, 1.0 / K)
    zetas = [uniform] + [np.eye(K)[k] for k in range(K)]
    rng = np.random.default_rng(params.seed)
    while len(zetas) < params.starts:
        zetas.append(rng.dirichlet(np.ones(K)))
    starts = [(z, base_design.alpha, base_design.p_ce) for z in zetas]
    if optimize_ce:
        cands = _alpha_candidates(config)
        extra = [(uniform, cands[0], min(config.w, _pce_cap(config, cands[0]))),
                 (uniform, cands[-1], 0.5 * _pce_cap(config, cands[-1]))]
        for _ in range(4):
            a = int(rng.choice(cands))
            cap = _pce_cap(config, a)
            pce = math.exp(rng.uniform(math.log(1e-4 * cap), math.log(cap)))
            extra.append((rng.dirichlet(np.ones(K)), a, pce))
        starts.extend(extra)
    return starts


def _solve(config, stats, evaluator, objective, base_design, optimize_ce, params):
    params = params or SolverParams()
    if config.K == 1:
        # simplex is a point; only the CE slot may move
        base_design = DesignVariables(zeta=np.ones(1), alpha=base_design.alpha,
                                      p_ce=base_design.p_ce)

    def score_at(zeta, alpha, p_ce):
        try:
            values, pe = objective(zeta, alpha, p_ce)
        except Exception:
            return 2.0 * _INFEASIBLE_BASE
        return _score(values, pe, config.rho)

    trace = []
    best = None
    for idx, (z0, a0, p0) in enumerate(_start_points(config, base_design,
                                                     optimize_ce, params)):
        zeta, alpha, p_ce, val, outer = _coordinate_descent(
            score_at, config, z0, a0, p0, optimize_ce, params)
        trace.append((idx, outer, val))
        if best is None or val > best[0]:
            best = (val, idx, zeta, alpha, p_ce)
    _, _, zeta, alpha, p_ce = best
    zeta = zeta / zeta.sum()
    design = DesignVariables(zeta=zeta, alpha=alpha, p_ce=p_ce)
    values, pe = objective(zeta, alpha, p_ce)
    feasible, _ = is_feasible(config, stats, design, evaluator.estimator)
    return design, values, pe, feasible, tuple(trace)


def solve_maxmin_rate(config, stats, receiver, estimator, base_design,
                      optimize_ce=False, params=None):
    """Maximize the minimum per-tag achievable-rate lower bound."""
    if receiver == "mrc" and config.R < 2:
        raise OptimizerError(f"MRC needs R >= 2, got R={config.R}")
    if receiver == "zf" and config.R < config.K + 1:
        raise OptimizerError(f"ZF needs R >= K+1, got R={config.R}, K={config.K}")
    ev = _Evaluator(config, stats, estimator, receiver)
    design, rates, pe, feasible, trace = _solve(
        config, stats, ev, ev.rates, base_design, optimize_ce, params or SolverParams())
    return OptimizationResult(variables=design, objective=float(rates.min()),
                              per_tag_rates=rates, per_tag_pe_lower=pe,
                              feasible=feasible, solver_trace=trace)


def solve_maxmin_energy(config, stats, estimator, base_design, receiver="mrc",
                        optimize_ce=False, params=None):
    """Maximize the minimum per-tag harvested-power lower bound.

    The result reports the per-tag rates induced at the energy-optimal design
    (for the given receiver) so the two designs can be compared directly.
    """
    ev = _Evaluator(config, stats, estimator, receiver)

    def objective(zeta, alpha, p_ce):
        pe = ev.pe_lower(zeta, alpha, p_ce)
        return pe, pe

    design, pe, _, feasible, trace = _solve(
        config, stats, ev, objective, base_design, optimize_ce, params or SolverParams())
    rates = None
    want_mrc = receiver == "mrc" and config.R >= 2
    want_zf = receiver == "zf" and config.R >= config.K + 1
    if want_mrc or want_zf:
        rates, _ = ev.rates(design.zeta, design.alpha, design.p_ce)
    return OptimizationResult(variables=design, objective=float(pe.min()),
                              per_tag_rates=rates, per_tag_pe_lower=pe,
                              feasible=feasible, solver_trace=trace)


def solve_maxmin_perfect(config, stats, receiver, params=None):
    """Max-min rate with genie CSI; only the weights are free (no CE slot)."""
    from .analytics import benchmark_perfect_csi

    params = params or SolverParams()
    harvest = config.eta * (1.0 - np.asarray(config.delta, dtype=float))

    def objective(zeta, alpha, p_ce):
        P, rate_mrc, rate_zf = benchmark_perfect_csi(config, stats, zeta)
        rates = rate_mrc if receiver == "mrc" else rate_zf
        if rates is None:
            raise OptimizerError(f"receiver {receiver!r} infeasible at R={config.R}")
        return rates, harvest * P

    ev = _Evaluator(config, stats, "ls", receiver)
    base = DesignVariables(zeta=np.full(config.K, 1.0 / config.K),
                           alpha=config.K * config.M, p_ce=config.w)
    design, rates, pe, _, trace = _solve(config, stats, ev, objective, base,
                                         optimize_ce=False, params=params)
    feasible = bool(np.all(pe >= config.rho))
    return OptimizationResult(variables=design, objective=float(rates.min()),
                              per_tag_rates=rates, per_tag_pe_lower=pe,
                              feasible=feasible, solver_trace=trace)
