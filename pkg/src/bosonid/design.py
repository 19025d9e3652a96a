"""Fisher information, A-optimal experiment design, and maximum-likelihood unitary fitting."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
import scipy.optimize

from .errors import InputError, NumericalError
from .hidden_dof import restricted_distribution
from .linopt import (
    coeffs_from_unitary,
    gellmann_basis,
    unitary_completion,
    unitary_from_coeffs,
)

PROB_FLOOR = 1e-300


# ---------------------------------------------------------------- Fisher information


def fisher_information(jacobian: np.ndarray, probs: Sequence[float], tol: float = 1e-14) -> np.ndarray:
    """``F = J^T diag(1/p) J`` for one draw from a categorical model."""
    j = np.atleast_2d(np.asarray(jacobian, dtype=np.float64))
    p = np.asarray(probs, dtype=np.float64)
    if j.shape[0] != p.size:
        raise InputError(f"jacobian has {j.shape[0]} rows, distribution has {p.size} outcomes")
    zero = p <= tol
    if np.any(np.abs(j[zero]).max(axis=1, initial=0.0) > tol if zero.any() else False):
        raise InputError("an outcome of zero probability has nonzero sensitivity")
    keep = ~zero
    jk = j[keep]
    return jk.T @ (jk / p[keep][:, None])


def project_inferable(jacobians: Sequence[np.ndarray], rtol: float = 1e-6) -> tuple[np.ndarray, list[np.ndarray]]:
    """Basis of the parameter directions seen by at least one setting.

    Returns ``B`` with orthonormal columns spanning the orthogonal complement
    of the joint kernel of all Jacobians, and each Jacobian times ``B``.
    """
    if not jacobians:
        raise InputError("need at least one setting")
    stacked = np.vstack([np.atleast_2d(j) for j in jacobians])
    _, s, vt = np.linalg.svd(stacked, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise InputError("every Jacobian is zero")
    rank = int(np.sum(s > rtol * s[0]))
    basis = vt[:rank].T
    return basis, [np.atleast_2d(j) @ basis for j in jacobians]


def pooled_fisher(fishers: Sequence[np.ndarray], q: Sequence[float]) -> np.ndarray:
    return np.tensordot(np.asarray(q, dtype=np.float64), np.asarray(fishers), axes=(0, 0))


def _cost_and_grad(fishers: np.ndarray, w: np.ndarray, q: np.ndarray):
    f = pooled_fisher(fishers, q)
    try:
        finv = np.linalg.inv(f)
    except np.linalg.LinAlgError:
        return np.inf, None
    cost = float(np.trace(w @ finv))
    mid = finv @ w @ finv
    grad = -np.einsum("sij,ji->s", fishers, mid)
    return cost, grad


def design_cost(fishers: Sequence[np.ndarray], q: Sequence[float], costs: Sequence[float]) -> float:
    """``sum_r Y_r^2 [F(q)^-1]_rr``."""
    fishers = np.asarray(fishers)
    w = np.diag(np.asarray(costs, dtype=np.float64) ** 2)
    return _cost_and_grad(fishers, w, np.asarray(q, dtype=np.float64))[0]


@dataclass
class DesignResult:
    q: np.ndarray
    cost: float
    iterations: int
    converged: bool
    estimators: Optional[list[np.ndarray]] = None
    history: list[float] = field(default_factory=list)


def _check_fishers(fishers, costs):
    fishers = np.asarray(fishers, dtype=np.float64)
    if fishers.ndim != 3 or fishers.shape[1] != fishers.shape[2]:
        raise InputError("expected a stack of square Fisher matrices")
    y = np.asarray(costs, dtype=np.float64)
    if y.size != fishers.shape[1] or np.any(y < 0):
        raise InputError("need one nonnegative cost per parameter")
    total = fishers.sum(axis=0)
    eig = np.linalg.eigvalsh((total + total.T) / 2)
    if eig[0] <= 1e-12 * max(eig[-1], 1e-300):
        raise InputError("infeasible design: pooled Fisher information is singular")
    return fishers, y


def a_optimal_direct(
    fishers: Sequence[np.ndarray],
    costs: Sequence[float],
    rtol: float = 1e-8,
    max_iter: int = 2000,
) -> DesignResult:
    """Minimize ``Tr(diag(Y^2) F(q)^-1)`` over the simplex.

    Entropic mirror descent from the uniform point finds the active face,
    and a sequential quadratic programming pass polishes the optimum.
    """
    fishers, y = _check_fishers(fishers, costs)
    w = np.diag(y**2)
    n_set = fishers.shape[0]
    q = np.full(n_set, 1.0 / n_set)
    cost, grad = _cost_and_grad(fishers, w, q)
    history = [cost]
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        scale = np.max(np.abs(grad)) or 1.0
        while True:
            trial = q * np.exp(-step * grad / scale)
            trial /= trial.sum()
            new_cost, new_grad = _cost_and_grad(fishers, w, trial)
            if new_cost <= cost:
                break
            step /= 2
            if step < 1e-12:
                break
        if new_cost > cost or new_grad is None:
            break
        rel = (cost - new_cost) / cost
        q, cost, grad = trial, new_cost, new_grad
        history.append(cost)
        step = min(step * 1.5, 10.0)
        if rel < rtol * 1e-2:
            break
    if n_set > 1:
        res = scipy.optimize.minimize(
            lambda x: _safe_cost(fishers, w, x),
            q,
            jac=lambda x: _safe_grad(fishers, w, x),
            method="SLSQP",
            bounds=[(0.0, 1.0)] * n_set,
            constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1, "jac": lambda x: np.ones_like(x)}],
            options={"ftol": 1e-16, "maxiter": 500},
        )
        cand = np.clip(res.x, 0, None)
        cand /= cand.sum()
        cand_cost = _cost_and_grad(fishers, w, cand)[0]
        if cand_cost < cost:
            q, cost = cand, cand_cost
            history.append(cost)
    converged = len(history) < 2 or abs(history[-2] - history[-1]) <= rtol * history[-1] * 10
    return DesignResult(q, cost, it, bool(converged), history=history)


def _safe_cost(fishers, w, x):
    x = np.clip(x, 0, None)
    c, _ = _cost_and_grad(fishers, w, x / max(x.sum(), 1e-300))
    return c if np.isfinite(c) else 1e300


def _safe_grad(fishers, w, x):
    x = np.clip(x, 1e-300, None)
    _, g = _cost_and_grad(fishers, w, x)
    return g if g is not None else np.zeros_like(x)


def estimator_bank(
    jacobians: Sequence[np.ndarray], probs: Sequence[Sequence[float]], q: Sequence[float]
) -> list[np.ndarray]:
    """Locally unbiased linear estimators ``C_s = q_s diag(1/p_s) T_s F(q)^-1``.

    Column ``r`` of ``C_s`` holds ``C_s^(r)`` over the outcomes of setting ``s``.
    """
    q = np.asarray(q, dtype=np.float64)
    fishers = [fisher_information(t, p) for t, p in zip(jacobians, probs)]
    finv = np.linalg.inv(pooled_fisher(fishers, q))
    bank = []
    for qs, t, p in zip(q, jacobians, probs):
        p = np.asarray(p, dtype=np.float64)
        c = np.zeros((p.size, finv.shape[0]))
        if qs > 0:
            live = p > 0
            c[live] = qs * (np.asarray(t)[live] / p[live][:, None]) @ finv
        bank.append(c)
    return bank


def a_optimal_socp(
    jacobians: Sequence[np.ndarray],
    probs: Sequence[Sequence[float]],
    costs: Sequence[float],
    rtol: float = 1e-12,
    max_iter: int = 200000,
) -> DesignResult:
    """Cone form of the A-optimal design, solved by alternating minimization.

    For fixed weights the least-norm locally unbiased estimators are closed
    form; for fixed estimators the cone radii are
    ``D_s = ||Sigma_s^(1/2) (Y_r C_s^(r))_r||`` and the weights are
    ``q_s = D_s / sum D``. The cost is ``(sum_s D_s)^2``.
    """
    jac = [np.atleast_2d(np.asarray(t, dtype=np.float64)) for t in jacobians]
    pr = [np.asarray(p, dtype=np.float64) for p in probs]
    fishers = np.array([fisher_information(t, p) for t, p in zip(jac, pr)])
    fishers, y = _check_fishers(fishers, costs)
    sqrt_cov = [_sqrt_multinomial_cov(p) for p in pr]
    n_set = len(jac)
    q = np.full(n_set, 1.0 / n_set)
    history: list[float] = []
    converged = False
    it = 0
    bank: list[np.ndarray] = []
    for it in range(1, max_iter + 1):
        bank = estimator_bank(jac, pr, q)
        d = np.array([np.linalg.norm(sc @ (c * y[None, :])) for sc, c in zip(sqrt_cov, bank)])
        total = d.sum()
        history.append(total**2)
        new_q = d / total
        if len(history) > 1 and abs(history[-2] - history[-1]) <= rtol * history[-1] and np.max(np.abs(new_q - q)) < 1e-9:
            converged = True
            q = new_q
            break
        q = new_q
    bank = estimator_bank(jac, pr, q)
    d = np.array([np.linalg.norm(sc @ (c * y[None, :])) for sc, c in zip(sqrt_cov, bank)])
    return DesignResult(q, float(d.sum() ** 2), it, converged, estimators=bank, history=history)


def _sqrt_multinomial_cov(p: np.ndarray) -> np.ndarray:
    cov = np.diag(p) - np.outer(p, p)
    w, v = np.linalg.eigh(cov)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.T


def shot_allocation(q: Sequence[float], n_shots: int) -> list[int]:
    """Integer shots per setting summing to ``n_shots``.

    Each setting gets ``floor(q_s N)``; the leftover shots go to the largest
    fractional parts, ties broken by lowest setting index.
    """
    q = np.asarray(q, dtype=np.float64)
    if np.any(q < -1e-12) or abs(q.sum() - 1) > 1e-8:
        raise InputError("weights must lie on the probability simplex")
    raw = np.clip(q, 0, None) * n_shots
    base = np.floor(raw + 1e-9).astype(int)
    frac = raw - base
    left = n_shots - int(base.sum())
    order = sorted(range(q.size), key=lambda s: (-round(frac[s], 12), s))
    for s in order[:max(left, 0)]:
        base[s] += 1
    return [int(b) for b in base]


# ---------------------------------------------------------------- outcome models for one- and two-particle data


OTHER = "other"
Label = Union[tuple, str]


@dataclass
class TwoParticleModel:
    """Submatrix ``M`` (outputs S by inputs I), loss and pair indistinguishability."""

    submatrix: np.ndarray
    p_loss: float
    indist: float

    def __post_init__(self):
        self.submatrix = np.asarray(self.submatrix, dtype=np.complex128)
        if not 0 <= self.p_loss <= 1:
            raise InputError("loss probability must lie in [0, 1]")
        if not 0 <= self.indist <= 1:
            raise InputError("indistinguishability must lie in [0, 1]")
        m = self.submatrix
        gap = np.linalg.eigvalsh(np.eye(m.shape[1]) - m.conj().T @ m)[0]
        if gap < -1e-9:
            raise InputError("I - M^dag M is not PSD")


def outcome_labels(n_out: int, setting: Sequence[int]) -> list[Label]:
    """Outcome order used by :func:`two_particle_model_probs`."""
    sites = range(1, n_out + 1)
    if len(setting) == 1:
        return [(s,) for s in sites] + [OTHER, ()]
    if len(setting) == 2:
        return [p for p in itertools.combinations(sites, 2)] + [(s,) for s in sites] + [OTHER]
    raise InputError("settings prepare one or two particles")


def _probs_array(m: np.ndarray, p_loss: float, indist: float, setting: Sequence[int]) -> np.ndarray:
    live = 1 - p_loss
    if len(setting) == 1:
        col = m[:, setting[0] - 1]
        inside = live * np.abs(col) ** 2
        return np.concatenate([inside, [live - inside.sum(), p_loss]])
    i, j = (s - 1 for s in setting)
    a2, b2 = np.abs(m[:, i]) ** 2, np.abs(m[:, j]) ** 2
    out_pairs = []
    for s, t in itertools.combinations(range(m.shape[0]), 2):
        partial = a2[s] * b2[t] + b2[s] * a2[t]
        partial += 2 * indist * (m[s, i] * m[t, j] * np.conj(m[s, j]) * np.conj(m[t, i])).real
        out_pairs.append(live**2 * partial)
    singles = p_loss * live * (a2 + b2)
    body = np.concatenate([out_pairs, singles])
    return np.concatenate([body, [1 - body.sum()]])


def two_particle_model_probs(model: TwoParticleModel, setting: Sequence[int]) -> dict[Label, float]:
    """Outcome distribution for one or two prepared inputs (1-based columns of ``M``)."""
    m = model.submatrix
    for s in setting:
        if not 1 <= s <= m.shape[1]:
            raise InputError(f"input {s} outside 1..{m.shape[1]}")
    if len(set(setting)) != len(setting):
        raise InputError("inputs must be distinct")
    p = _probs_array(m, model.p_loss, model.indist, setting)
    if p.min() < -1e-10 or p.max() > 1 + 1e-10:
        raise NumericalError("model probability outside [0, 1]")
    return dict(zip(outcome_labels(m.shape[0], setting), p.tolist()))


def default_settings(n_in: int) -> list[tuple[int, ...]]:
    """Every single input followed by every pair of inputs."""
    return [(a,) for a in range(1, n_in + 1)] + list(itertools.combinations(range(1, n_in + 1), 2))


def max_tvd(model_a: TwoParticleModel, model_b: TwoParticleModel, settings: Sequence[Sequence[int]]) -> float:
    """Largest total variation distance over settings.

    ``(1 + d) / 2`` is the best achievable probability of telling the two
    models apart from a single shot of the worst-case setting.
    """
    if model_a.submatrix.shape != model_b.submatrix.shape:
        raise InputError("models have different outcome spaces")
    best = 0.0
    for s in settings:
        pa = _probs_array(model_a.submatrix, model_a.p_loss, model_a.indist, s)
        pb = _probs_array(model_b.submatrix, model_b.p_loss, model_b.indist, s)
        best = max(best, 0.5 * float(np.abs(pa - pb).sum()))
    return best


def sample_dataset(
    model: TwoParticleModel, settings: Sequence[Sequence[int]], shots: int, rng: np.random.Generator
) -> list[tuple[tuple[int, ...], dict[Label, int]]]:
    out = []
    for s in settings:
        probs = two_particle_model_probs(model, s)
        p = np.clip(np.array(list(probs.values())), 0, None)
        counts = rng.multinomial(shots, p / p.sum())
        out.append((tuple(s), {k: int(c) for k, c in zip(probs, counts)}))
    return out


# ---------------------------------------------------------------- maximum likelihood


def gauge_fix(m: np.ndarray) -> np.ndarray:
    """Rephase rows and columns so column 1 and row 1 are real and nonnegative."""
    m = np.asarray(m, dtype=np.complex128)
    col = m[:, 0]
    row_phase = np.where(np.abs(col) > 0, np.conj(col) / np.where(np.abs(col) > 0, np.abs(col), 1), 1)
    m = row_phase[:, None] * m
    row = m[0, :]
    col_phase = np.where(np.abs(row) > 0, np.conj(row) / np.where(np.abs(row) > 0, np.abs(row), 1), 1)
    return m * col_phase[None, :]


@dataclass
class FitResult:
    model: TwoParticleModel
    coeffs: np.ndarray
    log_likelihood: float
    converged: bool
    trace: list[float]
    p_loss_sigma: float
    message: str = ""


def _normalize_counts(n_out: int, setting, counts: Mapping[Label, int]) -> np.ndarray:
    labels = outcome_labels(n_out, setting)
    index = {lab: k for k, lab in enumerate(labels)}
    vec = np.zeros(len(labels))
    for lab, c in counts.items():
        if c < 0:
            raise InputError("negative count")
        key = tuple(lab) if isinstance(lab, (list, tuple)) else lab
        if len(setting) == 2 and key == ():
            key = OTHER  # nothing detected: both lost or a pair erased on one site
        if key not in index:
            raise InputError(f"outcome {lab!r} is not valid for setting {tuple(setting)}")
        vec[index[key]] += c
    return vec


def loss_from_singles(data, n_out: int) -> tuple[float, float]:
    """Pooled empty-outcome frequency of the single-particle settings, with its binomial std."""
    empty = total = 0.0
    for setting, counts in data:
        if len(setting) == 1:
            vec = _normalize_counts(n_out, setting, counts)
            empty += vec[-1]
            total += vec.sum()
    if total == 0:
        raise InputError("dataset has no single-particle counts")
    p = empty / total
    return p, float(np.sqrt(p * (1 - p) / total))


def _loglik_and_grad_m(m, p_loss, indist, prepared):
    """Log-likelihood and its Wirtinger derivative ``dL/d conj(M)``."""
    live = 1 - p_loss
    total = 0.0
    g = np.zeros_like(m)
    for setting, vec in prepared:
        p = _probs_array(m, p_loss, indist, setting)
        pf = np.maximum(p, PROB_FLOOR)
        total += float(vec @ np.log(pf))
        w = np.where(p > PROB_FLOOR, vec / pf, 0.0)
        if len(setting) == 1:
            c = setting[0] - 1
            # p_s = live |M_sc|^2, the outside event is live - sum; d|z|^2/d conj z = z
            g[:, c] += (w[:-2] - w[-2]) * live * m[:, c]
            continue
        w_rest = w[-1]
        i, j = (s - 1 for s in setting)
        k = 0
        for s, t in itertools.combinations(range(m.shape[0]), 2):
            coef = (w[k] - w_rest) * live**2
            a, b, cc, d = m[s, i], m[t, j], m[s, j], m[t, i]
            g[s, i] += coef * (a * abs(b) ** 2 + indist * np.conj(b) * cc * d)
            g[t, j] += coef * (b * abs(a) ** 2 + indist * np.conj(a) * cc * d)
            g[s, j] += coef * (cc * abs(d) ** 2 + indist * a * b * np.conj(d))
            g[t, i] += coef * (d * abs(cc) ** 2 + indist * a * b * np.conj(cc))
            k += 1
        n_out = m.shape[0]
        coef = (w[k : k + n_out] - w_rest) * p_loss * live
        g[:, i] += coef * m[:, i]
        g[:, j] += coef * m[:, j]
    return total, g


def _exp_derivative(coeffs, basis):
    h = np.tensordot(coeffs, basis, axes=(0, 0))
    phi, q = np.linalg.eigh((h + h.conj().T) / 2)
    e = np.exp(1j * phi)
    diff = phi[:, None] - phi[None, :]
    same = np.abs(diff) < 1e-12
    gamma = np.where(same, 1j * e[:, None], (e[:, None] - e[None, :]) / np.where(same, 1, diff))
    v = (q * e) @ q.conj().T
    return v, q, gamma


def log_likelihood_and_grad(coeffs, shape, p_loss, indist, prepared, basis):
    """Log-likelihood over Gell-Mann coefficients and its exact gradient."""
    v, q, gamma = _exp_derivative(coeffs, basis)
    r, c = shape
    ll, g = _loglik_and_grad_m(v[:r, :c], p_loss, indist, prepared)
    big = np.zeros_like(v)
    big[:r, :c] = g
    e = q @ (np.conj(gamma) * (q.conj().T @ big @ q)) @ q.conj().T
    grad = 2 * np.real(np.einsum("ij,kij->k", np.conj(e), basis))
    return ll, grad


def mle_fit(
    data: Sequence[tuple[Sequence[int], Mapping[Label, int]]],
    init: np.ndarray,
    indist: float,
    max_iter: int = 2000,
    gtol: float = 1e-9,
    restarts: int = 0,
    spread: float = 1.0,
    seed: Optional[int] = None,
) -> FitResult:
    """Two-stage maximum-likelihood fit of the submatrix.

    Stage one sets the loss to the pooled empty frequency of the
    single-particle settings. Stage two maximizes the likelihood over the
    Gell-Mann coefficients of a unitary whose top-left block is ``M``,
    starting from the completion of ``init``. The likelihood is not concave,
    so ``restarts`` extra starts with coefficients perturbed by
    ``N(0, spread^2)`` can be added; the best local optimum is kept.
    """
    init = np.asarray(init, dtype=np.complex128)
    n_out, n_in = init.shape
    if not any(len(s) == 2 for s, _ in data):
        raise InputError("dataset needs at least one two-particle setting")
    p_loss, p_sigma = loss_from_singles(data, n_out)
    prepared = [(tuple(s), _normalize_counts(n_out, s, c)) for s, c in data]
    n_total = sum(v.sum() for _, v in prepared)
    dim = n_out + n_in
    basis = np.array(gellmann_basis(dim))
    c0 = coeffs_from_unitary(unitary_completion(init))

    def objective(c):
        ll, grad = log_likelihood_and_grad(c, (n_out, n_in), p_loss, indist, prepared, basis)
        if not np.isfinite(ll):
            raise NumericalError("non-finite log-likelihood")
        return -ll / n_total, -grad / n_total

    if restarts and seed is None:
        raise InputError("restarts need an explicit seed")
    rng = np.random.default_rng(seed)
    starts = [c0] + [c0 + spread * rng.standard_normal(c0.size) for _ in range(restarts)]
    res, trace = None, []
    for start in starts:
        run_trace: list[float] = []

        def record(c, run_trace=run_trace):
            run_trace.append(-objective(c)[0] * n_total)

        run_trace.append(-objective(start)[0] * n_total)
        run = scipy.optimize.minimize(
            objective, start, jac=True, method="L-BFGS-B", callback=record,
            options={"maxiter": max_iter, "gtol": gtol, "ftol": 1e-15, "maxcor": 30},
        )
        if res is None or run.fun < res.fun:
            res, trace = run, run_trace
    v = unitary_from_coeffs(res.x)
    m = gauge_fix(v[:n_out, :n_in])
    model = TwoParticleModel(m, p_loss, indist)
    ll = -res.fun * n_total
    return FitResult(model, res.x, float(ll), bool(res.success), trace, p_sigma, str(res.message))


# ---------------------------------------------------------------- boson-sampler design instance


@dataclass
class BosonDesign:
    settings: list[tuple[int, ...]]
    jacobians: list[np.ndarray]
    probs: list[np.ndarray]
    basis: np.ndarray
    projected: list[np.ndarray]

    @property
    def n_inferable(self) -> int:
        return self.basis.shape[1]


def restricted_setting_probs(v: np.ndarray, n_out: int, setting: Sequence[int], x: float) -> np.ndarray:
    cols = [s - 1 for s in setting]
    return restricted_distribution(v[:n_out, cols], x)[1]


def boson_design(reference: np.ndarray, x: float, step: float = 1e-6, rtol: float = 1e-6) -> BosonDesign:
    """Design problem for inferring ``M`` from every nonempty subset of prepared inputs.

    Outcomes are the occupation patterns on the output sites under the
    thermal restricted model; the Jacobian over the Gell-Mann coefficients
    of the completed unitary is taken by central differences.
    """
    reference = np.asarray(reference, dtype=np.complex128)
    n_out, n_in = reference.shape
    settings = [s for size in range(1, n_in + 1) for s in itertools.combinations(range(1, n_in + 1), size)]
    c0 = coeffs_from_unitary(unitary_completion(reference))
    v0 = unitary_from_coeffs(c0)
    probs = [restricted_setting_probs(v0, n_out, s, x) for s in settings]
    jacs = [np.empty((p.size, c0.size)) for p in probs]
    for r in range(c0.size):
        dc = np.zeros_like(c0)
        dc[r] = step
        vp, vm = unitary_from_coeffs(c0 + dc), unitary_from_coeffs(c0 - dc)
        for k, s in enumerate(settings):
            jacs[k][:, r] = (
                restricted_setting_probs(vp, n_out, s, x) - restricted_setting_probs(vm, n_out, s, x)
            ) / (2 * step)
    basis, projected = project_inferable(jacs, rtol)
    return BosonDesign(settings, jacs, probs, basis, projected)
