"""White-box evasion attacks on a :class:`~igattack.nncore.Model`.

``ifpa`` and ``iua`` rank input points by integrated gradient and optimize
the logit-plus-distance objective with Adam on the selected points only.
``fgsm``, ``bim``, ``pgd``, ``deepfool`` and ``cw`` are the usual baselines.

Every attack is lenient about its precondition: an input the model already
misclassifies comes back as an immediate success with zero perturbation.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .attribution import integrated_gradient, mask_from_indices, sort_desc, top_index
from .nncore import Model, ShapeError, logit_jacobian, logits_and_vjp, loss_and_input_gradient
from .optimnorm import AdamState, ObjectiveConfig, adam_step, clip_box, lp_distance, prox_l1, L2_GUARD

KINDS = ("ifpa", "iua", "fgsm", "bim", "pgd", "deepfool", "cw")

# per-attack defaults; anything passed explicitly to AttackConfig.for_kind wins
DEFAULTS = {
    "ifpa": dict(eps=0.01, iters=100, points=5, objective=ObjectiveConfig(c=0.1, norm=2, lam=0.01)),
    "iua": dict(eps=0.01, iters=100, objective=ObjectiveConfig(c=0.1, norm=2, lam=0.01)),
    "fgsm": dict(eps=0.2, iters=1),
    "bim": dict(eps=0.2, iters=10),
    "pgd": dict(eps=0.2, iters=10),
    "deepfool": dict(eps=1.0, iters=1, overshoot=0.02, max_deepfool_iters=50),
    "cw": dict(eps=0.01, iters=200, kappa=0.0, objective=ObjectiveConfig(c=1.0, norm=2, lam=0.0)),
}


@dataclass(frozen=True, eq=False)
class AttackConfig:
    kind: str
    eps: float = 0.01
    iters: int = 100
    points: int = 5
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    ig_steps: int = 64
    baseline: np.ndarray | None = None  # None means the all-zero vector
    kappa: float = 0.0
    overshoot: float = 0.02
    max_deepfool_iters: int = 50
    step_size: float | None = None  # None: eps / iters for BIM, 2.5 * eps / iters for PGD
    random_start: bool = True  # PGD only
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown attack {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.eps < 0 or (self.eps == 0 and self.kind not in ("fgsm", "bim", "pgd")):
            raise ValueError("eps must be > 0")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.kind == "ifpa" and self.points < 1:
            raise ValueError("points must be >= 1")
        if self.ig_steps < 1:
            raise ValueError("ig_steps must be >= 1")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.overshoot < 0 or self.max_deepfool_iters < 1:
            raise ValueError("invalid DeepFool settings")

    @classmethod
    def for_kind(cls, kind: str, **overrides) -> "AttackConfig":
        if kind not in DEFAULTS:
            raise ValueError(f"unknown attack {kind!r}; choose from {', '.join(KINDS)}")
        params = dict(DEFAULTS[kind])
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(kind=kind, **params)

    def with_seed(self, seed: int) -> "AttackConfig":
        return replace(self, seed=int(seed))

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["objective"] = asdict(self.objective)
        rec["baseline"] = None if self.baseline is None else [float(v) for v in self.baseline]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "AttackConfig":
        rec = dict(rec)
        rec["objective"] = ObjectiveConfig(**rec["objective"])
        if rec.get("baseline") is not None:
            rec["baseline"] = np.asarray(rec["baseline"], dtype=np.float64)
        return cls(**rec)


@dataclass(frozen=True, eq=False)
class AttackOutcome:
    success: bool
    x_adv: np.ndarray
    adv_class: int
    l0: float
    l1: float
    l2: float
    iterations_used: int
    points_used: int = 0

    def to_record(self) -> dict:
        return {
            "success": bool(self.success),
            "adv_class": int(self.adv_class),
            "l0": float(self.l0),
            "l1": float(self.l1),
            "l2": float(self.l2),
            "iterations_used": int(self.iterations_used),
            "points_used": int(self.points_used),
            "x_adv": [float(v) for v in self.x_adv],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "AttackOutcome":
        return cls(
            success=bool(rec["success"]),
            x_adv=np.asarray(rec["x_adv"], dtype=np.float64),
            adv_class=int(rec["adv_class"]),
            l0=float(rec["l0"]),
            l1=float(rec["l1"]),
            l2=float(rec["l2"]),
            iterations_used=int(rec["iterations_used"]),
            points_used=int(rec["points_used"]),
        )


def _outcome(model: Model, x, y, x_adv, iterations: int, points: int = 0, adv_class=None) -> AttackOutcome:
    if adv_class is None:
        adv_class = int(np.argmax(logits_and_vjp(model, x_adv, np.zeros(model.num_classes))[0]))
    return AttackOutcome(
        success=adv_class != y,
        x_adv=x_adv,
        adv_class=adv_class,
        l0=lp_distance(x, x_adv, 0),
        l1=lp_distance(x, x_adv, 1),
        l2=lp_distance(x, x_adv, 2),
        iterations_used=iterations,
        points_used=points,
    )


def _prepare(model: Model, x, y):
    x = np.array(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.input_dim:
        raise ShapeError(f"expected a length-{model.input_dim} sample, got shape {x.shape}")
    y = int(y)
    if not 0 <= y < model.num_classes:
        raise ValueError(f"label {y} outside [0, {model.num_classes})")
    return x, y


def _already_fooled(model: Model, x, y) -> AttackOutcome | None:
    z = logits_and_vjp(model, x, np.zeros(model.num_classes))[0]
    pred = int(np.argmax(z))
    if pred != y:
        return _outcome(model, x, y, x.copy(), 0, 0, adv_class=pred)
    return None


def _logit_step(model: Model, x_adv, x, y, obj: ObjectiveConfig):
    """Logits at ``x_adv`` and the gradient of the attack objective there."""
    seed = np.zeros(model.num_classes)
    seed[y] = 1.0
    Z, grad = logits_and_vjp(model, x_adv, seed)
    if obj.norm == 2:
        diff = x_adv - x
        dist = float(np.sqrt(np.dot(diff, diff)))
        if dist >= L2_GUARD:
            grad = grad + obj.c * diff / dist
    return Z, grad


def _masked_update(x_adv, x, upd, active, obj: ObjectiveConfig, lr: float):
    x_new = np.where(active, x_adv - upd, x_adv)
    if obj.norm == 1:
        shrunk = x + prox_l1(x_new - x, obj.lam * obj.c * lr)
        x_new = np.where(active, shrunk, x_new)
    return x_new


def _baseline(cfg: AttackConfig, n: int) -> np.ndarray:
    if cfg.baseline is None:
        return np.zeros(n)
    b = np.asarray(cfg.baseline, dtype=np.float64)
    if b.shape != (n,):
        raise ShapeError(f"baseline length {b.shape} != {n}")
    return b


def ifpa(model: Model, x, y, cfg: AttackConfig) -> AttackOutcome:
    """Finite-point attack: perturb only the ``cfg.points`` top-attributed points."""
    x, y = _prepare(model, x, y)
    done = _already_fooled(model, x, y)
    if done is not None:
        return done
    n = x.shape[0]
    attr = integrated_gradient(model, x, _baseline(cfg, n), y, cfg.ig_steps)
    chosen = top_index(attr, cfg.points)
    active = mask_from_indices(chosen, n).astype(bool)
    return _ifpa_loop(model, x, y, cfg, active, len(chosen))


def _ifpa_loop(model, x, y, cfg, active, points):
    obj = cfg.objective
    state = AdamState.zeros(x.shape[0])
    x_adv = x.copy()
    for _ in range(cfg.iters):
        _, grad = _logit_step(model, x_adv, x, y, obj)
        if not np.all(np.isfinite(grad)):
            return _outcome(model, x, y, x.copy(), cfg.iters, points, adv_class=y)
        upd, state = adam_step(state, grad, cfg.eps)
        x_adv = _masked_update(x_adv, x, upd, active, obj, cfg.eps)
    x_adv = clip_box(x_adv, 0.0, 1.0)
    return _outcome(model, x, y, x_adv, cfg.iters, points)


def iua(model: Model, x, y, cfg: AttackConfig) -> AttackOutcome:
    """Universal attack: grow the perturbed set one ranked point per epoch until the label flips."""
    x, y = _prepare(model, x, y)
    done = _already_fooled(model, x, y)
    if done is not None:
        return done
    n = x.shape[0]
    obj = cfg.objective
    order = sort_desc(integrated_gradient(model, x, _baseline(cfg, n), y, cfg.ig_steps))
    active = np.zeros(n, dtype=bool)
    state = AdamState.zeros(n)
    x_adv = x.copy()
    steps = 0
    for k in range(1, n + 1):
        active[order[k - 1]] = True
        for i in range(cfg.iters):
            Z, grad = _logit_step(model, x_adv, x, y, obj)
            # success of the previous step; at an epoch boundary the new point is still untouched
            if steps and int(np.argmax(Z)) != y:
                return _outcome(model, x, y, x_adv, steps, k if i else k - 1, adv_class=int(np.argmax(Z)))
            if not np.all(np.isfinite(grad)):
                return _outcome(model, x, y, x.copy(), steps, k, adv_class=y)
            upd, state = adam_step(state, grad, cfg.eps)
            x_adv = clip_box(_masked_update(x_adv, x, upd, active, obj, cfg.eps), 0.0, 1.0)
            steps += 1
    return _outcome(model, x, y, x_adv, steps, n)


def fgsm(model: Model, x, y, cfg: AttackConfig) -> AttackOutcome:
    x, y = _prepare(model, x, y)
    done = _already_fooled(model, x, y)
    if done is not None:
        return done
    _, g = loss_and_input_gradient(model, x, y)
    x_adv = clip_box(x + cfg.eps * np.sign(g), 0.0, 1.0)
    return _outcome(model, x, y, x_adv, 1)


def _sign_iterations(model, x, y, cfg, start, step):
    lo = x - cfg.eps
    hi = x + cfg.eps
    x_adv = start
    for _ in range(cfg.iters):
        _, g = loss_and_input_gradient(model, x_adv, y)
        x_adv = clip_box(x_adv + step * np.sign(g), lo, hi)
        x_adv = clip_box(x_adv, 0.0, 1.0)
    return _outcome(model, x, y, x_adv, cfg.iters)


def bim(model: Model, x, y, cfg: AttackConfig) -> AttackOutcome:
    x, y = _prepare(model, x, y)
    done = _already_fooled(model, x, y)
    if done is not None:
        return done
    step = cfg.step_size if cfg.step_size is not None else cfg.eps / cfg.iters
    return _sign_iterations(model, x, y, cfg, x.copy(), step)


def pgd(model: Model, x, y, cfg: AttackConfig) -> AttackOutcome:
    x, y = _prepare(model, x, y)
    done = _already_fooled(model, x, y)
    if done is not None:
        return done
    start = x.copy()
    if cfg.random_start:
        rng = np.random.default_rng(cfg.seed)
        start = x + rng.uniform(-cfg.eps, cfg.eps, size=x.shape)
        start = clip_box(start, 0.0, 1.0)
    step = cfg.step_size if cfg.step_size is not None else 2.5 * cfg.eps / cfg.iters
    return _sign_iterations(model, x, y, cfg, start, step)


def deepfool(model: Model, x, y, cfg: AttackConfig) -> AttackOutcome:
    x, y = _prepare(model, x, y)
    done = _already_fooled(model, x, y)
    if done is not None:
        return done
    r_total = np.zeros_like(x)
    x_i = x.copy()
    used = 0
    for _ in range(cfg.max_deepfool_iters):
        Z, J = logit_jacobian(model, x_i)
        if int(np.argmax(Z)) != y:
            break
        w = J - J[y]
        f = Z - Z[y]
        norms = np.sqrt(np.einsum("ij,ij->i", w, w))
        norms[y] = 0.0
        if not np.any(norms > 0):
            return _outcome(model, x, y, x.copy(), used, adv_class=y)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(norms > 0, np.abs(f) / norms, np.inf)
        ratio[y] = np.inf
        l = int(np.argmin(ratio))
        r_total = r_total + (abs(f[l]) / norms[l] ** 2) * w[l]
        x_i = x + (1.0 + cfg.overshoot) * r_total
        used += 1
    x_adv = clip_box(x_i, 0.0, 1.0)
    return _outcome(model, x, y, x_adv, used)


def _cw_search(model: Model, x, y, cfg: AttackConfig):
    """Adam on ``||d||^2 + c * max(Z_y - max_{j!=y} Z_j, -kappa)`` with per-step box clipping.

    Returns ``(best_x_adv or None, final_x_adv, steps)`` where the best
    iterate is the smallest-L2 misclassified one.
    """
    c = cfg.objective.c
    kappa = cfg.kappa
    others = np.ones(model.num_classes, dtype=bool)
    others[y] = False

    def margin_seed(Z):
        masked = np.where(others, Z, -np.inf)
        t = int(np.argmax(masked))
        seed = np.zeros_like(Z)
        if Z[y] - Z[t] > -kappa:
            seed[y] = c
            seed[t] = -c
        return seed

    delta = np.zeros_like(x)
    state = AdamState.zeros(x.shape[0])
    best, best_l2 = None, np.inf
    for step in range(cfg.iters + 1):
        x_cur = x + delta
        Z, g_margin = logits_and_vjp(model, x_cur, margin_seed)
        if step and int(np.argmax(Z)) != y:
            l2 = float(np.sqrt(np.dot(delta, delta)))
            if l2 < best_l2:
                best, best_l2 = x_cur.copy(), l2
        if step == cfg.iters:
            break
        grad = 2.0 * delta + g_margin
        if not np.all(np.isfinite(grad)):
            break
        upd, state = adam_step(state, grad, cfg.eps)
        delta = clip_box(x_cur - upd, 0.0, 1.0) - x
    return best, x + delta, cfg.iters


def cw(model: Model, x, y, cfg: AttackConfig) -> AttackOutcome:
    x, y = _prepare(model, x, y)
    done = _already_fooled(model, x, y)
    if done is not None:
        return done
    best, last, steps = _cw_search(model, x, y, cfg)
    x_adv = best if best is not None else clip_box(last, 0.0, 1.0)
    return _outcome(model, x, y, x_adv, steps)


ATTACKS: dict[str, Callable[..., AttackOutcome]] = {
    "ifpa": ifpa,
    "iua": iua,
    "fgsm": fgsm,
    "bim": bim,
    "pgd": pgd,
    "deepfool": deepfool,
    "cw": cw,
}


def run_attack(model: Model, x, y, cfg: AttackConfig) -> AttackOutcome:
    return ATTACKS[cfg.kind](model, x, y, cfg)
