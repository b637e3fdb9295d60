import math
from dataclasses import dataclass

import torch
from torch.optim import Optimizer


class NonFiniteGradientError(RuntimeError):
    pass


def rectification_rho(step: int, beta2: float) -> float:
    """Length of the approximated simple moving average at step t."""
    rho_inf = 2.0 / (1.0 - beta2) - 1.0
    beta2_t = beta2**step
    return rho_inf - 2.0 * step * beta2_t / (1.0 - beta2_t)


def radam_step(param, grad, state: dict, lr: float, betas=(0.9, 0.999), eps=1e-8, weight_decay=1e-4):
    """
    One rectified Adam update of `param` in place. Weight decay is decoupled.
    When the variance estimate is not yet tractable (rho_t <= 4) the step is
    plain bias-corrected momentum.
    """
    beta1, beta2 = betas
    if not state:
        state["step"] = 0
        state["exp_avg"] = torch.zeros_like(param)
        state["exp_avg_sq"] = torch.zeros_like(param)
    exp_avg, exp_avg_sq = state["exp_avg"], state["exp_avg_sq"]

    state["step"] += 1
    t = state["step"]
    exp_avg.mul_(beta1).add_(grad, alpha=1.0 - beta1)
    exp_avg_sq.mul_(beta2).addcmul_(grad, grad, value=1.0 - beta2)

    if weight_decay:
        param.mul_(1.0 - lr * weight_decay)

    bias1 = 1.0 - beta1**t
    rho_t = rectification_rho(t, beta2)
    if rho_t > 4.0:
        rho_inf = 2.0 / (1.0 - beta2) - 1.0
        rect = math.sqrt(
            (rho_t - 4.0) * (rho_t - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t)
        )
        denom = (exp_avg_sq / (1.0 - beta2**t)).sqrt_().add_(eps)
        param.addcdiv_(exp_avg, denom, value=-lr * rect / bias1)
    else:
        param.add_(exp_avg, alpha=-lr / bias1)
    return param


class RAdam(Optimizer):
    """
    Rectified Adam. Param groups may carry a "names" list parallel to
    "params" so a non-finite gradient can be reported by name.
    """

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8, weight_decay=1e-4):
        if lr < 0:
            raise ValueError(f"invalid learning rate {lr}")
        defaults = dict(lr=lr, betas=betas, eps=eps, weight_decay=weight_decay)
        super().__init__(params, defaults)

    @classmethod
    def for_module(cls, module: torch.nn.Module, **kwargs) -> "RAdam":
        named = [(n, p) for n, p in module.named_parameters() if p.requires_grad]
        group = {"params": [p for _, p in named], "names": [n for n, _ in named]}
        return cls([group], **kwargs)

    @torch.no_grad()
    def step(self, closure=None):
        loss = None
        if closure is not None:
            with torch.enable_grad():
                loss = closure()

        for group in self.param_groups:
            names = group.get("names") or [f"param{i}" for i in range(len(group["params"]))]
            for name, p in zip(names, group["params"]):
                if p.grad is None:
                    continue
                if p.grad.is_sparse:
                    raise RuntimeError("RAdam does not support sparse gradients")
                if not torch.isfinite(p.grad).all():
                    raise NonFiniteGradientError(f"non-finite gradient in parameter {name!r}")
                radam_step(
                    p,
                    p.grad,
                    self.state[p],
                    group["lr"],
                    betas=group["betas"],
                    eps=group["eps"],
                    weight_decay=group["weight_decay"],
                )
        return loss


@dataclass(frozen=True)
class LrSchedule:
    base_lr: float = 1e-4
    max_lr: float = 1e-3
    step_size: int = 1
    mode: str = "triangular"

    def __post_init__(self):
        if not 0 < self.base_lr <= self.max_lr:
            raise ValueError(f"need 0 < base_lr <= max_lr, got {self.base_lr}, {self.max_lr}")
        if self.step_size < 1:
            raise ValueError(f"step_size must be >= 1, got {self.step_size}")
        if self.mode != "triangular":
            raise ValueError(f"unsupported cyclic mode {self.mode!r}")


def cyclic_lr(iteration: int, schedule: LrSchedule) -> float:
    """Triangular wave: base_lr at 0, max_lr at step_size, base_lr again at 2 * step_size."""
    if iteration < 0:
        raise ValueError(f"iteration must be >= 0, got {iteration}")
    cycle = math.floor(1 + iteration / (2 * schedule.step_size))
    x = abs(iteration / schedule.step_size - 2 * cycle + 1)
    lr = schedule.base_lr + (schedule.max_lr - schedule.base_lr) * max(0.0, 1.0 - x)
    return min(schedule.max_lr, max(schedule.base_lr, lr))


def assign_learning_rate(optimizer, new_lr):
    for param_group in optimizer.param_groups:
        param_group["lr"] = new_lr


def cyclic_lr_adjuster(optimizer, schedule: LrSchedule):
    def _lr_adjuster(step):
        lr = cyclic_lr(step, schedule)
        assign_learning_rate(optimizer, lr)
        return lr

    return _lr_adjuster
