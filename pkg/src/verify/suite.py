# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Property suite run by ``dap-pool verify``.

Every check returns one or more ``CheckResult`` entries named after the
property it guards, so a failure message says exactly what broke.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from src.autodiff import functions as F
from src.autodiff.functions import OPS
from src.autodiff.gradcheck import check_gradients, check_parameter_gradients
from src.autodiff.tensor import Tensor
from src.datasets.batching import BatchPlan, iterate_batches
from src.datasets.synthetic import make_synthetic
from src.heads.builder import HeadConfig, build_head
from src.heads.dap import DapHead, update_lambdas
from src.heads.types import HeadKind
from src.nn.backbone import BackboneConfig, build_backbone
from src.nn.functional import batch_norm, conv2d
from src.nn.pooling import (
    global_avg_pool,
    global_max_pool,
    local_avg_pool,
    pooled_extent,
)
from src.training.optimizer import OptimizerState, lr_at
from src.training.trainer import StepResult, train_step
from src.verify.oracles import (
    naive_conv2d,
    naive_global_avg_pool,
    naive_global_max_pool,
    naive_local_avg_pool,
)

logger = logging.getLogger(__name__)

# 8x8 single-channel inputs -> 4x4 map -> 2x2 = 4 DAP classifiers.
TINY_BACKBONE = BackboneConfig(in_channels=1, input_size=8, widths=[2, 3], blocks_per_stage=1)
TINY_CLASSES = 3
# One residual block on a 4x4 input -> 2x2 = 4 DAP classifiers.
GRADCHECK_BACKBONE = BackboneConfig(in_channels=1, input_size=4, widths=[2], blocks_per_stage=1)
GRADCHECK_TRIALS = 20


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def describe(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


@dataclass
class SuiteReport:
    results: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    def describe(self) -> str:
        lines = [r.describe() for r in self.results]
        lines.append(
            f"{len(self.results) - len(self.failures())}/{len(self.results)} checks passed"
        )
        return "\n".join(lines)


class SuiteContext:
    """Shared fixtures; the training trace is computed once per suite run."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._trace: Optional[list[StepResult]] = None
        self._trace_head: Optional[DapHead] = None

    def tiny_model(
        self,
        head_config=None,
        kind: HeadKind = HeadKind.DAP,
        backbone_config: BackboneConfig = TINY_BACKBONE,
        num_classes: int = TINY_CLASSES,
    ):
        backbone = build_backbone(backbone_config, rng=np.random.default_rng([self.seed, 0]))
        head = build_head(
            kind,
            backbone.out_channels,
            num_classes,
            backbone.output_extent,
            config=head_config,
            rng=np.random.default_rng([self.seed, 1]),
        )
        return backbone, head

    def tiny_data(self):
        return make_synthetic(
            num_classes=TINY_CLASSES,
            samples_per_class=16,
            resolution=TINY_BACKBONE.input_size,
            channels=TINY_BACKBONE.in_channels,
            noise=0.1,
            seed=self.seed,
        )

    def run_steps(self, steps: int, backbone, head, lr: float = 0.05) -> list[StepResult]:
        data = self.tiny_data()
        plan = BatchPlan(seed=self.seed, batch_size=8)
        optimizer = OptimizerState(base_lr=lr, factor=1.0, interval=1)
        results: list[StepResult] = []
        epoch = 0
        while len(results) < steps:
            for images, labels in iterate_batches(data, plan, epoch):
                results.append(train_step(backbone, head, images, labels, optimizer))
                if len(results) == steps:
                    break
            epoch += 1
        return results

    def trace(self, steps: int = 500) -> tuple[list[StepResult], DapHead]:
        if self._trace is None or len(self._trace) < steps:
            backbone, head = self.tiny_model()
            self._trace = self.run_steps(steps, backbone, head)
            self._trace_head = head
        return self._trace[:steps], self._trace_head


CHECKS: dict[str, Callable[[SuiteContext], list[CheckResult]]] = {}


def check(group: str):
    def decorator(fn):
        CHECKS[group] = fn
        return fn

    return decorator


def op_gradcheck_cases(rng: np.random.Generator) -> dict[str, tuple[Callable, list]]:
    """One differentiable call per registered op, on inputs away from kinks."""

    def away_from_zero(*shape):
        return rng.uniform(0.2, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)

    def distinct(*shape):
        return rng.permutation(int(np.prod(shape))).reshape(shape) * 0.1

    a34, b34 = rng.standard_normal((3, 4)), rng.standard_normal((3, 4))
    return {
        "add": (F.add, [a34, b34]),
        "sub": (F.sub, [a34, b34]),
        "mul": (F.mul, [a34, b34]),
        "scale": (lambda a: F.scale(a, -1.7), [a34]),
        "relu": (F.relu, [away_from_zero(3, 4)]),
        "log": (F.log, [rng.uniform(0.5, 2.0, size=(3, 4))]),
        "log[floor]": (
            lambda a: F.log(a, floor=1e-12),
            [rng.uniform(0.5, 2.0, size=(3, 4))],
        ),
        "exp": (F.exp, [rng.uniform(-1.0, 1.0, size=(3, 4))]),
        "matmul": (F.matmul, [rng.standard_normal((3, 4)), rng.standard_normal((4, 2))]),
        "sum": (lambda a: F.sum(a, axis=1), [a34]),
        "mean": (F.mean, [a34]),
        "reshape": (lambda a: F.reshape(a, (4, 3)), [a34]),
        "getitem": (lambda a: F.getitem(a, (slice(None), slice(1, 3))), [a34]),
        "softmax": (F.softmax, [rng.standard_normal((3, 5))]),
        "pick": (lambda a: F.pick(a, np.array([0, 2, 1])), [a34]),
        "concat": (lambda a, b: F.concat([a, b], axis=1), [a34, rng.standard_normal((3, 2))]),
        "add_bias": (F.add_bias, [rng.standard_normal((2, 3, 4, 4)), rng.standard_normal(3)]),
        "conv2d": (
            lambda x, k: conv2d(x, k, stride=2, padding=1),
            [rng.standard_normal((2, 2, 5, 5)), rng.standard_normal((3, 2, 3, 3))],
        ),
        "batch_norm": (
            batch_norm,
            [rng.standard_normal((4, 2, 3, 3)), rng.uniform(0.5, 1.5, 2), rng.standard_normal(2)],
        ),
        "batch_norm[eval]": (
            lambda x, g, b: batch_norm(
                x, g, b, running_mean=np.array([0.1, -0.2]), running_var=np.array([0.9, 1.3])
            ),
            [rng.standard_normal((4, 2, 3, 3)), rng.uniform(0.5, 1.5, 2), rng.standard_normal(2)],
        ),
        "global_avg_pool": (global_avg_pool, [rng.standard_normal((2, 3, 4, 4))]),
        "global_max_pool": (global_max_pool, [distinct(2, 3, 4, 4)]),
        "local_avg_pool": (
            lambda x: local_avg_pool(x, 3, 2, ceil_mode=True),
            [rng.standard_normal((2, 2, 6, 6))],
        ),
        "local_avg_pool[floor]": (
            lambda x: local_avg_pool(x, 2, 2, ceil_mode=False),
            [rng.standard_normal((2, 2, 5, 5))],
        ),
    }


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    start = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as e:  # a crashing check is a failed check
        passed, detail = False, f"raised {type(e).__name__}: {e}"
    return CheckResult(name, passed, detail, time.perf_counter() - start)


@check("gradcheck")
def check_op_gradients(ctx: SuiteContext, trials: int = GRADCHECK_TRIALS) -> list[CheckResult]:
    trial_cases = [
        op_gradcheck_cases(np.random.default_rng([ctx.seed, 100, trial]))
        for trial in range(trials)
    ]
    results = []
    for name in trial_cases[0]:

        def run(name=name):
            worst = None
            for trial, cases in enumerate(trial_cases):
                fn, arrays = cases[name]
                outcome = check_gradients(fn, arrays, name=name)
                if not outcome.passed:
                    return False, f"trial {trial}: {outcome.describe()}"
                if worst is None or outcome.max_rel_error > worst.max_rel_error:
                    worst = outcome
            return True, f"{trials} trials; worst {worst.describe()}"

        results.append(_timed(f"gradcheck[{name}]", run))

    covered = {name.split("[")[0] for name in trial_cases[0]}
    missing = sorted(set(OPS) - covered)
    results.append(
        CheckResult(
            "gradcheck-coverage",
            not missing,
            f"ops without a gradient check: {missing}" if missing else f"{len(OPS)} ops covered",
        )
    )
    results.append(
        _timed(
            "gradcheck[model]",
            lambda: _model_gradcheck(ctx, GRADCHECK_BACKBONE, num_classes=2, batch=1),
        )
    )
    results.append(
        _timed(
            "gradcheck[model-batch]",
            lambda: _model_gradcheck(ctx, TINY_BACKBONE, num_classes=TINY_CLASSES, batch=2),
        )
    )
    return results


def _model_gradcheck(
    ctx: SuiteContext, backbone_config: BackboneConfig, num_classes: int, batch: int
) -> tuple[bool, str]:
    backbone, head = ctx.tiny_model(backbone_config=backbone_config, num_classes=num_classes)
    rng = np.random.default_rng([ctx.seed, 101, batch])
    size = backbone_config.input_size
    images = Tensor(rng.standard_normal((batch, backbone_config.in_channels, size, size)))
    targets = np.arange(batch) % num_classes
    selected = head(backbone(images), targets).selected

    def loss():
        # The routed head is fixed so the loss is smooth in the parameters.
        return head(backbone(images), targets).losses[selected]

    params = backbone.named_parameters(prefix="backbone.")
    params.update(head.named_parameters(prefix="head."))
    results = check_parameter_gradients(loss, params)
    worst = max(results.values(), key=lambda r: r.max_rel_error)
    return all(r.passed for r in results.values()), (
        f"batch {batch}, {num_classes} classes, {len(params)} parameter tensors, "
        f"{head.num_heads} heads; worst {worst.describe()}"
    )


@check("oracles")
def check_oracles(ctx: SuiteContext) -> list[CheckResult]:
    rng = np.random.default_rng([ctx.seed, 200])

    def pooling():
        worst = 0.0
        for _ in range(100):
            h, w = (int(v) for v in rng.integers(1, 10, size=2))
            ceil_mode = bool(rng.integers(2))
            limit = max(h, w) + 2 if ceil_mode else min(h, w) + 1
            window = int(rng.integers(1, limit))
            stride = int(rng.integers(1, 4))
            x = rng.standard_normal((int(rng.integers(1, 3)), int(rng.integers(1, 3)), h, w))
            got = local_avg_pool(Tensor(x), window, stride, ceil_mode).data
            want = naive_local_avg_pool(x, window, stride, ceil_mode)
            if got.shape != want.shape:
                return False, f"shape {got.shape} != oracle {want.shape} (pw={window}, s={stride})"
            worst = max(worst, float(np.max(np.abs(got - want))))
        full = rng.standard_normal((2, 3, 5, 5))
        gap_gap = float(
            np.max(np.abs(local_avg_pool(Tensor(full), 5, 1).data[:, :, 0, 0]
                          - global_avg_pool(Tensor(full)).data))
        )
        ok = worst <= 1e-10 and gap_gap <= 1e-12
        return ok, f"100 configs, max deviation {worst:.2e}; full-window vs GAP {gap_gap:.2e}"

    def global_pools():
        x = rng.standard_normal((2, 3, 4, 5))
        avg = float(np.max(np.abs(global_avg_pool(Tensor(x)).data - naive_global_avg_pool(x))))
        mx = float(np.max(np.abs(global_max_pool(Tensor(x)).data - naive_global_max_pool(x))))
        return max(avg, mx) <= 1e-12, f"avg {avg:.2e}, max {mx:.2e}"

    def convolution():
        worst = 0.0
        for _ in range(10):
            size = int(rng.integers(3, 7))
            stride, padding = int(rng.integers(1, 3)), int(rng.integers(0, 2))
            x = rng.standard_normal((2, 2, size, size))
            kernel = rng.standard_normal((3, 2, 3, 3))
            bias = rng.standard_normal(3)
            got = conv2d(Tensor(x), Tensor(kernel), Tensor(bias), stride, padding).data
            worst = max(worst, float(np.max(np.abs(
                got - naive_conv2d(x, kernel, bias, stride, padding)
            ))))
        return worst <= 1e-10, f"10 configs, max deviation {worst:.2e}"

    return [
        _timed("pooling-oracle", pooling),
        _timed("global-pool-oracle", global_pools),
        _timed("conv-oracle", convolution),
    ]


@check("routing")
def check_routing(ctx: SuiteContext) -> list[CheckResult]:
    def run():
        trace, head = ctx.trace(50)
        for step, result in enumerate(trace):
            selected = int(np.argmax(result.head_losses))
            if result.routing_counts[selected] != 1 or result.routing_counts.sum() != 1:
                return False, f"step {step}: routed {result.routing_counts} != argmax {selected}"
            for i in range(head.num_heads):
                grad = result.grads[f"head.heads.{i}"]
                if i != selected and np.any(grad != 0):
                    return False, f"step {step}: non-selected head {i} has a nonzero gradient"
        return True, f"{len(trace)} steps, {head.num_heads} heads"

    return [_timed("routing-exclusivity", run)]


@check("lambda")
def check_lambdas(ctx: SuiteContext) -> list[CheckResult]:
    def simplex():
        trace, head = ctx.trace(500)
        for step, result in enumerate(trace):
            total = float(result.lambdas.sum())
            if abs(total - 1.0) > 1e-12 or result.lambdas.min() < head.lambda_floor:
                return False, f"step {step}: lambdas {result.lambdas.tolist()} sum {total!r}"
        return True, f"{len(trace)} steps on the simplex, floor {head.lambda_floor}"

    def uniform():
        lambdas = np.full(4, 0.25)
        for _ in range(500):
            lambdas = update_lambdas([1.0] * 4, lambdas, lr=0.1)
        drift = float(np.max(np.abs(lambdas - 0.25)))
        return drift <= 1e-12, f"max drift {drift:.2e} after 500 equal-loss steps"

    return [_timed("lambda-simplex", simplex), _timed("lambda-uniform", uniform)]


@check("equivalence")
def check_degenerate_equivalence(ctx: SuiteContext) -> list[CheckResult]:
    def run():
        extent = TINY_BACKBONE.output_extent()
        dap = ctx.tiny_model(HeadConfig(kind=HeadKind.DAP, pw=extent, stride=1), HeadKind.DAP)
        gap = ctx.tiny_model(HeadConfig(kind=HeadKind.GAP, bias=False), HeadKind.GAP)
        if dap[1].num_heads != 1:
            return False, f"full-extent DAP built {dap[1].num_heads} heads"
        dap_trace = ctx.run_steps(10, *dap)
        gap_trace = ctx.run_steps(10, *gap)
        worst = max(abs(a.loss - b.loss) for a, b in zip(dap_trace, gap_trace))
        weight_gap = float(
            np.max(np.abs(dap[1].heads[0].data - gap[1].classifier.weight.data))
        )
        return max(worst, weight_gap) <= 1e-9, (
            f"10 steps: max loss deviation {worst:.2e}, weight deviation {weight_gap:.2e}"
        )

    return [_timed("degenerate-equivalence", run)]


@check("determinism")
def check_determinism(ctx: SuiteContext) -> list[CheckResult]:
    def run():
        first = [r.loss for r in ctx.run_steps(20, *ctx.tiny_model())]
        second = [r.loss for r in ctx.run_steps(20, *ctx.tiny_model())]
        return first == second, f"20-step loss sequences {'match' if first == second else 'differ'}"

    return [_timed("determinism", run)]


@check("geometry")
def check_four_classifiers(ctx: SuiteContext) -> list[CheckResult]:
    def run():
        counts = {}
        for size, window in ((32, 3), (64, 6)):
            extent = BackboneConfig(input_size=size).output_extent()
            counts[(size, window)] = pooled_extent(extent, window, 2, True) ** 2
        ok = all(n == 4 for n in counts.values())
        return ok, ", ".join(f"{s}x{s} pw={w}: n={n}" for (s, w), n in counts.items())

    return [_timed("four-classifiers", run)]


@check("schedule")
def check_schedule(ctx: SuiteContext) -> list[CheckResult]:
    def run():
        state = OptimizerState(base_lr=0.1, factor=10.0, interval=100)
        got = [lr_at(epoch, state) for epoch in (0, 150, 400)]
        ok = all(np.isclose(g, w, rtol=1e-12, atol=0) for g, w in zip(got, (0.1, 0.01, 1e-5)))
        return ok, f"lr at epochs 0/150/400 = {got}"

    return [_timed("lr-schedule", run)]


def run_suite(groups: Optional[Iterable[str]] = None, seed: int = 0) -> SuiteReport:
    """Run the named check groups (all by default) and collect their results."""
    selected = list(groups) if groups else list(CHECKS)
    unknown = [g for g in selected if g not in CHECKS]
    if unknown:
        raise ValueError(f"unknown check groups {unknown}; available: {list(CHECKS)}")
    ctx = SuiteContext(seed=seed)
    report = SuiteReport()
    for group in selected:
        for result in CHECKS[group](ctx):
            report.results.append(result)
            log = logger.info if result.passed else logger.error
            log(result.describe())
    return report
