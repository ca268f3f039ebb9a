"""Pixel-space optimizers and the main stylization loop.

Adam is the textbook bias-corrected update. L-BFGS keeps the last m=10
(s, y) pairs, builds the search direction with the two-loop recursion, and
backtracks with an Armijo sufficient-decrease test. Candidate points are
projected (clamped) into the valid pixel range before the test, so the
accepted loss sequence is non-increasing even when the clamp binds; an
exhausted line search takes a zero step and is flagged as a stall.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from .config import TransferConfig
from .errors import ConfigurationError, NonFiniteError
from .imaging import RgbImage, deprocess, preprocess, preprocessed_bounds, resize_bilinear
from .losses import LossReport, style_target_from_image, total_objective
from .network import LossNetwork, extract_features
from .tensor import Tensor

# Learning rates are quoted in 8-bit pixel units; preprocessed pixels span
# a unit range, so the applied Adam step is scaled accordingly.
PIXEL_UNIT = 1.0 / 255.0


@dataclass
class AdamState:
    """First/second-moment buffers and step counter for one pixel tensor."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def for_shape(shape) -> "AdamState":
        return AdamState(m=np.zeros(shape), v=np.zeros(shape))


def adam_step(
    state: AdamState, pixels: np.ndarray, grad: np.ndarray, learning_rate: float
) -> np.ndarray:
    """One bias-corrected Adam update; mutates the state, returns new pixels."""
    if pixels.shape != grad.shape:
        raise ConfigurationError(f"pixel/grad shape mismatch: {pixels.shape} vs {grad.shape}")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteError("non-finite gradient passed to adam_step")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    return pixels - learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)


Evaluator = Callable[[np.ndarray], Tuple[LossReport, np.ndarray]]


@dataclass
class LbfgsState:
    """Curvature history plus the cached evaluation at the current point."""

    memory: int = 10
    armijo_c: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 20
    s_history: deque = field(default_factory=lambda: deque(maxlen=10))
    y_history: deque = field(default_factory=lambda: deque(maxlen=10))
    rho_history: deque = field(default_factory=lambda: deque(maxlen=10))
    report: Optional[LossReport] = None
    grad: Optional[np.ndarray] = None
    first_step: bool = True


def _two_loop_direction(state: LbfgsState, grad: np.ndarray) -> np.ndarray:
    q = grad.copy()
    alphas = []
    for s, y, rho in zip(
        reversed(state.s_history), reversed(state.y_history), reversed(state.rho_history)
    ):
        alpha = rho * np.dot(s.ravel(), q.ravel())
        q -= alpha * y
        alphas.append(alpha)
    if state.y_history:
        s, y = state.s_history[-1], state.y_history[-1]
        gamma = np.dot(s.ravel(), y.ravel()) / np.dot(y.ravel(), y.ravel())
        q *= gamma
    for (s, y, rho), alpha in zip(
        zip(state.s_history, state.y_history, state.rho_history), reversed(alphas)
    ):
        beta = rho * np.dot(y.ravel(), q.ravel())
        q += (alpha - beta) * s
    return -q


def lbfgs_step(
    state: LbfgsState,
    evaluate: Evaluator,
    x: np.ndarray,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> Tuple[np.ndarray, LossReport, bool]:
    """Advance one L-BFGS iteration from x.

    evaluate(x) must return (LossReport, gradient) at a candidate point.
    Returns (new_x, report_at_new_x, stalled). A zero-gradient start or an
    exhausted line search returns x unchanged; only the latter counts as a
    stall.
    """
    if state.report is None or state.grad is None:
        state.report, state.grad = evaluate(x)
    f0, g0 = state.report.total, state.grad

    if not np.any(g0):
        return x, state.report, False

    direction = _two_loop_direction(state, g0)
    descent = np.dot(direction.ravel(), g0.ravel())
    if descent >= 0.0:
        # History went bad (should not happen with the curvature filter);
        # fall back to steepest descent.
        direction = -g0
        descent = -np.dot(g0.ravel(), g0.ravel())

    alpha = 1.0
    if state.first_step:
        alpha = min(1.0, 1.0 / np.abs(g0).sum())

    for _ in range(state.max_backtracks + 1):
        candidate = x + alpha * direction
        if project is not None:
            candidate = project(candidate)
        moved = candidate - x
        if not np.any(moved):
            alpha *= state.shrink
            continue
        report, grad = evaluate(candidate)
        # Sufficient decrease against the realized displacement, which
        # equals alpha * direction whenever the projection is inactive.
        threshold = f0 + state.armijo_c * np.dot(g0.ravel(), moved.ravel())
        if report.total <= threshold:
            s = moved
            y = grad - g0
            sy = np.dot(s.ravel(), y.ravel())
            if sy > 1e-12:
                state.s_history.append(s)
                state.y_history.append(y)
                state.rho_history.append(1.0 / sy)
            state.report, state.grad = report, grad
            state.first_step = False
            return candidate, report, False
        alpha *= state.shrink

    return x, state.report, True


@dataclass
class TransferResult:
    """Everything a finished (or cancelled) run produced."""

    final_image: RgbImage
    frames: List[Tuple[int, RgbImage]]
    history: List[LossReport]
    initial_report: LossReport
    cancelled: bool = False
    stalled_iterations: List[int] = field(default_factory=list)


def run_transfer(
    content: RgbImage,
    style: RgbImage,
    config: TransferConfig,
    net: LossNetwork,
    on_report: Optional[Callable[[LossReport], None]] = None,
    on_frame: Optional[Callable[[int, RgbImage], None]] = None,
    should_stop: Optional[Callable[[], bool]] = None,
) -> TransferResult:
    """Optimize an output image against the weighted perceptual objective.

    Content features and style statistics are extracted once; the pixel
    tensor is then updated for num_iterations steps, emitting a LossReport
    per iteration (losses of the image *after* that step) and a frame at
    iteration 0, every save_every iterations, and at the end. Fixed seeds
    give bit-identical results. should_stop is polled at each iteration
    boundary; a true value ends the run early with partial artifacts.
    """
    config.validate()
    available = set(net.tap_names)
    for tap in list(config.content_taps) + list(config.style_taps):
        if tap not in available:
            raise ConfigurationError(
                f"unknown tap '{tap}'; available taps: {sorted(available)}"
            )

    content_small = resize_bilinear(content, config.image_size)
    style_small = resize_bilinear(style, config.image_size)
    content_pre = preprocess(content_small, net)
    style_pre = preprocess(style_small, net)

    content_target = extract_features(net, content_pre, config.content_taps)
    style_target = style_target_from_image(
        net, style_pre, config.style_taps, config.style_target_mode
    )

    low, high = preprocessed_bounds(net)
    if config.init == "content":
        init = content_pre.data.copy()
    else:
        rng = np.random.default_rng(config.seed)
        init = rng.uniform(low=0.0, high=1.0, size=content_pre.shape) * (high - low) + low

    pixels = Tensor(init, requires_grad=True)

    def clamp(values: np.ndarray) -> np.ndarray:
        return np.clip(values, low, high)

    def evaluate(values: np.ndarray) -> Tuple[LossReport, np.ndarray]:
        pixels.data = values
        pixels.zero_grad()
        total, report = total_objective(pixels, config, content_target, style_target, net)
        grads = total.backward()
        return report, grads[pixels]

    frames: List[Tuple[int, RgbImage]] = []
    history: List[LossReport] = []
    stalled: List[int] = []

    def emit_frame(iteration: int, values: np.ndarray) -> None:
        frame = deprocess(values, net)
        frames.append((iteration, frame))
        if on_frame is not None:
            on_frame(iteration, frame)

    x = init
    emit_frame(0, x)

    initial_report, grad = evaluate(x)
    initial_report = replace(initial_report, iteration=0)

    adam_state = AdamState.for_shape(x.shape) if config.optimizer == "adam" else None
    lbfgs_state = LbfgsState() if config.optimizer == "lbfgs" else None
    if lbfgs_state is not None:
        lbfgs_state.report, lbfgs_state.grad = initial_report, grad

    cancelled = False
    iteration = 0
    for iteration in range(1, config.num_iterations + 1):
        if should_stop is not None and should_stop():
            cancelled = True
            iteration -= 1
            break
        if config.optimizer == "adam":
            x = clamp(adam_step(adam_state, x, grad, config.learning_rate * PIXEL_UNIT))
            report, grad = evaluate(x)
        else:
            x, report, did_stall = lbfgs_step(lbfgs_state, evaluate, x, project=clamp)
            if did_stall:
                stalled.append(iteration)
        report = replace(report, iteration=iteration)
        history.append(report)
        if on_report is not None:
            on_report(report)
        if iteration % config.save_every == 0 and iteration < config.num_iterations:
            emit_frame(iteration, x)
    else:
        iteration = config.num_iterations

    if not frames or frames[-1][0] != iteration:
        emit_frame(iteration, x)

    return TransferResult(
        final_image=frames[-1][1],
        frames=frames,
        history=history,
        initial_report=initial_report,
        cancelled=cancelled,
        stalled_iterations=stalled,
    )
