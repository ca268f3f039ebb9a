"""Optimizer tests: Adam update math, L-BFGS on quadratics, the run loop."""

import numpy as np
import pytest

from restyle.config import TransferConfig
from restyle.errors import ConfigurationError, NonFiniteError
from restyle.losses import LossReport
from restyle.optimize import AdamState, LbfgsState, adam_step, lbfgs_step, run_transfer


def make_report(total: float) -> LossReport:
    return LossReport(0, total, 0.0, 0.0, total)


def quadratic_evaluator(minimum, hessian_diag):
    """f(x) = 0.5 * sum(h_i * (x_i - m_i)^2) packaged as a loss evaluator."""
    m = np.asarray(minimum, dtype=np.float64)
    h = np.asarray(hessian_diag, dtype=np.float64)

    def evaluate(x):
        diff = x - m
        f = 0.5 * float(np.sum(h * diff * diff))
        return make_report(f), h * diff

    return evaluate


class TestAdamStep:
    def test_zero_grad_leaves_pixels(self):
        state = AdamState.for_shape((3,))
        pixels = np.array([1.0, -2.0, 0.5])
        out = adam_step(state, pixels, np.zeros(3), 0.1)
        assert np.array_equal(out, pixels)
        assert state.step == 1

    def test_first_step_hand_value(self):
        state = AdamState.for_shape(())
        out = adam_step(state, np.array(0.0), np.array(1.0), 0.1)
        assert abs(float(out) - (-0.1)) < 1e-6

    def test_determinism(self):
        def one(seed_grad):
            state = AdamState.for_shape((4,))
            x = np.zeros(4)
            for _ in range(5):
                x = adam_step(state, x, seed_grad, 0.05)
            return x

        g = np.array([0.3, -0.1, 0.7, 0.0])
        assert np.array_equal(one(g), one(g))

    def test_non_finite_grad_aborts(self):
        state = AdamState.for_shape((2,))
        with pytest.raises(NonFiniteError):
            adam_step(state, np.zeros(2), np.array([1.0, np.inf]), 0.1)

    def test_shape_mismatch(self):
        state = AdamState.for_shape((2,))
        with pytest.raises(ConfigurationError):
            adam_step(state, np.zeros(2), np.zeros(3), 0.1)

    def test_counter_increments_by_one(self):
        state = AdamState.for_shape((2,))
        for expected in (1, 2, 3):
            adam_step(state, np.zeros(2), np.ones(2), 0.1)
            assert state.step == expected


class TestLbfgsStep:
    def test_scalar_quadratic_converges(self):
        evaluate = quadratic_evaluator([3.0], [2.0])  # f = (x-3)^2
        state = LbfgsState()
        x = np.array([0.0])
        for _ in range(10):
            x, report, stalled = lbfgs_step(state, evaluate, x)
            assert not stalled
        assert abs(x[0] - 3.0) < 1e-6

    def test_zero_gradient_zero_step(self):
        evaluate = quadratic_evaluator([0.0, 0.0], [1.0, 1.0])
        state = LbfgsState()
        x = np.zeros(2)
        new_x, report, stalled = lbfgs_step(state, evaluate, x)
        assert np.array_equal(new_x, x)
        assert not stalled

    def test_ill_conditioned_quadratic(self):
        evaluate = quadratic_evaluator([1.0, -2.0], [100.0, 1.0])  # condition number 100
        state = LbfgsState()
        x = np.array([0.0, 0.0])
        for _ in range(50):
            x, report, stalled = lbfgs_step(state, evaluate, x)
        assert np.max(np.abs(x - np.array([1.0, -2.0]))) < 1e-4

    def test_loss_non_increasing_even_with_projection(self):
        evaluate = quadratic_evaluator([5.0, 5.0], [1.0, 30.0])
        state = LbfgsState()
        x = np.zeros(2)

        def project(v):
            return np.clip(v, -1.0, 2.0)  # box far from the unconstrained minimum

        totals = []
        for _ in range(25):
            x, report, _ = lbfgs_step(state, evaluate, x, project=project)
            totals.append(report.total)
        assert all(b <= a + 1e-12 for a, b in zip(totals, totals[1:]))
        assert np.all(x <= 2.0 + 1e-12)

    def test_history_respects_memory_bound(self):
        evaluate = quadratic_evaluator(np.arange(6.0), np.linspace(1, 4, 6))
        state = LbfgsState()
        x = np.zeros(6)
        for _ in range(30):
            x, _, _ = lbfgs_step(state, evaluate, x)
        assert len(state.s_history) <= state.memory


class TestRunTransfer:
    def test_zero_iterations(self, net, fixture_images):
        content, style = fixture_images
        config = TransferConfig(num_iterations=0, image_size=32)
        result = run_transfer(content, style, config, net)
        assert result.history == []
        assert [i for i, _ in result.frames] == [0]
        # final image equals the init (content) image at working size
        from restyle.imaging import deprocess, preprocess, resize_bilinear

        expected = deprocess(preprocess(resize_bilinear(content, 32), net), net)
        assert np.array_equal(result.final_image.pixels, expected.pixels)

    def test_frame_schedule_300_50(self, net, fixture_images):
        content, style = fixture_images
        config = TransferConfig(num_iterations=300, save_every=50, image_size=16,
                                optimizer="adam", learning_rate=20.0)
        result = run_transfer(content, style, config, net)
        assert [i for i, _ in result.frames] == [0, 50, 100, 150, 200, 250, 300]
        assert len(result.frames) == 300 // 50 + 1
        assert len(result.history) == 300

    def test_frame_schedule_uneven(self, net, fixture_images):
        content, style = fixture_images
        config = TransferConfig(num_iterations=25, save_every=10, image_size=16,
                                optimizer="adam", learning_rate=20.0)
        result = run_transfer(content, style, config, net)
        assert [i for i, _ in result.frames] == [0, 10, 20, 25]

    def test_fixed_seed_bit_identical(self, net, fixture_images):
        content, style = fixture_images
        config = TransferConfig(num_iterations=12, save_every=4, image_size=32,
                                init="noise", seed=99)
        a = run_transfer(content, style, config, net)
        b = run_transfer(content, style, config, net)
        assert [i for i, _ in a.frames] == [i for i, _ in b.frames]
        for (_, fa), (_, fb) in zip(a.frames, b.frames):
            assert np.array_equal(fa.pixels, fb.pixels)
        assert [r.total for r in a.history] == [r.total for r in b.history]

    def test_style_equals_content_keeps_content_loss(self, net, fixture_images):
        content, _ = fixture_images
        # With no smoothing term the objective gradient is exactly zero at the
        # content image, so the optimizer must hold still.
        config = TransferConfig(
            num_iterations=300, content_weight=300.0, style_weight=100.0,
            init="content", image_size=64, tv_strength=0.0,
        )
        result = run_transfer(content, content, config, net)
        assert result.history[-1].content <= result.initial_report.content
        assert result.initial_report.content == 0.0

    def test_style_equals_content_with_smoothing_stays_anchored(self, net, fixture_images):
        content, _ = fixture_images
        # The default smoothing weight may trade a vanishing content-loss
        # increase for lower TV; the image must stay anchored to the content.
        config = TransferConfig(
            num_iterations=300, content_weight=300.0, style_weight=100.0,
            init="content", image_size=64,
        )
        result = run_transfer(content, content, config, net)
        assert result.history[-1].content < 1e-6

    def test_lbfgs_history_non_increasing(self, net, fixture_images):
        content, style = fixture_images
        config = TransferConfig(num_iterations=40, image_size=32)
        result = run_transfer(content, style, config, net)
        totals = [result.initial_report.total] + [r.total for r in result.history]
        assert all(b <= a + 1e-12 for a, b in zip(totals, totals[1:]))

    def test_adam_loss_decreases_at_checkpoints(self, net, fixture_images):
        content, style = fixture_images
        config = TransferConfig(num_iterations=200, optimizer="adam",
                                learning_rate=20.0, image_size=32)
        result = run_transfer(content, style, config, net)
        initial = result.initial_report.total
        assert result.history[199].total < result.history[99].total < initial

    def test_cancel_at_iteration_boundary(self, net, fixture_images):
        content, style = fixture_images
        config = TransferConfig(num_iterations=50, save_every=5, image_size=32)
        seen = []

        def should_stop():
            return len(seen) >= 7

        result = run_transfer(
            content, style, config, net,
            on_report=lambda r: seen.append(r.iteration),
            should_stop=should_stop,
        )
        assert result.cancelled
        assert len(result.history) == 7
        assert result.frames[-1][0] == 7  # partial final frame at the boundary

    def test_invalid_config_rejected_before_compute(self, net, fixture_images):
        content, style = fixture_images
        with pytest.raises(ConfigurationError):
            run_transfer(content, style, TransferConfig(num_iterations=-1), net)

    def test_unknown_tap_rejected(self, net, fixture_images):
        content, style = fixture_images
        config = TransferConfig(content_taps=("nope",), image_size=16)
        with pytest.raises(ConfigurationError) as err:
            run_transfer(content, style, config, net)
        assert "nope" in str(err.value)

    def test_progress_sink_contract(self, net, fixture_images):
        content, style = fixture_images
        config = TransferConfig(num_iterations=9, save_every=3, image_size=16,
                                optimizer="adam", learning_rate=20.0)
        reports, frames = [], []
        run_transfer(
            content, style, config, net,
            on_report=reports.append,
            on_frame=lambda i, img: frames.append(i),
        )
        assert [r.iteration for r in reports] == list(range(1, 10))
        assert frames == [0, 3, 6, 9]

    def test_noise_init_spans_range(self, net, fixture_images):
        content, style = fixture_images
        config = TransferConfig(num_iterations=0, init="noise", seed=5, image_size=32)
        result = run_transfer(content, style, config, net)
        pixels = result.frames[0][1].pixels
        assert pixels.min() < 64 and pixels.max() > 192  # spread across [0,255]

    def test_spatial_average_mode_runs(self, net, fixture_images):
        content, style = fixture_images
        config = TransferConfig(num_iterations=5, image_size=32,
                                style_target_mode="spatial_average")
        result = run_transfer(content, style, config, net)
        assert len(result.history) == 5
