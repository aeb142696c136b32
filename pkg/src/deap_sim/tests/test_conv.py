"""Tests for deap_sim.conv module."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from pydantic import ValidationError

import deap_sim.conv as conv_module
from deap_sim.config import DeapBounds, MrrParams, QuantSpec
from deap_sim.conv import (
    ConvShape,
    cycle_count,
    deap_convolve,
    oracle_convolve,
    output_dims,
    single_pixel,
    zero_pad,
)
from deap_sim.errors import ConfigurationError, ContractError, DeapSimError


OFF = QuantSpec.off()


def _random_case(rng: np.random.Generator, max_r: int = 5, max_d: int = 8, max_s: int = 3):
    r = int(rng.integers(1, max_r + 1))
    d = int(rng.integers(1, max_d + 1))
    s = int(rng.integers(1, max_s + 1))
    k = int(rng.integers(1, 4))
    h = int(rng.integers(r, r + 8))
    w = int(rng.integers(r, r + 8))
    a = rng.uniform(0.0, 1.0, size=(h, w, d))
    f = rng.uniform(-1.0, 1.0, size=(r, r, d, k))
    return a, f, s


class TestConvShape:
    def test_square_kernel(self):
        shape = ConvShape(h=28, w=28, d=1, r=5, k=8)
        assert (shape.kernel_h, shape.kernel_w) == (5, 5)
        assert shape.unit_mrrs == 25

    def test_rectangular_kernel(self):
        shape = ConvShape(h=161, w=700, d=1, r_h=20, r_w=5, k=32, s=2)
        assert (shape.kernel_h, shape.kernel_w) == (20, 5)

    def test_kernel_edge_required(self):
        with pytest.raises(ValidationError):
            ConvShape(h=28, w=28, d=1)

    def test_for_tensors(self):
        shape = ConvShape.for_tensors(np.zeros((12, 10, 3)), np.zeros((3, 2, 3, 4)), s=2)
        assert (shape.h, shape.w, shape.d, shape.kernel_h, shape.kernel_w, shape.k, shape.s) == (12, 10, 3, 3, 2, 4, 2)


class TestOutputDims:
    """Ceiling and floor counting conventions."""

    def test_mnist_layer(self):
        dims = output_dims(ConvShape(h=28, w=28, d=1, r=5, k=8))
        assert (dims.formula_h, dims.sim_h) == (24, 24)
        assert dims.sim_pixels == 576

    def test_strided_conventions_differ(self):
        dims = output_dims(ConvShape(h=161, w=161, d=1, r=20, k=1, s=2))
        assert dims.formula_h == 72
        assert dims.sim_h == 71

    def test_kernel_larger_than_input(self):
        with pytest.raises(ContractError):
            output_dims(ConvShape(h=4, w=4, d=1, r=5))


class TestOracle:
    def test_hand_example(self):
        out = oracle_convolve(np.ones((3, 3, 1)), np.ones((2, 2, 1, 1)))
        assert out.shape == (2, 2, 1)
        assert np.array_equal(out[..., 0], np.full((2, 2), 4.0))

    def test_stride(self):
        a = np.arange(16, dtype=float).reshape(4, 4, 1)
        out = oracle_convolve(a, np.ones((1, 1, 1, 1)), s=2)
        assert np.array_equal(out[..., 0], [[0.0, 2.0], [8.0, 10.0]])

    def test_zero_pad(self):
        padded = zero_pad(np.ones((2, 2, 3)), 1)
        assert padded.shape == (4, 4, 3)
        assert padded.sum() == 12.0
        assert padded[0].sum() == 0.0

    def test_negative_pad(self):
        with pytest.raises(ContractError):
            zero_pad(np.ones((2, 2, 1)), -1)

    def test_depth_mismatch(self):
        with pytest.raises(ContractError):
            oracle_convolve(np.ones((4, 4, 2)), np.ones((2, 2, 3, 1)))


class TestDeapConvolve:
    """Photonic convolution against the digital reference."""

    def test_matches_oracle_without_quantization(self, params: MrrParams, rng: np.random.Generator):
        for _ in range(200):
            a, f, s = _random_case(rng)
            got = deap_convolve(a, f, ConvShape.for_tensors(a, f, s=s), quant=OFF, params=params)
            assert np.max(np.abs(got.output - oracle_convolve(a, f, s))) <= 1e-9

    def test_quantized_error_bound(self, params: MrrParams, rng: np.random.Generator):
        for _ in range(50):
            a, f, s = _random_case(rng)
            got = deap_convolve(a, f, ConvShape.for_tensors(a, f, s=s), quant=QuantSpec(bits=7), params=params)
            r2 = f.shape[0] * f.shape[1]
            # per kernel: sum over lines of g_c R^2 (2^-6 + 2^-14)
            bound = np.abs(f).max(axis=(0, 1)).sum(axis=0) * r2 * (2.0**-6 + 2.0**-14)
            err = np.abs(got.output - oracle_convolve(a, f, s)).max(axis=(0, 1))
            assert np.all(err <= bound)

    @pytest.mark.parametrize("n_conv", [1, 2, 4])
    def test_cycle_accounting(self, params: MrrParams, rng: np.random.Generator, n_conv: int):
        a = rng.uniform(0.0, 1.0, size=(9, 9, 2))
        f = rng.uniform(-1.0, 1.0, size=(3, 3, 2, 3))
        result = deap_convolve(a, f, bounds=DeapBounds(n_conv=n_conv), quant=OFF, params=params)
        assert result.pixels_per_kernel == 49
        assert result.cycles == 3 * -(-49 // n_conv)
        assert sum(result.unit_pixels) == 3 * 49
        assert len(result.unit_pixels) == n_conv

    def test_output_independent_of_unit_count(self, params: MrrParams, rng: np.random.Generator):
        a = rng.uniform(0.0, 1.0, size=(9, 9, 2))
        f = rng.uniform(-1.0, 1.0, size=(3, 3, 2, 3))
        outputs = [
            deap_convolve(a, f, bounds=DeapBounds(n_conv=n), params=params).output for n in (1, 2, 4)
        ]
        assert np.array_equal(outputs[0], outputs[1])
        assert np.array_equal(outputs[0], outputs[2])

    def test_threads_do_not_change_output(self, params: MrrParams, rng: np.random.Generator):
        a = rng.uniform(0.0, 1.0, size=(10, 10, 3))
        f = rng.uniform(-1.0, 1.0, size=(3, 3, 3, 6))
        serial = deap_convolve(a, f, params=params).output
        threaded = deap_convolve(a, f, params=params, threads=4).output
        assert np.array_equal(serial, threaded)

    def test_mnist_first_layer_cycles(self, params: MrrParams, rng: np.random.Generator):
        a = rng.uniform(0.0, 1.0, size=(28, 28, 1))
        f = rng.uniform(-1.0, 1.0, size=(5, 5, 1, 8))
        assert deap_convolve(a, f, params=params, fast=True).cycles == 4608
        assert cycle_count(8, 576, 1) == 4608

    @pytest.mark.parametrize("alpha", [3.0, -2.5])
    def test_linear_in_the_kernel(self, params: MrrParams, rng: np.random.Generator, alpha: float):
        a = rng.uniform(0.0, 1.0, size=(7, 6, 3))
        f = rng.uniform(-1.0, 1.0, size=(3, 2, 3, 2))
        base = deap_convolve(a, f, quant=OFF, params=params).output
        scaled = deap_convolve(a, alpha * f, quant=OFF, params=params).output
        assert np.max(np.abs(scaled - alpha * base)) <= 1e-9

    def test_kernel_over_bounds(self, params: MrrParams):
        with pytest.raises(ConfigurationError):
            deap_convolve(np.zeros((12, 12, 1)), np.zeros((11, 11, 1, 1)), params=params)

    def test_depth_over_bounds(self, params: MrrParams):
        with pytest.raises(ConfigurationError):
            deap_convolve(np.zeros((4, 4, 11)), np.zeros((3, 3, 11, 1)), params=params)

    def test_envelopes_out_of_range(self, params: MrrParams):
        with pytest.raises(ContractError):
            deap_convolve(np.full((4, 4, 1), 1.5), np.ones((3, 3, 1, 1)), params=params)

    def test_shape_mismatch(self, params: MrrParams):
        a = np.zeros((6, 6, 1))
        f = np.zeros((3, 3, 1, 2))
        with pytest.raises(ContractError):
            deap_convolve(a, f, ConvShape(h=6, w=6, d=1, r=3, k=1), params=params)


class TestSinglePixel:
    def test_matches_tensordot(self, params: MrrParams, rng: np.random.Generator):
        window = rng.uniform(0.0, 1.0, size=(3, 3, 4))
        kernel = rng.uniform(-1.0, 1.0, size=(3, 3, 4))
        got = single_pixel(window, kernel, DeapBounds(), OFF, params)
        assert got == pytest.approx(float(np.tensordot(window, kernel, axes=3)), abs=1e-9)

    def test_agrees_with_full_convolution(self, params: MrrParams, rng: np.random.Generator):
        a = rng.uniform(0.0, 1.0, size=(5, 5, 2))
        f = rng.uniform(-1.0, 1.0, size=(5, 5, 2, 1))
        full = deap_convolve(a, f, quant=OFF, params=params).output[0, 0, 0]
        assert single_pixel(a, f[..., 0], DeapBounds(), OFF, params) == pytest.approx(full, abs=1e-9)

    def test_window_over_bounds(self, params: MrrParams):
        with pytest.raises(ConfigurationError):
            single_pixel(np.zeros((2, 2, 3)), np.zeros((2, 2, 3)), DeapBounds(r_m=3, d_m=2), OFF, params)

    def test_mismatched_window(self, params: MrrParams):
        with pytest.raises(ContractError):
            single_pixel(np.zeros((2, 2, 1)), np.zeros((3, 3, 1)), DeapBounds(), OFF, params)

    def test_every_pixel_matches_full_unit_with_quantization(self, params: MrrParams, rng: np.random.Generator):
        """The engine simulates only used rings; each pixel equals the full D_m x R_m^2 unit."""
        quant = QuantSpec(bits=7)
        a = rng.uniform(0.0, 1.0, size=(6, 5, 3))
        f = rng.uniform(-1.0, 1.0, size=(3, 2, 3, 2))
        f[0, 1, 2, 0] = 0.0
        result = deap_convolve(a, f, ConvShape.for_tensors(a, f, s=2), quant=quant, params=params)
        oh, ow, k = result.output.shape
        for i in range(oh):
            for j in range(ow):
                window = a[2 * i : 2 * i + 3, 2 * j : 2 * j + 2, :]
                for kk in range(k):
                    expected = single_pixel(window, f[..., kk], DeapBounds(), quant, params)
                    assert result.output[i, j, kk] == pytest.approx(expected, abs=1e-12)

    def test_unused_rings_stay_dark_under_quantization(
        self, params: MrrParams, rng: np.random.Generator, monkeypatch: pytest.MonkeyPatch
    ):
        """Light every unused ring: parked weights still keep the balanced current at 0."""
        window = rng.uniform(0.0, 1.0, size=(2, 2, 2))
        kernel = rng.uniform(-1.0, 1.0, size=(2, 2, 2))
        quant = QuantSpec(bits=7)
        expected = single_pixel(window, kernel, DeapBounds(), quant, params)

        real = conv_module.realize_envelopes
        monkeypatch.setattr(conv_module, "realize_envelopes",
                            lambda mu, q, p: np.where(mu == 0.0, 0.5, real(mu, q, p)))
        assert single_pixel(window, kernel, DeapBounds(), quant, params) == expected

    def test_leaking_ring_is_reported(
        self, params: MrrParams, rng: np.random.Generator, monkeypatch: pytest.MonkeyPatch
    ):
        real_envelopes = conv_module.realize_envelopes
        real_program = conv_module.program_bank

        def leaky(weights, p, q, fast=False):
            bank = real_program(weights, p, q, fast=fast)
            return replace(bank, f_star=np.where(bank.f_star == 0.0, 1.0 / 127.0, bank.f_star))

        monkeypatch.setattr(conv_module, "realize_envelopes",
                            lambda mu, q, p: np.where(mu == 0.0, 0.5, real_envelopes(mu, q, p)))
        monkeypatch.setattr(conv_module, "program_bank", leaky)
        window = rng.uniform(0.0, 1.0, size=(2, 2, 1))
        with pytest.raises(DeapSimError, match="idle rings"):
            single_pixel(window, np.ones((2, 2, 1)), DeapBounds(), QuantSpec(bits=7), params)
