import numpy as np
import pytest

from glasslocal import (
    MixtureSpec,
    gen_planted,
    gen_random,
    grad,
    hamiltonian,
    hessian,
    interpolate,
    partition_rescaled,
    read_tensors,
    write_tensors,
)
from glasslocal.disorder import all_spins


class TestGeneration:
    def test_reproducible(self, sk):
        a = gen_random(sk, 2, seed=4)
        b = gen_random(sk, 2, seed=4)
        assert a.tensors[2].size == 4
        np.testing.assert_array_equal(a.tensors[2], b.tensors[2])

    def test_different_seeds_differ(self, sk):
        a = gen_random(sk, 4, seed=1)
        b = gen_random(sk, 4, seed=2)
        assert a.tensors[2].flat[0] != b.tensors[2].flat[0]

    def test_entry_statistics(self, sk):
        g = gen_random(sk, 1000, seed=0)
        e = g.tensors[2].ravel()
        assert abs(e.mean()) <= 4 / np.sqrt(e.size)
        assert 0.99 <= e.var() <= 1.01

    def test_budget_rejected(self, sk):
        with pytest.raises(ValueError):
            gen_random(sk, 100, seed=0, budget=100)

    def test_scalar_only_rejected(self):
        with pytest.raises(ValueError):
            gen_random(MixtureSpec.pure(100), 4, seed=0)


class TestPlanted:
    def test_beta_zero_reduces_to_random(self, mixed):
        x = np.ones(5)
        a = gen_planted(mixed, 5, 0.0, x, seed=9)
        b = gen_random(mixed, 5, seed=9)
        for p in b.tensors:
            np.testing.assert_array_equal(a.tensors[p], b.tensors[p])

    def test_n1_scalar_shift(self, sk):
        # spike beta c_2 / n^{1/2} x^2 = beta / sqrt(2) at n = 1
        beta = 0.8
        a = gen_planted(sk, 1, beta, np.ones(1), seed=3)
        w = gen_random(sk, 1, seed=3)
        assert a.tensors[2][0, 0] == pytest.approx(w.tensors[2][0, 0] + beta / np.sqrt(2))

    def test_diagonal_bias(self, sk):
        # E[G_ii] = beta c_2 n^{-1/2} over many seeds, within 5 s.e.
        n, beta = 4, 1.0
        x = np.ones(n)
        vals = np.array(
            [gen_planted(sk, n, beta, x, seed=s).tensors[2][0, 0] for s in range(10_000)]
        )
        want = beta * sk.c(2) / np.sqrt(n)
        assert abs(vals.mean() - want) <= 5 * vals.std(ddof=1) / np.sqrt(vals.size)

    def test_rejects_nonbinary(self, sk):
        with pytest.raises(ValueError):
            gen_planted(sk, 3, 0.5, np.array([1.0, 0.5, -1.0]), seed=0)


class TestInterpolate:
    def test_endpoints_exact(self, mixed):
        g0 = gen_random(mixed, 4, seed=1)
        g1 = gen_random(mixed, 4, seed=2)
        for p in g0.tensors:
            np.testing.assert_array_equal(interpolate(g0, g1, 0.0).tensors[p], g0.tensors[p])
            np.testing.assert_array_equal(interpolate(g0, g1, 1.0).tensors[p], g1.tensors[p])

    def test_marginal_variance_preserved(self, sk):
        g0 = gen_random(sk, 400, seed=5)
        g1 = gen_random(sk, 400, seed=6)
        gs = interpolate(g0, g1, 0.4)
        assert gs.tensors[2].var() == pytest.approx(1.0, abs=0.02)

    def test_shape_mismatch(self, sk, mixed):
        with pytest.raises(ValueError):
            interpolate(gen_random(sk, 4, 0), gen_random(sk, 5, 0), 0.5)
        with pytest.raises(ValueError):
            interpolate(gen_random(sk, 4, 0), gen_random(mixed, 4, 0), 0.5)


class TestHamiltonianCalculus:
    def test_zero_vector(self, mixed):
        g = gen_random(mixed, 5, seed=0)
        assert hamiltonian(g, np.zeros(5)) == 0.0
        np.testing.assert_array_equal(grad(g, np.zeros(5)), np.zeros(5))

    def test_n1_sk_closed_form(self, sk):
        g = gen_random(sk, 1, seed=2)
        val = hamiltonian(g, np.array([0.7]))
        assert val == pytest.approx(sk.c(2) * g.tensors[2][0, 0] * 0.49)

    def test_naive_reimplementation(self, mixed, gen):
        # independent loop-based contraction oracle at n = 4
        g = gen_random(mixed, 4, seed=8)
        x = gen.uniform(-1, 1, 4)
        want = 0.0
        for p, T in g.tensors.items():
            acc = 0.0
            for idx in np.ndindex(*T.shape):
                term = T[idx]
                for i in idx:
                    term *= x[i]
                acc += term
            want += mixed.c(p) / 4 ** ((p - 1) / 2) * acc
        assert hamiltonian(g, x) == pytest.approx(want, rel=1e-12)

    def test_covariance_identity(self, sk, gen):
        # sample covariance of (H(x1), H(x2)) over seeds vs n xi(<x1,x2>/n)
        n = 6
        x1 = np.where(gen.uniform(size=n) < 0.5, -1.0, 1.0)
        x2 = np.where(gen.uniform(size=n) < 0.5, -1.0, 1.0)
        h = np.array(
            [
                hamiltonian(gen_random(sk, n, seed=s), np.stack([x1, x2]))
                for s in range(2000)
            ]
        )
        c = np.cov(h.T)[0, 1]
        want = n * sk.xi(float(x1 @ x2) / n)
        se = np.sqrt((np.var(h[:, 0]) * np.var(h[:, 1]) + c * c) / 2000)
        assert abs(c - want) <= 5 * se

    def test_grad_fd(self, mixed, gen):
        g = gen_random(mixed, 8, seed=1)
        m = gen.uniform(-0.9, 0.9, 8)
        eps = 1e-6
        fd = np.array(
            [
                (hamiltonian(g, m + eps * e) - hamiltonian(g, m - eps * e)) / (2 * eps)
                for e in np.eye(8)
            ]
        )
        np.testing.assert_allclose(grad(g, m), fd, rtol=1e-6, atol=1e-8)

    def test_sk_grad_matrix_oracle(self, sk, gen):
        n = 40
        g = gen_random(sk, n, seed=12)
        m = gen.uniform(-1, 1, n)
        G2 = g.tensors[2]
        want = sk.c(2) / np.sqrt(n) * (G2 + G2.T) @ m
        np.testing.assert_allclose(grad(g, m), want, atol=1e-12)

    def test_hessian_fd_and_symmetry(self, mixed, gen):
        g = gen_random(mixed, 8, seed=3)
        m = gen.uniform(-0.9, 0.9, 8)
        H = hessian(g, m)
        assert np.array_equal(H, H.T)
        eps = 1e-6
        fd = np.array(
            [(grad(g, m + eps * e) - grad(g, m - eps * e)) / (2 * eps) for e in np.eye(8)]
        )
        np.testing.assert_allclose(H, fd, rtol=1e-5, atol=1e-7)

    def test_pure_cubic_hessian_zero_at_origin(self):
        g = gen_random(MixtureSpec.pure(3), 5, seed=2)
        np.testing.assert_array_equal(hessian(g, np.zeros(5)), np.zeros((5, 5)))

    def test_planted_alignment(self, sk):
        # strong spike: gradient points along the plant
        n, hits = 24, 0
        for seed in range(100):
            x = np.where(np.random.default_rng(seed).uniform(size=n) < 0.5, -1.0, 1.0)
            g = gen_planted(sk, n, 3.0, x, seed)
            hits += (grad(g, x) @ x) / n > 0
        assert hits >= 99

    def test_interpolation_gradient_continuity(self, sk, gen):
        # || grad(G_s) - grad(G_0) || grows like s sqrt(n); measured constant
        n = 50
        g0 = gen_random(sk, n, seed=31)
        g1 = gen_random(sk, n, seed=32)
        m = gen.uniform(-1, 1, n)
        base = grad(g0, m)
        for s in (0.02, 0.05, 0.1):
            d = np.linalg.norm(grad(interpolate(g0, g1, s), m) - base)
            assert d <= 10.0 * s * np.sqrt(n)


class TestPartition:
    def test_beta_zero(self, sk):
        g = gen_random(sk, 6, seed=1)
        assert partition_rescaled(g, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_n1_closed_form(self, sk):
        g = gen_random(sk, 1, seed=7)
        beta = 0.6
        # x^2 = 1 collapses the sum; n beta^2 xi(1)/2 = beta^2/4
        want = np.exp(beta * sk.c(2) * g.tensors[2][0, 0] - beta**2 / 4)
        assert partition_rescaled(g, beta) == pytest.approx(want, rel=1e-12)

    def test_mean_is_one(self, sk):
        zs = np.array(
            [partition_rescaled(gen_random(sk, 10, seed=s), 0.3) for s in range(2000)]
        )
        se = zs.std(ddof=1) / np.sqrt(zs.size)
        assert abs(zs.mean() - 1.0) <= 3 * se

    def test_cap(self, sk):
        g = gen_random(sk, 8, seed=0)
        with pytest.raises(ValueError):
            partition_rescaled(g, 0.5, cap=6)


class TestTensorFile:
    def test_roundtrip(self, mixed, tmp_path):
        g = gen_random(mixed, 5, seed=77)
        path = tmp_path / "instance.gltn"
        write_tensors(path, g)
        back = read_tensors(path)
        assert back.n == 5 and back.spec == mixed and back.seed == 77
        assert back.kind == "random"
        for p in g.tensors:
            np.testing.assert_array_equal(back.tensors[p], g.tensors[p])

    def test_magic_guard(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTGL" + b"\x00" * 64)
        with pytest.raises(ValueError):
            read_tensors(path)

    def test_header_layout(self, sk, tmp_path):
        g = gen_random(sk, 2, seed=5)
        path = tmp_path / "h.gltn"
        write_tensors(path, g)
        raw = path.read_bytes()
        assert raw[:5] == b"GLTN1"
        assert int.from_bytes(raw[5:9], "little") == 2  # n
        assert int.from_bytes(raw[9:13], "little") == 2  # P
        assert np.frombuffer(raw[13:21], dtype="<f8")[0] == 0.5  # c_2^2


class TestSpinEnumeration:
    def test_all_spins_shape_and_convention(self):
        X = all_spins(3)
        assert X.shape == (8, 3)
        np.testing.assert_array_equal(X[0], [-1, -1, -1])
        np.testing.assert_array_equal(X[1], [1, -1, -1])
        assert np.all(np.abs(X) == 1)
