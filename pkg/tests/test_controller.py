import numpy as np
import pytest

from beamctl import controller
from beamctl.errors import (NoCertificateFound, NonMinimalRealization,
                            NotSpr, SingularResolvent)
from beamctl.model import SprChannel

from conftest import paper_channel, uncontrolled_channel


def scalar_channel(a=-1.0, b=10.0, c=1.0, d=0.02, k=0.01):
    return SprChannel(a=[[a]], b=[b], c=[c], d=d, k=k)


def random_stable_channel(rng, n=4, d=0.5):
    """Draw a stable channel; used for symmetry/similarity properties."""
    a = rng.standard_normal((n, n))
    a = a - (np.abs(np.linalg.eigvals(a).real).max() + 1.0) * np.eye(n)
    return SprChannel(a=a, b=rng.standard_normal(n),
                      c=rng.standard_normal(n), d=d, k=1.0)


def spr_parallel_channel(rng, n=4, d=0.3):
    """sum_i r_i / (s + a_i) + d with r_i, a_i > 0: SPR and minimal."""
    poles = np.sort(rng.uniform(0.5, 5.0, n))
    res = rng.uniform(0.2, 2.0, n)
    return SprChannel(a=np.diag(-poles), b=np.sqrt(res), c=np.sqrt(res),
                      d=d, k=1.0)


class TestTransferEval:
    def test_paper_channel_at_zero(self):
        assert controller.transfer_eval(paper_channel(), 0.0) == \
            pytest.approx(10.02)

    def test_high_frequency_limit_is_feedthrough(self):
        ch = paper_channel()
        val = controller.transfer_eval(ch, 1j * 1e8)
        assert val.real == pytest.approx(ch.d, abs=1e-12)

    def test_scalar_hand_value(self):
        val = controller.transfer_eval(scalar_channel(), 1j)
        assert val == pytest.approx(5.02 - 5.0j, rel=1e-14)

    def test_zero_dim_channel_returns_feedthrough(self):
        assert controller.transfer_eval(uncontrolled_channel(), 3j) == 0.0

    def test_singular_resolvent(self):
        with pytest.raises(SingularResolvent):
            controller.transfer_eval(scalar_channel(), -1.0)

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            ch = random_stable_channel(rng)
            s = complex(rng.standard_normal(), rng.standard_normal())
            left = controller.transfer_eval(ch, np.conj(s))
            right = np.conj(controller.transfer_eval(ch, s))
            assert left == pytest.approx(right, rel=1e-12)


class TestSprMargin:
    def test_paper_channel_margin_attained_in_limit(self):
        assert controller.spr_margin(paper_channel()) == 0.02

    def test_zero_feedthrough_is_not_spr(self):
        ch = SprChannel(a=-np.eye(3), b=np.ones(3), c=np.ones(3),
                        d=0.0, k=1.0)
        with pytest.raises(NotSpr):
            controller.spr_margin(ch)

    def test_scalar_channel_with_unit_feedthrough(self):
        ch = SprChannel(a=[[-1.0]], b=[1.0], c=[1.0], d=1.0, k=1.0)
        assert controller.spr_margin(ch) == 1.0

    def test_similarity_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            ch = spr_parallel_channel(rng)
            t = rng.standard_normal((ch.n, ch.n)) + 2.0 * np.eye(ch.n)
            sim = SprChannel(
                a=t @ ch.a @ np.linalg.inv(t),
                b=t @ ch.b,
                c=np.linalg.solve(t.T, ch.c),
                d=ch.d, k=ch.k)
            m1 = controller.spr_margin(ch)
            m2 = controller.spr_margin(sim)
            assert abs(m1 - m2) <= 1e-10 * max(1.0, abs(m1))

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            controller.spr_margin(paper_channel(), samples=1)
        with pytest.raises(ValueError):
            controller.spr_margin(paper_channel(), omega_max=-1.0)


class TestKypResidual:
    def test_trial_certificate_residual(self):
        # P = I, q = 0, eps = 0 on the paper channel: first residual is
        # |PA + A^T P|_F = |{-2I}|_F = 2 sqrt(10), second is |b - c| = 0.
        from beamctl.model import KypCertificate
        ch = paper_channel()
        cert = KypCertificate(p=np.eye(10), q=np.zeros(10), eps=0.0,
                              delta=ch.d, d=ch.d)
        r1, r2 = controller.kyp_residual(ch, cert)
        assert r1 == pytest.approx(2.0 * np.sqrt(10.0), rel=1e-14)
        assert r2 == 0.0

    def test_zero_dim_channel(self):
        ch = uncontrolled_channel()
        cert = controller.kyp_solve(ch)
        assert controller.kyp_residual(ch, cert) == (0.0, 0.0)


class TestKypSolve:
    def test_scalar_closed_form(self):
        ch = scalar_channel()
        cert = controller.kyp_solve(ch, delta=0.02)
        assert cert.p[0, 0] == pytest.approx(0.1, rel=1e-14)
        assert cert.eps == 1.0
        assert cert.q[0] == pytest.approx(np.sqrt(0.1), rel=1e-13)
        r1, r2 = controller.kyp_residual(ch, cert)
        assert r1 <= 1e-14 and r2 <= 1e-14

    def test_paper_channel_reduction(self):
        ch = paper_channel()
        assert controller.controllability_rank(ch) == 1
        assert controller.observability_rank(ch) == 1
        with pytest.warns(NonMinimalRealization):
            cert = controller.kyp_solve(ch)
        r1, r2 = controller.kyp_residual(ch, cert)
        assert r1 <= 1e-10 and r2 <= 1e-10
        assert cert.min_eig_p() > 0.0
        assert cert.delta == pytest.approx(0.02)

    def test_minimal_reduction_preserves_transfer(self):
        ch = paper_channel()
        a, b, c, v = controller.minimal_realization(ch)
        reduced = SprChannel(a=a, b=b, c=c, d=ch.d, k=ch.k)
        for s in (0.0, 1j, 2.0 + 3.0j):
            assert controller.transfer_eval(reduced, s) == pytest.approx(
                controller.transfer_eval(ch, s), rel=1e-12)

    def test_minimal_reduction_certificate_is_tight(self):
        ch = paper_channel()
        a, b, c, _ = controller.minimal_realization(ch)
        reduced = SprChannel(a=a, b=b, c=c, d=ch.d, k=ch.k)
        cert = controller.kyp_solve(reduced)
        r1, r2 = controller.kyp_residual(reduced, cert)
        assert r1 <= 1e-10 and r2 <= 1e-10

    def test_random_spr_family_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            ch = spr_parallel_channel(rng)
            margin = controller.spr_margin(ch)
            cert = controller.kyp_solve(ch, delta=min(margin, ch.d) * 0.5)
            r1, r2 = controller.kyp_residual(ch, cert)
            assert r1 <= 1e-10 and r2 <= 1e-10
            assert cert.min_eig_p() > 0.0

    def test_delta_above_feedthrough_rejected(self):
        with pytest.raises(ValueError):
            controller.kyp_solve(scalar_channel(), delta=0.05)

    def test_non_hurwitz_rejected(self):
        ch = SprChannel(a=[[1.0]], b=[1.0], c=[1.0], d=1.0, k=1.0)
        with pytest.raises(ValueError):
            controller.kyp_solve(ch, delta=0.5)

    def test_impossible_tolerance(self):
        ch = spr_parallel_channel(np.random.default_rng(5))
        with pytest.raises(NoCertificateFound):
            controller.kyp_solve(ch, delta=ch.d * 0.5, tol=1e-30)
