import numpy as np
import pytest

from beamctl.model import (BeamModel, CoefficientField, ControlSystem,
                           KypCertificate, SprChannel, validate)

from conftest import paper_channel, unit_beam


class TestCoefficientField:
    def test_constant(self):
        f = CoefficientField.constant(2.5, 1.0)
        assert f(0.3) == 2.5
        assert f.is_constant
        assert f.is_positive()

    def test_derivatives_exact(self):
        # f = 1 + 2x + 3x^2 + x^4 on [0, 2]
        f = CoefficientField([0.0, 2.0], [[1.0, 2.0, 3.0, 0.0, 1.0]])
        x = 0.7
        assert f(x) == pytest.approx(1 + 2*x + 3*x**2 + x**4, rel=1e-15)
        assert f(x, 1) == pytest.approx(2 + 6*x + 4*x**3, rel=1e-15)
        assert f(x, 2) == pytest.approx(6 + 12*x**2, rel=1e-15)
        assert f(x, 3) == pytest.approx(24*x, rel=1e-15)
        assert f(x, 4) == pytest.approx(24.0, rel=1e-15)
        with pytest.raises(ValueError):
            f(x, 5)

    def test_positivity_fails_at_boundary_zero(self):
        f = CoefficientField([0.0, 1.0], [[0.0, 1.0]])   # f(x) = x
        assert not f.is_positive()
        assert f.min_on_grid() == 0.0

    def test_piecewise_continuity_warning(self):
        with pytest.warns(UserWarning, match="mismatch at x=0.5"):
            CoefficientField([0.0, 0.5, 1.0], [[1.0], [2.0]])

    def test_smooth_piecewise_no_warning(self, recwarn):
        # same polynomial on both pieces, expressed in local coordinates
        CoefficientField([0.0, 0.5, 1.0],
                         [[1.0, 1.0], [1.5, 1.0]])       # f = 1 + x
        assert not recwarn.list

    def test_is_constant_piecewise(self):
        f = CoefficientField([0.0, 0.5, 1.0], [[2.0], [2.0]])
        assert f.is_constant
        g = CoefficientField([0.0, 1.0], [[2.0, 0.5]])
        assert not g.is_constant


class TestTypes:
    def test_beam_rejects_nonpositive_geometry(self):
        with pytest.raises(ValueError):
            unit_beam(tip_mass=0.0)
        with pytest.raises(ValueError):
            unit_beam(length=-1.0)

    def test_channel_rejects_bad_gains(self):
        with pytest.raises(ValueError):
            SprChannel(a=[[-1.0]], b=[1.0], c=[1.0], d=-0.1, k=1.0)
        with pytest.raises(ValueError):
            SprChannel(a=[[-1.0]], b=[1.0], c=[1.0], d=0.1, k=0.0)

    def test_hurwitz_detection(self):
        stable = SprChannel(a=[[-1.0]], b=[1.0], c=[1.0], d=0.1, k=1.0)
        unstable = SprChannel(a=np.eye(2), b=np.ones(2), c=np.ones(2),
                              d=0.1, k=1.0)
        assert stable.is_hurwitz()
        assert not unstable.is_hurwitz()

    def test_certificate_delta_bounds(self):
        with pytest.raises(ValueError):
            KypCertificate(p=np.eye(1), q=np.zeros(1), eps=1.0,
                           delta=0.05, d=0.02)
        cert = KypCertificate(p=np.eye(1), q=np.zeros(1), eps=1.0,
                              delta=0.01, d=0.02)
        assert cert.delta_tilde == pytest.approx(np.sqrt(0.02))

    def test_certificate_dimension_check(self):
        cert = KypCertificate(p=np.eye(2), q=np.zeros(2), eps=1.0,
                              delta=0.02, d=0.02)
        with pytest.raises(ValueError):
            SprChannel(a=[[-1.0]], b=[1.0], c=[1.0], d=0.02, k=1.0,
                       certificate=cert)


class TestValidate:
    def test_paper_example_physical_checks_pass(self, paper_system):
        report = validate(paper_system)
        assert report.physical_ok
        assert not report.ok                     # no certificate attached yet
        kyp_rows = [c for c in report.checks if c.name.startswith("kyp")]
        assert all("certificate required" in c.detail for c in kyp_rows)

    def test_positive_matrix_fails_hurwitz(self, paper_system):
        bad = SprChannel(a=np.eye(10), b=np.ones(10), c=np.ones(10),
                         d=0.02, k=0.01)
        system = ControlSystem(beam=paper_system.beam, channel1=bad,
                               channel2=paper_system.channel2)
        report = validate(system)
        row = next(c for c in report.checks if c.name == "hurwitz A1")
        assert row.passed is False

    def test_degenerate_density_fails_positivity(self, paper_system):
        beam = BeamModel(
            mu=CoefficientField([0.0, 1.0], [[0.0, 1.0]]),   # mu(x) = x
            lam=CoefficientField.constant(1.0, 1.0),
            length=1.0, tip_mass=0.1, tip_inertia=0.1)
        system = ControlSystem(beam=beam, channel1=paper_system.channel1,
                               channel2=paper_system.channel2)
        report = validate(system)
        row = next(c for c in report.checks if c.name == "mu positive")
        assert row.passed is False
        assert not report.physical_ok

    def test_validate_is_pure(self, paper_system):
        assert validate(paper_system) == validate(paper_system)

    def test_every_numeric_check_reports_tolerance(self, paper_system):
        report = validate(paper_system)
        for check in report.checks:
            if check.passed is not None and "certificate required" not in check.detail:
                assert check.tolerance is not None

    def test_report_renders(self, paper_system):
        text = str(validate(paper_system))
        assert "hurwitz A1" in text and "spr margin ch2" in text
