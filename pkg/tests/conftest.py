import numpy as np
import pytest

from beamctl.model import (BeamModel, CoefficientField, ControlSystem,
                           SprChannel)

PAPER = dict(mu=1.0, lam=1.0, length=1.0, tip_mass=0.1, tip_inertia=0.1,
             k=0.01, d=0.02, n=10)


def unit_beam(mu=1.0, lam=1.0, length=1.0, tip_mass=0.1, tip_inertia=0.1):
    return BeamModel(
        mu=CoefficientField.constant(mu, length),
        lam=CoefficientField.constant(lam, length),
        length=length, tip_mass=tip_mass, tip_inertia=tip_inertia)


def paper_channel():
    n = PAPER["n"]
    return SprChannel(a=-np.eye(n), b=np.ones(n), c=np.ones(n),
                      d=PAPER["d"], k=PAPER["k"])


def uncontrolled_channel(k=0.01):
    return SprChannel(a=np.zeros((0, 0)), b=np.zeros(0), c=np.zeros(0),
                      d=0.0, k=k)


@pytest.fixture
def paper_system():
    ch = paper_channel()
    return ControlSystem(beam=unit_beam(), channel1=ch, channel2=ch)


@pytest.fixture
def uncontrolled_system():
    ch = uncontrolled_channel()
    return ControlSystem(beam=unit_beam(), channel1=ch, channel2=ch)
