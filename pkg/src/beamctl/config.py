"""YAML configuration: beam block, two controller blocks, initial data and
experiment settings.

Schema (keys in parentheses optional)::

    beam:
      length: 1.0
      tip_mass: 0.1
      tip_inertia: 0.1
      mu:  {breakpoints: [0.0, 1.0], coefficients: [[1.0]]}
      lam: {breakpoints: [0.0, 1.0], coefficients: [[1.0]]}
    controller1:                 # acts on the tip slope
      dim: 10
      a: [...]                   # row-major, flat (n*n) or nested rows
      b: [...]
      c: [...]
      d: 0.02
      k: 0.01
      (certificate): {p: [...], q: [...], eps: 2.0, delta: 0.02}
    controller2: ...             # acts on the tip deflection
    (initial):
      (u0): [0.0, 0.0, 1.0]      # polynomial, ascending powers
      (v0): [0.0]
      (zeta1): [...]             # default zeros
      (zeta2): [...]
    (simulation):
      (t_final): 50.0
      (dt): 0.01
      (mesh): 100                # element count P
      (flush_every): 100
    (experiment):
      (kind): simulate

Missing required keys raise ConfigError naming the full key path.
"""

import numpy as np
import yaml

from .errors import ConfigError
from .model import (BeamModel, CoefficientField, ControlSystem,
                    KypCertificate, SprChannel)

DEFAULT_INITIAL_U0 = (0.0, 0.0, 1.0)       # u0(x) = x^2
DEFAULT_INITIAL_V0 = (0.0,)


def _get(mapping, path):
    node = mapping
    walked = []
    for key in path.split("."):
        walked.append(key)
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"missing required key '{'.'.join(walked)}'")
        node = node[key]
    return node


def _matrix(raw, n, path):
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 1:
        if arr.size != n * n:
            raise ConfigError(
                f"'{path}' must have {n * n} row-major entries, got {arr.size}")
        arr = arr.reshape(n, n)
    if arr.shape != (n, n):
        raise ConfigError(f"'{path}' must be {n}x{n}")
    return arr


def _vector(raw, n, path):
    arr = np.asarray(raw, dtype=float).reshape(-1)
    if arr.size != n:
        raise ConfigError(f"'{path}' must have {n} entries, got {arr.size}")
    return arr


def _field(block, path):
    bps = _get(block, "breakpoints")
    coeffs = _get(block, "coefficients")
    try:
        return CoefficientField(bps, coeffs)
    except ValueError as exc:
        raise ConfigError(f"invalid coefficient field at '{path}': {exc}")


def _channel(block, path):
    n = int(_get(block, "dim"))
    if n < 0:
        raise ConfigError(f"'{path}.dim' must be >= 0")
    a = _matrix(_get(block, "a"), n, f"{path}.a") if n else np.zeros((0, 0))
    b = _vector(_get(block, "b"), n, f"{path}.b") if n else np.zeros(0)
    c = _vector(_get(block, "c"), n, f"{path}.c") if n else np.zeros(0)
    d = float(_get(block, "d"))
    k = float(_get(block, "k"))
    cert = None
    if block.get("certificate") is not None:
        cb = block["certificate"]
        cert = KypCertificate(
            p=_matrix(_get(cb, "p"), n, f"{path}.certificate.p"),
            q=_vector(_get(cb, "q"), n, f"{path}.certificate.q"),
            eps=float(_get(cb, "eps")),
            delta=float(_get(cb, "delta")),
            d=d,
            provenance=f"config ({path})",
        )
    try:
        return SprChannel(a=a, b=b, c=c, d=d, k=k, certificate=cert)
    except ValueError as exc:
        raise ConfigError(f"invalid channel at '{path}': {exc}")


def load_system(doc):
    """Build the ControlSystem from a parsed configuration mapping."""
    beam_block = _get(doc, "beam")
    try:
        beam = BeamModel(
            mu=_field(_get(beam_block, "mu"), "beam.mu"),
            lam=_field(_get(beam_block, "lam"), "beam.lam"),
            length=float(_get(beam_block, "length")),
            tip_mass=float(_get(beam_block, "tip_mass")),
            tip_inertia=float(_get(beam_block, "tip_inertia")),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid beam block: {exc}")
    return ControlSystem(
        beam=beam,
        channel1=_channel(_get(doc, "controller1"), "controller1"),
        channel2=_channel(_get(doc, "controller2"), "controller2"),
    )


def load_document(path):
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} does not contain a mapping")
    return doc


def write_certificates(path, system):
    """Write the attached certificates back into a configuration file."""
    doc = load_document(path)
    for name, ch in (("controller1", system.channel1),
                     ("controller2", system.channel2)):
        if ch.certificate is None:
            continue
        cert = ch.certificate
        doc[name]["certificate"] = {
            "p": [[float(v) for v in row] for row in np.atleast_2d(cert.p)],
            "q": [float(v) for v in cert.q],
            "eps": float(cert.eps),
            "delta": float(cert.delta),
        }
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
