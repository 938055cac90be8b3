"""Deterministic CSV output helpers.

All files carry a header row; floats are formatted with a fixed number of
significant digits (17 by default, override with BEAMCTL_FLOAT_DIGITS) so
identical inputs produce byte-identical files.
"""

import os

ENV_DIGITS = "BEAMCTL_FLOAT_DIGITS"


def float_digits():
    raw = os.environ.get(ENV_DIGITS, "")
    try:
        d = int(raw)
    except ValueError:
        return 17
    return min(max(d, 1), 17)


def fmt(value):
    if isinstance(value, float):
        return "%.*g" % (float_digits(), value)
    return str(value)


def write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


class RowWriter:
    """Incremental CSV writer flushed every ``flush_every`` rows."""

    def __init__(self, path, header, flush_every=100):
        self._fh = open(path, "w")
        self._fh.write(",".join(header) + "\n")
        self._since_flush = 0
        self._flush_every = max(int(flush_every), 1)

    def write(self, row):
        self._fh.write(",".join(fmt(v) for v in row) + "\n")
        self._since_flush += 1
        if self._since_flush >= self._flush_every:
            self._fh.flush()
            self._since_flush = 0

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
