import math
import os
import tempfile

import numpy as np

from .errors import ValidationError


def geometric_grid(start, stop, num):
    """``num`` points from ``start`` to ``stop`` with constant ratio."""
    if num < 2 or start <= 0 or stop <= 0:
        raise ValidationError("geometric grid needs num >= 2 and positive endpoints")
    return np.geomspace(start, stop, num)


def dyadic_grid(e_hi, e_lo):
    """``2**-e_hi, ..., 2**-e_lo`` in decreasing order."""
    return np.array([2.0 ** -k for k in range(e_hi, e_lo + 1)])


def exact_sum(values):
    """Order-independent sum (correctly rounded), used for parallel reductions."""
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        return complex(math.fsum(arr.real.ravel()), math.fsum(arr.imag.ravel()))
    return math.fsum(arr.ravel())


def gauss_panels(a, b, n_panels, nodes_per_panel, breaks=()):
    """Composite Gauss-Legendre rule on [a, b].

    Extra ``breaks`` inside (a, b) become panel edges so that kinks of the
    integrand never sit inside a panel.
    """
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    edges = np.linspace(a, b, n_panels + 1)
    extra = [t for t in breaks if a < t < b]
    if extra:
        edges = np.unique(np.concatenate([edges, extra]))
    h = np.diff(edges)
    nodes = (edges[:-1, None] + (x[None, :] + 1.0) * h[:, None] / 2.0).ravel()
    weights = (w[None, :] * h[:, None] / 2.0).ravel()
    return nodes, weights


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temp file in the same directory + rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x):
    """Locale-independent, round-trippable float formatting."""
    return repr(float(x))
