"""Shared constructions for the test suite."""

import numpy as np

from dwplab import dwp as W
from dwplab import jets as J
from dwplab import profiles as Pr
from dwplab.flows import get_model


def warp(base, rho, sigma=None, k=None, interval=(0.0, np.inf), sample=(0.3, 2.0), label=""):
    wp = W.WarpProfile(rho, sigma or rho.derivative(), k, interval, sample, label)
    return W.build(get_model(base) if isinstance(base, str) else base, wp)


def kaehler_violations():
    """One product per Kaehler condition, each breaking only that condition."""
    rho = Pr.sinh_profile()
    return {
        # k depends on the fibre angle: xi(k) != 0 (n = 2, so grad k is not required)
        "reeb_derivative_of_k": warp("hopf-s3", rho, k=lambda t, x: J.sqrt(1 + 0.5 * (1 + J.sin(x[1])) / rho(t) ** 2)),
        # sigma = 1.1 rho' breaks h = -(k / sigma) d_t(rho k) J
        "oneill_relation": warp("hopf-s3", rho, sigma=rho.derivative().scaled(1.1)),
        # (rho k)^2 = rho^2 + a(x) keeps the O'Neill relation but k is not transversally constant
        "transverse_gradient_of_k": warp("hopf-s5", rho, k=lambda t, x: J.sqrt(1 + 0.5 * J.sin(x[0]) ** 2 / rho(t) ** 2)),
    }
