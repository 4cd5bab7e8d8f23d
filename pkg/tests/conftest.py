import json
import math
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from viewselect.geometry import Wedge2

FIXTURES = Path(__file__).parent / "fixtures"


def load_schema(name):
    text = resources.files("viewselect").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def pair_wedges(t, theta_p, theta_q, alpha):
    """Left camera at the origin, right camera at ``(t, 0)``, elevation angles."""
    return Wedge2((0.0, 0.0), theta_p, alpha), Wedge2((t, 0.0), math.pi - theta_q, alpha)


def clip_oracle(t, theta_p, theta_q, alpha):
    """Vertices of a pair quadrilateral by solving each pair of boundary lines.

    Independent of the library: straight 2x2 linear solves.
    """
    lines_l = {"in": theta_p - alpha, "out": theta_p + alpha}
    phi_q = math.pi - theta_q
    lines_r = {"in": phi_q + alpha, "out": phi_q - alpha}

    def meet(a, b):
        da = np.array([math.cos(a), -math.sin(a)])
        db = np.array([math.cos(b), -math.sin(b)])
        lam = np.linalg.solve(np.column_stack([da, -db]), np.array([t, 0.0]))
        return lam[0] * da

    return (
        meet(lines_l["in"], lines_r["in"]),
        meet(lines_l["out"], lines_r["in"]),
        meet(lines_l["out"], lines_r["out"]),
        meet(lines_l["in"], lines_r["out"]),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
