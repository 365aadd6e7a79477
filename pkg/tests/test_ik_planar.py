import math

import numpy as np
import pytest
from scipy.optimize import minimize

from armtwin.errors import OutOfWorkspace, Unreachable
from armtwin.ik import ik_planar_2r, planar_fk, solve_ik
from armtwin.model import builtin_preset


def oracle_planar_solutions(l1, l2, px, py, grid=720):
    """Independent enumeration oracle: dense grid search over both joint
    angles followed by local polishing of every basin below threshold."""

    def cost(q):
        fx, fy = planar_fk(l1, l2, q[0], q[1])
        return (fx - px) ** 2 + (fy - py) ** 2

    th = np.linspace(-math.pi, math.pi, grid, endpoint=False)
    t1, t2 = np.meshgrid(th, th, indexing="ij")
    fx = l1 * np.cos(t1) + l2 * np.cos(t1 + t2)
    fy = l1 * np.sin(t1) + l2 * np.sin(t1 + t2)
    err = (fx - px) ** 2 + (fy - py) ** 2

    found = []
    cell = 2 * math.pi / grid
    for i, j in zip(*np.where(err < (3 * cell) ** 2)):
        res = minimize(cost, [t1[i, j], t2[i, j]], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-24})
        if res.fun > 1e-18:
            continue
        q = np.array([math.remainder(v, math.tau) for v in res.x])
        if not any(np.max(np.abs(q - f)) < 1e-6 for f in found):
            found.append(q)
    return found


@pytest.mark.parametrize(
    "target",
    [(1.0, 1.0), (1.5, -0.3), (-0.8, 0.9), (0.2, 0.1), (1.9, 0.0)],
)
def test_solver_matches_enumeration_oracle(target):
    solutions = ik_planar_2r(1.0, 1.0, target)
    oracle = oracle_planar_solutions(1.0, 1.0, *target)
    assert len(solutions.solutions) == len(oracle)
    for sol in solutions.solutions:
        assert any(np.max(np.abs(sol.q - q)) < 1e-6 for q in oracle)


def test_two_branches_for_interior_target():
    # frozen values confirmed by the enumeration oracle above
    solutions = ik_planar_2r(1.0, 1.0, (1.0, 1.0))
    branches = {str(s.branch): np.degrees(s.q) for s in solutions.solutions}
    assert set(branches) == {"elbow-up", "elbow-down"}
    assert np.allclose(branches["elbow-down"], [0.0, 90.0], atol=1e-9)
    assert np.allclose(branches["elbow-up"], [90.0, -90.0], atol=1e-9)


def test_full_extension_single_branch():
    solutions = ik_planar_2r(1.0, 1.0, (2.0, 0.0))
    assert len(solutions.solutions) == 1
    assert np.allclose(solutions.solutions[0].q, [0.0, 0.0], atol=1e-12)


def test_unreachable_reports_deficit():
    with pytest.raises(Unreachable) as err:
        ik_planar_2r(1.0, 1.0, (3.0, 0.0))
    assert err.value.deficit == pytest.approx(1.0)


def test_inner_annulus_unreachable():
    with pytest.raises(Unreachable) as err:
        ik_planar_2r(1.0, 0.4, (0.1, 0.0))
    assert err.value.deficit == pytest.approx(0.5)


def test_every_branch_fk_verified(rng):
    for _ in range(2000):
        l1, l2 = rng.uniform(0.2, 2.0, 2)
        rho = rng.uniform(abs(l1 - l2), l1 + l2)
        ang = rng.uniform(-math.pi, math.pi)
        target = (rho * math.cos(ang), rho * math.sin(ang))
        solutions = ik_planar_2r(l1, l2, target)
        assert 1 <= len(solutions.solutions) <= 2
        for sol in solutions.solutions:
            fx, fy = planar_fk(l1, l2, *sol.q)
            assert math.hypot(fx - target[0], fy - target[1]) < 1e-9


def test_interior_exactly_two_boundary_one(rng):
    for _ in range(2000):
        rho = rng.uniform(0.05, 1.95)
        ang = rng.uniform(-math.pi, math.pi)
        solutions = ik_planar_2r(1.0, 1.0, (rho * math.cos(ang), rho * math.sin(ang)))
        c2 = (rho * rho - 2.0) / 2.0
        s2 = math.sqrt(max(0.0, 1 - c2 * c2))
        assert len(solutions.solutions) == (1 if s2 < 1e-9 else 2)


def test_planar_model_dispatch_filters_limits():
    model = builtin_preset("planar2r")
    solutions = solve_ik(model, (1.0, 1.0))
    assert len(solutions.solutions) == 2

    # shrink the elbow limit so only one branch survives
    import armtwin.model as m

    tight = m.RobotModel(
        "tight",
        (
            (m.DHRow(1.0, 0.0, 0.0), m.JointLimit(-math.pi, math.pi)),
            (m.DHRow(1.0, 0.0, 0.0), m.JointLimit(0.0, math.pi)),
        ),
        "planar2r",
    )
    solutions = solve_ik(tight, (1.0, 1.0))
    assert [str(s.branch) for s in solutions.solutions] == ["elbow-down"]
    assert solutions.rejected and "outside" in solutions.rejected[0][1]

    # elbow pinned to a sliver that excludes both +/-90 degree branches
    pinned = m.RobotModel(
        "pinned",
        (
            (m.DHRow(1.0, 0.0, 0.0), m.JointLimit(-math.pi, math.pi)),
            (m.DHRow(1.0, 0.0, 0.0), m.JointLimit(0.0, 0.5)),
        ),
        "planar2r",
    )
    with pytest.raises(OutOfWorkspace):
        solve_ik(pinned, (1.0, 1.0))


def test_invalid_inputs():
    with pytest.raises(ValueError):
        ik_planar_2r(0.0, 1.0, (1.0, 0.0))
    with pytest.raises(ValueError):
        ik_planar_2r(1.0, 1.0, (float("inf"), 0.0))
