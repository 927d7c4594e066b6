import numpy as np
import pytest

from vortexlab.errors import EmptySubobject, RankTwoSecondFactor
from vortexlab.stability import (
    make_model,
    pair_is_stable,
    slope,
    tau_hat,
    tau_walls,
    triple_is_stable,
)

FOUR_PI = 4 * np.pi


def test_slope_examples():
    assert slope([3]) == 3
    assert slope([1, 2]) == pytest.approx(1.5)
    assert slope([0, 0, 0]) == 0
    with pytest.raises(EmptySubobject):
        slope([])


def test_pair_stable_rank_one():
    model = make_model([0], [0])
    # tau_hat = 1 at tau = 4 pi: mu = 0 < 1
    assert pair_is_stable(model, FOUR_PI).kind == "Stable"


def test_pair_unstable_with_witness():
    model = make_model([2, 0], [1])
    verdict = pair_is_stable(model, FOUR_PI)  # tau_hat = 1
    assert verdict.kind == "Unstable"
    assert verdict.witness == (0,)


def test_pair_wall_case():
    model = make_model([2, 0], [1])
    verdict = pair_is_stable(model, 2 * FOUR_PI)  # tau_hat = 2 = mu({2})
    assert verdict.kind == "Wall"


def test_quotient_condition():
    # phi rides in a high-degree summand: quotient slope too small destabilizes
    model = make_model([3, 0], [0])
    # tau_hat = 2: sub-sum {3} has slope 3 > 2 -> unstable regardless
    assert pair_is_stable(model, 2 * FOUR_PI).kind == "Unstable"
    # tau_hat = 3.5: condition (1) ok (3 < 3.5), quotient by {3} has slope 0 < 3.5
    verdict = pair_is_stable(model, 3.5 * FOUR_PI)
    assert verdict.kind == "Unstable"
    assert verdict.witness == (0,)


def test_permutation_invariance():
    a = make_model([2, 0, 1], [1])
    b = make_model([0, 1, 2], [0])  # same data permuted, support follows
    for factor in (0.6, 1.1, 1.9, 3.0):
        assert pair_is_stable(a, factor * FOUR_PI).kind == pair_is_stable(b, factor * FOUR_PI).kind


def test_twist_shift_invariance():
    base = make_model([2, 0], [1])
    c = 3
    shifted = make_model([2 + c, 0 + c], [1])
    for factor in (0.5, 1.3, 2.2):
        v1 = pair_is_stable(base, factor * FOUR_PI)
        v2 = pair_is_stable(shifted, (factor + c) * FOUR_PI)
        assert v1.kind == v2.kind


def test_triple_reduces_to_pair():
    model = make_model([1], [0])
    for factor in (0.7, 1.3):
        v_triple = triple_is_stable(model, 0, factor * FOUR_PI)
        v_pair = pair_is_stable(model, factor * FOUR_PI)
        assert v_triple.kind == v_pair.kind
    # degree shift: {1} twisted by a degree-1 line reduces to {0}
    shifted = triple_is_stable(model, 1, 0.5 * FOUR_PI)
    assert shifted.kind == pair_is_stable(make_model([0], [0]), 0.5 * FOUR_PI).kind


def test_triple_rank_guard():
    with pytest.raises(RankTwoSecondFactor):
        triple_is_stable(make_model([1], [0]), 0, FOUR_PI, line_rank2=2)


def test_tau_walls_enumeration():
    ws = tau_walls([2, 0], 1.0)
    # sub-sums {2}, {0}, {2,0} give tau_hat in {2, 0, 1}
    assert np.allclose(sorted(ws.walls), [0.0, FOUR_PI, 2 * FOUR_PI])
    single = tau_walls([3], 1.0)
    assert np.allclose(single.walls, [3 * FOUR_PI])


def test_walls_match_wall_verdicts():
    # soundness: a Wall verdict can only happen at a member of tau_walls, and
    # away from the walls the verdict is always decided
    model = make_model([2, 0], [1])
    ws = tau_walls(model)
    probes = [0.5 * FOUR_PI, 1.5 * FOUR_PI, 2.5 * FOUR_PI, -FOUR_PI]
    for tau in probes:
        assert pair_is_stable(model, tau).kind != "Wall"
    # boundary verdicts at walls: Wall unless a strict violation dominates
    kinds = {w: pair_is_stable(model, w).kind for w in ws.walls}
    assert kinds[2 * FOUR_PI] == "Wall"
    assert all(k in ("Wall", "Unstable") for k in kinds.values())


def test_rank_one_walls_exact():
    # on rank-1 models the Wall verdicts and tau_walls coincide exactly
    model = make_model([1], [0])
    ws = tau_walls(model)
    assert len(ws.walls) == 1
    assert pair_is_stable(model, ws.walls[0]).kind == "Wall"
    for tau in (0.9 * ws.walls[0], 1.1 * ws.walls[0]):
        assert pair_is_stable(model, tau).kind != "Wall"


def test_verdict_locally_constant_between_walls():
    model = make_model([2, 0, -1], [1])
    ws = tau_walls(model)
    walls = [w for w in ws.walls]
    edges = [min(walls) - FOUR_PI] + walls + [max(walls) + FOUR_PI]
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo < 1e-9:
            continue
        samples = np.linspace(lo, hi, 7)[1:-1]
        kinds = {pair_is_stable(model, t).kind for t in samples}
        assert len(kinds) == 1


def test_model_validation():
    with pytest.raises(EmptySubobject):
        make_model([], [])
    with pytest.raises(EmptySubobject):
        make_model([1], [3])


def test_correspondence_smoke_rank_one():
    from vortexlab.geometry import build_torus
    from vortexlab.solvers import SolveOptions
    from vortexlab.stability import correspondence_smoke_test

    geom = build_torus((1.0,), (32,))
    model = make_model([1], [0])
    opts = SolveOptions(residual_tol=1e-8, max_iters=40)
    stable = correspondence_smoke_test(model, 1.1 * FOUR_PI, geom, opts)
    assert stable["verdict"] == "Stable" and stable["solver_converged"]
    assert stable["consistent"]
    unstable = correspondence_smoke_test(model, 0.9 * FOUR_PI, geom, opts)
    assert unstable["verdict"] == "Unstable" and not unstable["solver_converged"]
    assert unstable["consistent"]
    wall = correspondence_smoke_test(model, FOUR_PI, geom, opts)
    assert wall["verdict"] == "Wall"
    assert "not asserted" in wall["note"]


def test_correspondence_smoke_split_model():
    from vortexlab.geometry import build_torus
    from vortexlab.solvers import SolveOptions
    from vortexlab.stability import correspondence_smoke_test

    geom = build_torus((1.0,), (32,))
    opts = SolveOptions(residual_tol=1e-8, max_iters=40)
    # {2, 0} with the section in the trivial summand at tau_hat = 1: unstable,
    # and the section-free degree-2 summand admits no slope-matched solution
    model = make_model([2, 0], [1])
    rep = correspondence_smoke_test(model, FOUR_PI, geom, opts)
    assert rep["verdict"] == "Unstable"
    assert not rep["solver_converged"]
    assert rep["consistent"]
