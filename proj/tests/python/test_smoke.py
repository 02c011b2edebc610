import json

import numpy as np
import pytest

import csof


def test_builtin_problems_expose_their_boundary_data():
    p = csof.Problem.builtin("case1")
    assert (p.N, p.nx, p.nu, p.ny) == (20, 4, 2, 3)
    np.testing.assert_array_equal(p.muf, [11, 3, 0, 0])
    assert p.Paug0.shape == (8, 8)
    assert csof.Problem.builtin("case3").underweight_p == 0.25
    with pytest.raises(ValueError):
        csof.Problem.builtin("case9")


def test_problem_json_round_trip_and_errors():
    p = csof.Problem.builtin("case2")
    q = csof.Problem.from_json(p.to_json())
    assert q.to_json() == p.to_json()
    with pytest.raises(csof.ParseError):
        csof.Problem.from_json("{")
    data = json.loads(p.to_json())
    data["horizon"]["N"] = 1
    with pytest.raises(csof.ValidationError, match="N must be >= 2"):
        csof.Problem.from_json(json.dumps(data))


def test_filter_and_zero_gain_propagation_agree_with_legacy_for_case1():
    p = csof.Problem.builtin("case1")
    sched = csof.design_filter(p)
    assert len(sched) == p.N
    assert sched.stages[0].L.shape == (4, 3)
    pol = csof.Policy.zero(p.N, p.nx, p.nu)
    traj = csof.propagate(p, sched, pol)
    legacy = csof.legacy_recursion(p, sched, pol)
    for post, leg in zip(traj.posterior, legacy):
        np.testing.assert_allclose(post.P, leg.P, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(post.Phat, leg.Phat, rtol=1e-9, atol=1e-12)


def test_policy_rejects_mismatched_lengths():
    with pytest.raises(ValueError):
        csof.Policy([np.zeros(2)], [])


def test_solve_validate_and_serialize(tmp_path):
    p = csof.Problem.builtin("case1")
    seen = []
    res = csof.solve(p, on_iteration=lambda rec: seen.append(rec.iter))
    assert res.converged, res.message
    assert res.status == "converged"
    assert seen == list(range(len(res.trace)))
    assert res.trace[-1].max_e < 1e-5
    last = res.predicted.posterior[-1]
    np.testing.assert_allclose(last.mu, p.muf, atol=1e-6)
    assert len(res.policy) == p.N
    assert res.policy.K[0].shape == (2, 4)

    report = csof.validate(res, n_trials=4000, seed=11)
    assert report.n_trials == 4000
    assert report.consistent([0, 10, 19])
    again = csof.monte_carlo(p, res.schedule, res.policy, n_trials=4000, seed=11, threads=3)
    np.testing.assert_array_equal(again.stages[-1].cov, report.stages[-1].cov)

    path = tmp_path / "result.json"
    res.save(path)
    back = csof.Result.load(path)
    assert back.status == "converged"
    np.testing.assert_array_equal(back.policy.K[5], res.policy.K[5])
    assert back.monte_carlo.seed == 11
    assert json.loads(res.to_json())["format_version"] == 1


def test_validate_requires_a_converged_result():
    p = csof.Problem.builtin("case1")
    data = json.loads(p.to_json())
    data["scp"]["max_iters"] = 1
    res = csof.solve(csof.Problem.from_json(json.dumps(data)))
    assert res.status == "no_convergence"
    with pytest.raises(csof.PreconditionError):
        csof.validate(res, n_trials=10)
