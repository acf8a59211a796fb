import pytest

from polysched.certify import (
    blass_duals,
    brute_force_opt,
    check_blass_cert,
    check_completion_cert,
    completion_duals,
    export_certificate,
    flowtime_lower_bound,
    slot_trace,
    smith_opt,
    weighted_median,
)
from polysched.engine import metrics, simulate
from polysched.errors import CertificateError, MissingDualsError, OracleError, SlotWidthError
from polysched.instances import Instance, make_job
from polysched.schedulers import BlassScheduler, MaxMinFair, ProportionalFairness


def _pf_cert(inst, s=32.0):
    tr = simulate(inst, ProportionalFairness())
    st = slot_trace(tr)
    cert = completion_duals(st, tr.weights, tr.sizes, s=s, opt_speed=tr.speed)
    return tr, st, cert


def _blass(inst, epsilon=0.5):
    sched = BlassScheduler(epsilon=epsilon)
    tr = simulate(inst, sched, speed=sched.config.eta)
    return tr, blass_duals(tr)


def test_weighted_median():
    assert weighted_median([1.0, 2.0, 3.0], [1.0, 1.0, 1.0]) == 2.0
    assert weighted_median([1.0, 2.0], [3.0, 1.0]) == 1.0
    assert weighted_median([2.0, 1.0], [1.0, 1.0]) == 1.0
    with pytest.raises(CertificateError):
        weighted_median([], [])
    with pytest.raises(CertificateError):
        weighted_median([1.0], [1.0, 2.0])


def test_single_job_alpha_is_its_cost():
    inst = Instance(family="multidim", jobs=(make_job(0, 2.0, 1.0, 0.0, [1.0]),), capacities=(1.0,))
    tr, st, cert = _pf_cert(inst)
    assert st.T >= 100
    assert cert.alpha[0] == pytest.approx(2.0)
    assert check_completion_cert(cert, st, tr.weights, tr.sizes).ok


def test_slots_follow_segments(single_resource):
    tr = simulate(single_resource, ProportionalFairness())
    st = slot_trace(tr)
    seg_starts = {seg.start for seg in tr.segments}
    assert seg_starts <= set(st.starts.tolist())
    assert st.widths.max() <= st.delta * (1 + 1e-9)
    assert st.q.sum(axis=0) == pytest.approx([tr.sizes[j] for j in st.job_ids])


def test_completion_cert_on_pf_trace(single_resource):
    tr, st, cert = _pf_cert(single_resource)
    report = check_completion_cert(cert, st, tr.weights, tr.sizes)
    assert report.ok, report.violations
    assert report.alg == pytest.approx(metrics(tr).weighted_completion)
    assert cert.objective >= 0.24 * report.alg
    assert report.lower_bound <= smith_opt(single_resource)
    assert report.slotting_error <= 1e-9
    doc = export_certificate(cert, report)
    assert doc["ok"] and doc["duals"]["s"] == 32.0


def test_completion_cert_with_releases(unrelated):
    tr, st, cert = _pf_cert(unrelated)
    report = check_completion_cert(cert, st, tr.weights, tr.sizes)
    assert report.ok, report.violations
    assert cert.alpha.sum() >= 0.5 * report.alg


@pytest.mark.parametrize("field", ["alpha", "beta", "zeta"])
def test_completion_cert_detects_tampering(two_resource, field):
    tr, st, cert = _pf_cert(two_resource)
    setattr(cert, field, getattr(cert, field) * 1.01)
    report = check_completion_cert(cert, st, tr.weights, tr.sizes)
    assert not report.ok
    assert report.violation_count > 0


def test_completion_cert_needs_duals(single_resource):
    tr = simulate(single_resource, MaxMinFair())
    with pytest.raises(MissingDualsError):
        completion_duals(slot_trace(tr), tr.weights, tr.sizes)


def test_slot_width_limits(single_resource):
    tr = simulate(single_resource, ProportionalFairness())
    with pytest.raises(SlotWidthError):
        slot_trace(tr, delta=1.0)
    with pytest.raises(SlotWidthError):
        slot_trace(tr, delta=0.0)


def test_blass_cert_identities(unrelated):
    tr, cert = _blass(unrelated)
    report = check_blass_cert(cert, unrelated, tr)
    assert report.ok, report.violations
    assert cert.Delta.sum() == pytest.approx(metrics(tr).total_flow, rel=1e-9)
    # objective = sum F / ((k + 2)(k + 3)) for k = 2
    assert report.ratio == pytest.approx(20.0, rel=1e-6)
    assert cert.alpha == pytest.approx(cert.Delta / 4)


def test_blass_cert_on_router_tree(tree_one):
    tr, cert = _blass(tree_one)
    report = check_blass_cert(cert, tree_one, tr)
    assert report.ok, report.violations
    assert report.lower_bound == pytest.approx(metrics(tr).total_flow / 20)


def test_blass_cert_finer_epsilon(unrelated):
    tr, cert = _blass(unrelated, epsilon=0.25)
    assert cert.k == 4
    report = check_blass_cert(cert, unrelated, tr)
    assert report.ok, report.violations
    assert report.ratio == pytest.approx(42.0, rel=1e-6)


def test_blass_cert_detects_tampering(unrelated):
    tr, cert = _blass(unrelated)
    cert.beta = cert.beta * 1.01
    report = check_blass_cert(cert, unrelated, tr)
    assert not report.ok
    assert any(v.kind == "beta construction" for v in report.violations)
    assert not report.checks["objective identity"]


def test_blass_cert_needs_blass_trace(unrelated):
    tr = simulate(unrelated, ProportionalFairness())
    with pytest.raises(CertificateError):
        blass_duals(tr)
    slow = simulate(unrelated, BlassScheduler(epsilon=0.5), speed=1.0)
    with pytest.raises(CertificateError):
        blass_duals(slow)


def test_smith_opt():
    jobs = (make_job(0, 1.0, 1.0, 0.0, [1.0]), make_job(1, 2.0, 1.0, 0.0, [1.0]))
    inst = Instance(family="multidim", jobs=jobs, capacities=(1.0,))
    assert smith_opt(inst) == pytest.approx(4.0)


def test_smith_opt_preconditions(two_resource, unrelated):
    with pytest.raises(OracleError):
        smith_opt(two_resource)
    with pytest.raises(OracleError):
        smith_opt(unrelated)
    late = Instance(family="multidim", jobs=(make_job(0, 1.0, 1.0, 1.0, [1.0]),), capacities=(1.0,))
    with pytest.raises(OracleError):
        smith_opt(late)
    partial = Instance(family="multidim", jobs=(make_job(0, 1.0, 1.0, 0.0, [0.5]),), capacities=(1.0,))
    with pytest.raises(OracleError):
        smith_opt(partial)


def _machines(specs, m):
    jobs = tuple(make_job(j, 1.0, p, r, s) for j, (p, r, s) in enumerate(specs))
    return Instance(family="unrelated", jobs=jobs, capacities=tuple([1.0] * m))


def test_brute_force_small_cases():
    assert brute_force_opt(_machines([(1.0, 0.0, [1.0])], 1)).value == 1.0
    assert brute_force_opt(_machines([(1.0, 0.0, [1.0, 1.0])] * 2, 2)).value == 2.0
    assert brute_force_opt(_machines([(1.0, 0.0, [1.0])] * 2, 1)).value == 3.0
    # the fast machine finishes two units per slot
    assert brute_force_opt(_machines([(2.0, 0.0, [1.0, 2.0]), (1.0, 0.0, [1.0, 0.0])], 2)).value == 2.0


@pytest.mark.parametrize("size, speed, delta, expected", [
    (1.0, 0.5, 0.25, 2.0),
    (3.8, 1.9, 0.5, 2.0),
    (1.0, 0.75, 1.0, 4.0 / 3.0),
])
def test_brute_force_fractional_speed(size, speed, delta, expected):
    result = brute_force_opt(_machines([(size, 0.0, [speed])], 1), delta=delta)
    assert result.value == pytest.approx(expected, rel=1e-12)


def test_brute_force_slow_machine_matches_smith():
    sizes = [1.0, 2.0, 0.5]
    single = Instance(family="multidim", jobs=tuple(make_job(j, 1.0, p, 0.0, [1.0]) for j, p in enumerate(sizes)),
                      capacities=(1.0,))
    slow = _machines([(p, 0.0, [0.5]) for p in sizes], 1)
    result = brute_force_opt(slow, delta=0.5)
    assert result.value == pytest.approx(smith_opt(single) / 0.5, rel=1e-12)


def test_brute_force_flow_objective():
    inst = _machines([(1.0, 0.0, [1.0]), (1.0, 1.0, [1.0])], 1)
    assert brute_force_opt(inst, "completion").value == 3.0
    result = brute_force_opt(inst, "flow")
    assert result.value == 2.0
    assert result.bias_bound == 2.0


def test_brute_force_limits(two_resource):
    with pytest.raises(OracleError):
        brute_force_opt(two_resource)
    with pytest.raises(OracleError):
        brute_force_opt(_machines([(1.0, 0.0, [1.0])] * 6, 1))
    with pytest.raises(OracleError):
        brute_force_opt(_machines([(1.0, 0.0, [1.0])], 1), objective="makespan")
    with pytest.raises(OracleError):
        brute_force_opt(_machines([(100.0, 0.0, [1.0])], 1))


def test_flow_bound_below_slotted_optimum(unrelated):
    tr = simulate(unrelated, ProportionalFairness())
    bound = flowtime_lower_bound(unrelated, tr)
    assert 0.0 < bound <= brute_force_opt(unrelated, "flow").value
    assert bound <= metrics(tr).weighted_flow
