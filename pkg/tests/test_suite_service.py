import json

import pytest

from core.errors import NotConvergent, OutOfDomain
from core.schemas.report import CriterionResult, SuiteReport
from service.suite_service import CRITERIA, SuiteContext, SuiteService, run_criterion


def result(passed, inconclusive=False, id=1):
    return CriterionResult(id=id, name="c", passed=passed, inconclusive=inconclusive)


@pytest.mark.parametrize(
    "criteria, code",
    [
        ([result(True), result(True)], 0),
        ([result(True), result(False)], 1),
        ([result(False, True), result(True)], 4),
        ([result(False, True), result(False)], 1),
        ([], 0),
    ],
)
def test_exit_code(criteria, code):
    assert SuiteReport(criteria=criteria).exit_code == code


def test_every_criterion_is_registered():
    assert sorted(CRITERIA) == list(range(1, 13))


def test_whitney_criterion(store):
    ctx = SuiteContext(store=store, seed=11)
    outcome = run_criterion(3, ctx)
    assert outcome.passed
    assert outcome.details["partition_violations"] == 0
    assert outcome.details["overlap_multiplicity"] <= 9
    saved = json.loads(store.read("suite/criterion_03.json"))
    assert saved["passed"] is True
    assert saved["config_hash"] == "0" * 64


def test_raising_criteria(store, monkeypatch):
    def stuck(ctx):
        raise NotConvergent(0.5, "Inconclusive")

    def broken(ctx):
        raise OutOfDomain(0j, "upper half-plane")

    monkeypatch.setitem(CRITERIA, 98, ("stuck", stuck))
    monkeypatch.setitem(CRITERIA, 99, ("broken", broken))
    ctx = SuiteContext(store=store, seed=11)

    first = run_criterion(98, ctx)
    assert not first.passed and first.inconclusive
    assert first.details["error"]["error"] == "NotConvergent"

    second = run_criterion(99, ctx)
    assert not second.passed and not second.inconclusive


def test_context_caches(store):
    ctx = SuiteContext(store=store, seed=11)
    calls = []
    for _ in range(2):
        ctx.remember("key", lambda: calls.append(1) or len(calls))
    assert calls == [1]
    assert ctx.cache["key"] == 1


def test_service_writes_summary(store):
    report = SuiteService(store, 11).run([3, 42])
    assert [c.id for c in report.criteria] == [3]
    summary = json.loads(store.read("suite.json"))
    assert summary["exit_code"] == 0
    assert summary["criteria"] == [{"id": 3, "name": "Whitney overlap and partition", "passed": True}]


@pytest.mark.slow
def test_full_suite(store):
    report = SuiteService(store, 11, threads=2).run()
    assert [c.id for c in report.criteria] == list(range(1, 13))
    assert report.exit_code == 0, [c.model_dump() for c in report.criteria if not c.passed]


@pytest.mark.slow
def test_small_p_criterion_covers_eight_points(store):
    outcome = run_criterion(11, SuiteContext(store=store, seed=11))
    assert len(outcome.details["ratios"]) == 8
    assert outcome.passed
