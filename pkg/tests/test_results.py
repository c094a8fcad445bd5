from uuid import uuid4

from ageleak.results import CheckRecord, InMemoryResults, SweepRecord
from ageleak.tradeoff import SweepSpec, sweep


def test_records_are_grouped_by_run():
    history = InMemoryResults()
    first, second = uuid4(), uuid4()
    history.add_record(CheckRecord(name="fibonacci", run_id=first, passed=True))
    history.add_record(CheckRecord(name="ddad", run_id=first, passed=False, detail="off"))
    history.add_record(CheckRecord(name="fibonacci", run_id=second, passed=True))

    assert list(history.get_run_records(first)) == ["fibonacci", "ddad"]
    assert list(history.get_latest_run_records()) == ["fibonacci"]
    assert set(history.get_named_records("fibonacci")) == {first, second}
    assert list(history.get_named_records("fibonacci", [second])) == [second]


def test_failed_checks():
    history = InMemoryResults()
    run_id = uuid4()
    history.add_record(CheckRecord(name="fibonacci", run_id=run_id, passed=True))
    history.add_record(CheckRecord(name="ddad", run_id=run_id, passed=False))
    assert [r.name for r in history.failed_checks()] == ["ddad"]
    assert history.failed_checks(uuid4()) == []


def test_empty_history():
    history = InMemoryResults()
    assert history.get_latest_run_records() == {}
    assert history.get_named_records("anything") == {}


def test_sweep_record_keeps_points():
    spec = SweepSpec(family="dad", grid=[2.0, 3.0])
    record = SweepRecord(name=spec.family, run_id=uuid4(), spec=spec, points=sweep(spec))
    assert record.record_type == "sweep"
    assert [p.param for p in record.points] == [2.0, 3.0]


def test_rerecording_a_name_replaces_it():
    history = InMemoryResults()
    run_id = uuid4()
    history.add_record(CheckRecord(name="markov", run_id=run_id, passed=False))
    history.add_record(CheckRecord(name="markov", run_id=run_id, passed=True))
    assert history.get_run_records(run_id)["markov"].passed
