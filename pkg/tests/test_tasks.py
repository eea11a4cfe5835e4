import pytest

from flexics.constraints import ConstraintSet
from flexics.data import TransactionDatabase
from flexics.tasks import Task, TaskError, check_pattern

DB = TransactionDatabase.from_transactions([[0, 1], [0, 1], [2], [2]], labels=[1, 0, 1, 0])
F = ConstraintSet(0.5)


@pytest.mark.parametrize("kwargs", [
    dict(constraints=ConstraintSet(0.5, closed=True), oracle="eclat"),
    dict(constraints=ConstraintSet(0.5, minlen=1), oracle="eclat"),
    dict(constraints=F, oracle="nope"),
    dict(constraints=ConstraintSet(0.0)),
    dict(constraints=F, measure="area", tiling=True),
    dict(constraints=ConstraintSet(0.5, minlen=1), measure="area"),
    dict(constraints=ConstraintSet(0.5, minlen=1), measure="freq", tiling=True),
])
def test_invalid_tasks(kwargs):
    with pytest.raises(TaskError):
        Task(DB, **kwargs)


def test_purity_needs_labels():
    with pytest.raises(TaskError):
        Task(TransactionDatabase.from_transactions([[0]]), F, "purity")
    Task(DB, F, "purity")


def test_check_pattern_itemsets():
    task = Task(DB, ConstraintSet(0.5, closed=True, minlen=2))
    assert check_pattern(task, (0, 1)) is None
    assert "infrequent" in check_pattern(Task(DB, F), (0, 2))
    assert "shorter" in check_pattern(task, (2,)) or "closed" in check_pattern(task, (2,))
    assert "not closed" in check_pattern(Task(DB, ConstraintSet(0.5, closed=True)), (0,))
    assert check_pattern(task, ()) == "empty itemset"
    assert "malformed" in check_pattern(task, (1, 0))


def test_check_pattern_tilings():
    task = Task(DB, ConstraintSet(0.5, closed=True, minlen=1), "area", "cp", tiling=True)
    assert check_pattern(task, ((0, 1), (2,))) is None
    assert "lexicographic" in check_pattern(task, ((2,), (0, 1)))
    assert "share items" in check_pattern(task, ((0, 1), (0, 1)))
    assert "exactly two" in check_pattern(task, ((0, 1),))
