import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegcolor.errors import ClassTooSmall, SingleSubject
from eegcolor.validation import group_kfold, loso_indices, loso_split, stratified_kfold


def test_sixty_rows_four_per_class_per_fold():
    y = np.repeat([0, 1, 2], 20)
    folds = stratified_kfold(y, 5, seed=0)
    for _, te in folds:
        assert np.bincount(y[te]).tolist() == [4, 4, 4]
    assert stratified_kfold(y, 5, seed=0)[2][1].tolist() == folds[2][1].tolist()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=15, max_size=120), st.integers(2, 5),
       st.integers(0, 1000))
def test_folds_partition_and_balance(labels, k, seed):
    y = np.asarray(labels)
    if np.bincount(y, minlength=3)[np.unique(y)].min() < k:
        with pytest.raises(ClassTooSmall):
            stratified_kfold(y, k, seed)
        return
    folds = stratified_kfold(y, k, seed)
    test = np.concatenate([te for _, te in folds])
    assert sorted(test.tolist()) == list(range(y.size))
    for tr, te in folds:
        assert not set(tr) & set(te)
        assert tr.size + te.size == y.size
    for c in np.unique(y):
        per = [np.sum(y[te] == c) for _, te in folds]
        assert max(per) - min(per) <= 1
    sizes = [te.size for _, te in folds]
    assert max(sizes) - min(sizes) <= 1


def test_loso():
    subjects = [f"s{i}" for i in range(8)]
    splits = loso_split(subjects)
    assert len(splits) == 8
    assert all(len(tr) == 7 for tr, _ in splits)
    assert sorted(h for _, h in splits) == sorted(subjects)
    assert len(loso_split(["a", "b"])) == 2
    with pytest.raises(SingleSubject):
        loso_split(["a", "a"])


def test_loso_indices_and_groups():
    ids = np.array(["b", "a", "b", "c", "a"])
    for tr, te in loso_indices(ids):
        assert len(set(ids[te])) == 1
        assert ids[te][0] not in set(ids[tr])
    folds = group_kfold(np.array(["t2", "t1", "t2"]))
    assert [te.tolist() for _, te in folds] == [[1], [0, 2]]
