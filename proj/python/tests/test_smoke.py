import itertools

import numpy as np
import pytest

import oscloc


def test_frame_rule():
    assert oscloc.assign_frame_label([0.1, 0.1, 0.1], tau=0.5, delta=0.1) == "B"
    assert oscloc.assign_frame_label([0.9, 0.2, 0.1], tau=0.5, delta=0.3) == "I"
    assert oscloc.assign_frame_label([0.5, 0.6, 0.55], tau=0.5, delta=0.2) == "A"
    with pytest.raises(oscloc.ValidationError):
        oscloc.assign_frame_label([0, 0, 0], tau=0.0, delta=-1.0)


def test_pseudo_label_ordering_switch():
    s = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    assert oscloc.pseudo_label(s, tau=0.0, delta=0.1, ordering=False) == "EI"
    assert oscloc.pseudo_label(s, tau=0.0, delta=0.1) == "AI"
    assert oscloc.enforce_causal_order("ITTIE") == "ITTAE"


def _best_ordered(scores):
    cols = "BITE"
    best = -np.inf
    for seq in itertools.product(range(4), repeat=len(scores)):
        labels = "".join(cols[c] for c in seq)
        if oscloc.is_ordered(labels):
            best = max(best, sum(scores[t, c] for t, c in enumerate(seq)))
    return best


def test_ordered_decode_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(50):
        s = rng.normal(size=(int(rng.integers(1, 6)), 4))
        out = oscloc.ordered_decode(s)
        assert oscloc.is_ordered(out)
        assert oscloc.sequence_score(s, out) == pytest.approx(_best_ordered(s), abs=1e-12)


def test_hierarchical_and_top1():
    s = np.zeros((4, 7))
    s[:, 4:] = 1.0
    s[0, 4] = 3.0
    s[3, 6] = 3.0
    index, labels = oscloc.hierarchical_decode(s)
    assert index == 1
    assert labels[0] == "I" and labels[-1] == "E"
    assert oscloc.top1_frames(np.eye(4)[[0, 1, 2, 3]]) == [1, 2, 3]


def test_frame_metrics():
    r = oscloc.frame_metrics("IITEB", "ITTEB")
    assert r["mean_f1"] == pytest.approx(7 / 9)
    assert r["present"] == [True, True, True]


def test_grid_search():
    s = np.array([[5, 0, 0], [5, 0, 0], [0, 5, 0], [0, 0, 5], [0, 0, 0], [0, 0, 0]], dtype=float)
    r = oscloc.grid_search([s], ["IITEBB"], taus=[1.0, 2.0], deltas=[0.0, 1.0, 2.0])
    assert (r["tau"], r["delta"], r["f1"]) == (1.0, 0.0, 1.0)
    assert len(r["surface"]) == 6


def test_file_formats(tmp_path):
    x = np.arange(12, dtype=np.float32).reshape(4, 3).astype(float)
    oscloc.write_scores(tmp_path / "s.oscs", x)
    np.testing.assert_array_equal(oscloc.read_scores(tmp_path / "s.oscs"), x)
    assert (tmp_path / "s.oscs").stat().st_size == 16 + 4 * 12
    with pytest.raises(oscloc.FormatError) as err:
        oscloc.read_features(tmp_path / "s.oscs")
    assert err.value.kind == "bad_magic"
    with pytest.raises(oscloc.FormatError) as err:
        oscloc.read_features(tmp_path / "missing.oscf")
    assert err.value.kind == "io"


def test_pipeline(tmp_path):
    manifest = oscloc.synth(tmp_path / "data", seed=7, known=2, novel=1, videos=5, min_frames=12,
                            max_frames=16, dim=12)
    sweep = oscloc.sweep(manifest, taus=list(np.arange(-30.0, 0.1, 2.5)), deltas=[0.0, 0.1, 0.2])
    assert 0.0 <= sweep["f1"] <= 1.0
    n = oscloc.label_dataset(manifest, tmp_path / "labels", tau=sweep["tau"], delta=sweep["delta"])
    assert n > 0
    losses = oscloc.train(manifest, tmp_path / "labels", tmp_path / "ckpt", epochs=3, lr=3e-3, batch=4,
                          hidden=8, layers=1, heads=2)
    assert all(len(v) == 3 for v in losses.values())
    assert oscloc.infer(manifest, tmp_path / "ckpt", tmp_path / "pred") > 0
    report = oscloc.evaluate(manifest, tmp_path / "pred")
    assert set(report["overall"]) == {"known", "novel"}
    assert 0.0 <= report["overall"]["novel"]["f1"] <= 1.0
