import numpy as np
import pytest

from vcselnn.encoder import Grid, make_sequence
from vcselnn.optics import ReservoirParams, VcselSystem
from vcselnn.readout import BooleanMask, apply_normalization, detect, nmse
from vcselnn.training import (
    FlipSchedule,
    TrainRecord,
    evaluate,
    evaluate_matrix,
    train_all_classes,
    train_mask,
)

GRID = Grid(side_px=32, disk_radius_px=15.0)
PARAMS = ReservoirParams(sites=256, nodes=96, sat_scale=1.2e-3, noise_scale=2e-5, seed=4)


@pytest.fixture(scope="module")
def system():
    return VcselSystem(GRID, PARAMS, ring_fraction=0.5)


def test_flip_schedule_non_increasing():
    schedule = FlipSchedule(initial_flips=35, decay=0.995, min_flips=1)
    flips = [schedule.flips(k) for k in range(2000)]
    assert flips[0] == 35
    assert all(b <= a for a, b in zip(flips, flips[1:]))
    assert min(flips) == 1


def test_flip_schedule_default_scaling():
    assert FlipSchedule.default_for(350).initial_flips == 35
    assert FlipSchedule.default_for(5).initial_flips == 1


def test_flip_schedule_validation():
    with pytest.raises(ValueError):
        FlipSchedule(initial_flips=0)
    with pytest.raises(ValueError):
        FlipSchedule(initial_flips=1, decay=1.5)
    with pytest.raises(ValueError):
        FlipSchedule(initial_flips=1, min_flips=0)


def test_planted_column_is_found():
    # one column equals the target exactly, the rest are constant: any mask with
    # that column on is already perfect, so the climb must reach ~zero error
    rng = np.random.default_rng(1)
    t_len, n = 64, 16
    y_target = rng.integers(0, 2, size=t_len).astype(np.float64)
    values = np.tile(rng.random(n), (t_len, 1))
    values[:, 4] = y_target
    record = train_mask(
        values, y_target, FlipSchedule(initial_flips=2), epochs=n * 50, seed=0
    )
    assert record.error_curve[-1] < 1e-6
    assert record.best_mask.bits[4]


def test_single_epoch_curve_length():
    rng = np.random.default_rng(2)
    values = rng.random((10, 5))
    record = train_mask(values, rng.random(10), FlipSchedule(initial_flips=1), 1, seed=3)
    assert record.error_curve.shape == (2,)
    assert record.accepted.shape == (1,)
    assert record.flips.shape == (1,)


def test_train_mask_deterministic():
    rng = np.random.default_rng(3)
    values = rng.random((40, 12))
    target = rng.integers(0, 2, 40).astype(float)
    a = train_mask(values, target, FlipSchedule(initial_flips=3), 100, seed=9)
    b = train_mask(values, target, FlipSchedule(initial_flips=3), 100, seed=9)
    assert np.array_equal(a.best_mask.bits, b.best_mask.bits)
    assert np.array_equal(a.error_curve, b.error_curve)
    assert a.accepted_epochs == b.accepted_epochs


def test_error_curve_non_increasing_and_strict_on_accept():
    rng = np.random.default_rng(4)
    values = rng.random((60, 20))
    target = rng.integers(0, 2, 60).astype(float)
    record = train_mask(values, target, FlipSchedule(initial_flips=4), 300, seed=5)
    curve = record.error_curve
    assert np.all(np.diff(curve) <= 0)
    for k in range(300):
        if record.accepted[k]:
            assert curve[k + 1] < curve[k]
        else:
            assert curve[k + 1] == curve[k]
    assert record.accepted_epochs == int(record.accepted.sum())


def test_best_mask_reproduces_final_error():
    rng = np.random.default_rng(6)
    values = rng.random((80, 24))
    target = rng.integers(0, 2, 80).astype(float)
    record = train_mask(values, target, FlipSchedule(initial_flips=5), 400, seed=7)
    raw = detect(values, record.best_mask)
    y = apply_normalization(raw, record.offset, record.scale)
    assert nmse(y, target) == pytest.approx(float(record.error_curve[-1]), abs=1e-12)


def test_flip_count_capped_at_node_count():
    rng = np.random.default_rng(44)
    values = rng.random((30, 8))
    target = rng.integers(0, 2, 30).astype(float)
    record = train_mask(values, target, FlipSchedule(initial_flips=50), 20, seed=1)
    assert record.flips.max() <= 8


def test_train_mask_validation():
    values = np.random.default_rng(8).random((10, 4))
    with pytest.raises(ValueError):
        train_mask(values, np.zeros(9), FlipSchedule(initial_flips=1), 10, seed=0)
    with pytest.raises(ValueError):
        train_mask(values, np.zeros(10), FlipSchedule(initial_flips=1), 0, seed=0)


def test_train_all_classes_one_bit(system):
    seq = make_sequence(GRID, 1, 80, 0.5, seed=31)
    records = train_all_classes(system, seq, epochs=50, seed=1)
    assert len(records) == 2
    assert [r.class_id for r in records] == [0, 1]
    for record in records:
        assert np.all(np.diff(record.error_curve) <= 0)


def test_train_all_classes_deterministic(system):
    seq = make_sequence(GRID, 2, 60, 0.5, seed=32)
    a = train_all_classes(system, seq, epochs=40, seed=2)
    b = train_all_classes(system, seq, epochs=40, seed=2)
    for x, y in zip(a, b):
        assert np.array_equal(x.best_mask.bits, y.best_mask.bits)
        assert np.array_equal(x.error_curve, y.error_curve)


def test_fresh_noise_mode_runs_and_improves(system):
    seq = make_sequence(GRID, 1, 60, 0.5, seed=33)
    records = train_all_classes(system, seq, epochs=30, seed=3, fresh_noise=True)
    for record in records:
        assert record.error_curve[-1] <= record.error_curve[0]


def test_evaluate_noiseless_train_equals_test(system):
    noiseless = system.replace(noise_scale=0.0)
    seq = make_sequence(GRID, 2, 120, 0.5, seed=34)
    records = train_all_classes(noiseless, seq, epochs=150, seed=4)
    ser_direct, _ = evaluate_matrix(records, noiseless.respond(seq).values, seq.labels)
    ser_eval, per_class = evaluate(records, noiseless, seq)
    assert ser_eval == ser_direct
    assert per_class.shape == (4,)


def test_evaluate_planted_one_hot_masks_give_zero_ser():
    rng = np.random.default_rng(9)
    t_len, classes = 200, 4
    labels = rng.integers(0, classes, t_len)
    values = np.zeros((t_len, classes))
    values[np.arange(t_len), labels] = 1.0
    records = []
    for c in range(classes):
        bits = np.zeros(classes, dtype=bool)
        bits[c] = True
        records.append(
            TrainRecord(
                best_mask=BooleanMask(bits),
                error_curve=np.array([0.0]),
                accepted_epochs=0,
                seed=0,
                offset=0.0,
                scale=1.0,
                class_id=c,
            )
        )
    ser_value, per_class = evaluate_matrix(records, values, labels)
    assert ser_value == 0.0
    assert np.allclose(per_class, 0.0)


def test_untrained_masks_sit_at_chance():
    # chance-level oracle: random masks on label-free responses classify at ~7/8
    rng = np.random.default_rng(10)
    t_len, n, classes = 400, 64, 8
    trials = []
    for _ in range(12):
        labels = rng.integers(0, classes, t_len)
        values = rng.random((t_len, n))
        records = []
        for c in range(classes):
            bits = rng.integers(0, 2, n).astype(bool)
            raw = values @ bits
            lo, hi = raw.min(), raw.max()
            records.append(
                TrainRecord(
                    best_mask=BooleanMask(bits),
                    error_curve=np.array([1.0]),
                    accepted_epochs=0,
                    seed=0,
                    offset=float(lo),
                    scale=float(1.0 / (hi - lo)),
                    class_id=c,
                )
            )
        ser_value, _ = evaluate_matrix(records, values, labels)
        trials.append(ser_value)
    mean_ser = float(np.mean(trials))
    # binomial-style bound on the pooled estimate
    pooled = t_len * len(trials)
    sigma = np.sqrt((7 / 8) * (1 / 8) / pooled)
    assert abs(mean_ser - 7 / 8) <= 5 * sigma


def test_evaluate_class_count_mismatch(system):
    seq = make_sequence(GRID, 2, 30, 0.5, seed=35)
    records = train_all_classes(system, seq, epochs=10, seed=5)
    wrong = make_sequence(GRID, 3, 30, 0.5, seed=36)
    with pytest.raises(ValueError):
        evaluate(records, system, wrong)
