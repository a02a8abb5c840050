import numpy as np
import pytest

from precise_spikes import experiments
from precise_spikes.plasticity import FILT, INST
from precise_spikes.tasks import TaskConfig

TARGETS = experiments.MAPPING_TARGETS


def mapping_config(**kw):
    base = dict(n_inputs=200, n_patterns=1, n_classes=1, epochs=200,
                fixed_targets=(TARGETS,), seed=0)
    base.update(kw)
    return TaskConfig(**base)


def test_weight_profile_bins():
    edges, prof = experiments.weight_profile(
        np.array([0.5, 1.5, 1.7, 199.9, 200.0]), np.array([1.0, 2.0, 4.0, 5.0, 7.0]),
        200.0, 1.0)
    assert edges.size == 201
    assert prof[0] == 1.0 and prof[1] == 3.0 and prof[-1] == 6.0
    assert np.isnan(prof[2])


def test_trailing_mean():
    out = experiments.trailing_mean([1.0, 2.0, 3.0, 4.0], 2)
    assert out.tolist() == [1.0, 1.5, 2.5, 3.5]


def test_kernels_table():
    res = experiments.kernels()
    tab = res.tables['kernels']
    assert len(tab.rows) == 551
    assert tab.rows[50][0] == pytest.approx(0.0, abs=1e-12)


def test_filt_profile_peaks_precede_targets():
    res = experiments.mapping(mapping_config(), 40, rules=(FILT,))
    rows = res.tables['weight_profile'].rows
    starts = np.array([r[0] for r in rows])
    prof = np.array([r[3] for r in rows])
    for t in TARGETS:
        window = (starts >= t - 20) & (starts < t + 10)
        peak = starts[window][np.argmax(prof[window])]
        assert t - 10 <= peak < t


def test_mapping_summary_keys():
    res = experiments.mapping(mapping_config(epochs=3, n_inputs=50), 2)
    assert set(res.summary) == {INST, FILT}
    assert res.tables['weight_profile'].header == (
        'bin_start_ms', 'bin_end_ms', 'initial_weight', 'inst_weight', 'filt_weight')
    assert len(res.tables['mapping_vrd'].rows) == 2 * 3


def test_verify_appendix_summary():
    res = experiments.verify_appendix(delta_ts=(1.0, 0.1), delta_us=(1.0,))
    assert res.summary['all_hold']
    assert len(res.tables['appendix'].rows) == 2


def test_rate_sweep_shape():
    cfg = TaskConfig(n_inputs=50, n_patterns=2, n_classes=1, epochs=3,
                     fixed_targets=((100.0,),))
    res = experiments.rate_sweep(cfg, 2, etas=(0.1, 0.3))
    assert [r[:2] for r in res.tables['rate_sweep'].rows] == [
        (INST, 0.1), (INST, 0.3), (FILT, 0.1), (FILT, 0.3)]
    assert set(res.summary[FILT]) == {0.1, 0.3}
