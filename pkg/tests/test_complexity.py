import csv
import io
import itertools

import pytest

from fdsic.architectures import TABLE_PRESETS, ArchitectureConfig, preset
from fdsic.complexity import (CSV_COLUMNS, complexity_of, conv_flops, dense_flops,
                              flops_activation, linear_canceler_flops, linear_canceler_params,
                              percent_change, poly_flops, poly_params, recurrent_flops,
                              reduction_table, table_csv, table_text)
from published_tables import (ACTS, COMPARISON, HCRDNN_ACTIVATION_FLOPS, HCRDNN_GRID,
                              HCRNN_ACTIVATION_FLOPS, HCRNN_GRID, PRINTED_TYPOS)


def hcrnn(L, R, S, n_hr, **kw):
    return ArchitectureConfig("hcrnn", L=L, R=R, S=S, n_hr=n_hr, **kw)


def hcrdnn(L, R, S, n_hr, n_hd, **kw):
    return ArchitectureConfig("hcrdnn", L=L, R=R, S=S, n_hr=n_hr, n_hd=n_hd, **kw)


def test_activation_costs():
    assert [flops_activation(a) for a in ("relu", "sigmoid", "tanh", "linear")] == [1, 4, 6, 0]
    with pytest.raises(ValueError):
        flops_activation("gelu")


def test_linear_canceller_counts():
    assert (linear_canceler_flops(13), linear_canceler_params(13)) == (128, 26)
    assert (linear_canceler_flops(1), linear_canceler_params(1)) == (8, 2)


def test_poly_counts_and_ratio():
    mul, add = poly_flops(5, 13)
    assert mul + add == 1558 - 128 and poly_params(5, 13) == 312 - 26
    for P in (1, 3, 5, 7):
        for M in (1, 4, 13):
            m, a = poly_flops(P, M)
            assert 3 * a == 7 * m


def test_layer_formulas_by_hand():
    # conv: L=3, 12x1 kernel on a 13x2 graph -> B=2, C=2, relu
    assert conv_flops(3, 12, 1, 1, 2, 2, "relu") == (2 * 12 - 1) * 12 + 12 + 12
    # recurrent: 6 inputs, 9 hidden, relu
    assert recurrent_flops(6, 9, "relu") == 2 * 9 * 15 - 9 + 9 + 9
    assert dense_flops(9, 2, "linear") == 2 * 17 + 2


def test_hcrnn_opt_breakdown():
    r = complexity_of("hcrnn_opt")
    conv = (2 * 12 - 1) * 12 + 12 + 12
    rec = 2 * 9 * 15 - 9 + 9 + 9
    dense = 2 * 17 + 2
    assert r.flops_nn == conv + rec + dense
    assert r.flops_total == 128 + conv + rec + dense + 2 == 745


@pytest.mark.parametrize("name", TABLE_PRESETS)
def test_comparison_rows(name):
    r = complexity_of(name)
    _, params, flops, _, _ = COMPARISON[name]
    assert (r.params_total, r.flops_total) == (params, flops)


def test_reduction_percentages():
    rows = reduction_table(TABLE_PRESETS, "poly_p5")
    for r in rows[1:]:
        _, _, _, dp, df = COMPARISON[r.name]
        assert abs(r.reduction_vs_baseline_params - dp) <= 0.005 + 1e-9
        assert abs(r.reduction_vs_baseline_flops - df) <= 0.005 + 1e-9
    assert rows[0].reduction_vs_baseline_flops == 0 and rows[0].reduction_vs_baseline_params == 0


def test_percent_change_examples():
    assert percent_change(745, 1558) == pytest.approx(-52.1823, abs=1e-4)
    assert percent_change(5, 5) == 0
    with pytest.raises(ZeroDivisionError):
        percent_change(1, 0)


def _grid_id(row):
    return f"cfg{row[0]}"


@pytest.mark.parametrize("row", HCRNN_GRID, ids=_grid_id)
def test_hcrnn_grid(row):
    cfg, L, R, S, n_hr, _, params, flops = row
    r = complexity_of(hcrnn(L, R, S, n_hr))
    expect = {"params": params, "flops": flops}
    if ("hcrnn", cfg) in PRINTED_TYPOS:
        field, value = PRINTED_TYPOS[("hcrnn", cfg)]
        expect[field] = value
    assert (r.params_total, r.flops_total) == (expect["params"], expect["flops"])


@pytest.mark.parametrize("row", HCRDNN_GRID, ids=_grid_id)
def test_hcrdnn_grid(row):
    cfg, L, R, S, n_hr, n_hd, _, params, flops = row
    r = complexity_of(hcrdnn(L, R, S, n_hr, n_hd))
    expect = {"params": params, "flops": flops}
    if ("hcrdnn", cfg) in PRINTED_TYPOS:
        field, value = PRINTED_TYPOS[("hcrdnn", cfg)]
        expect[field] = value
    assert (r.params_total, r.flops_total) == (expect["params"], expect["flops"])


def test_hcrnn_activation_grid():
    for i, conv in enumerate(ACTS):
        for j, rec in enumerate(ACTS):
            cfg = hcrnn(3, 12, 1, 9, conv_activation=conv, recurrent_activation=rec)
            assert complexity_of(cfg).flops_total == HCRNN_ACTIVATION_FLOPS[i][j]


def test_hcrdnn_activation_grid():
    combos = itertools.product(ACTS, ACTS, ACTS)
    for (conv, rec, dense), (f1, f2) in zip(combos, HCRDNN_ACTIVATION_FLOPS):
        acts = dict(conv_activation=conv, recurrent_activation=rec, dense_activation=dense)
        assert complexity_of(preset("hcrdnn1").with_(**acts)).flops_total == f1
        assert complexity_of(preset("hcrdnn2").with_(**acts)).flops_total == f2


def test_custom_config_example():
    r = complexity_of(hcrnn(2, 8, 1, 8))
    assert (r.params_total, r.flops_total) == (166, 770)


@pytest.mark.parametrize("field, lo, hi", [
    ("L", 1, 4), ("n_hr", 1, 16),
])
def test_hcrnn_monotone(field, lo, hi):
    base = dict(L=2, R=8, S=1, n_hr=6)
    prev = None
    for v in range(lo, hi + 1):
        r = complexity_of(hcrnn(**{**base, field: v}))
        if prev is not None:
            assert r.flops_total > prev.flops_total and r.params_total > prev.params_total
        prev = r


def test_hcrdnn_monotone_in_dense_width():
    totals = [complexity_of(hcrdnn(2, 12, 1, 7, n)).flops_total for n in range(1, 15)]
    assert totals == sorted(set(totals))


def test_params_grow_with_filter_height():
    params = [complexity_of(hcrnn(2, R, 1, 6)).params_total for R in range(1, 14)]
    assert params == sorted(set(params))


def test_flops_not_monotone_in_filter_height():
    # taller filters shrink the feature maps, so FLOPs can fall
    assert complexity_of(hcrnn(3, 13, 1, 9)).flops_total < complexity_of(hcrnn(3, 12, 1, 9)).flops_total


def test_poly_monotone_in_memory_and_order():
    for P in (1, 3, 5, 7):
        f = [complexity_of(ArchitectureConfig("polynomial", P=P, M=M)).flops_total
             for M in range(1, 15)]
        assert f == sorted(set(f))
    f = [complexity_of(ArchitectureConfig("polynomial", P=P)).flops_total for P in (1, 3, 5, 7, 9)]
    assert f == sorted(set(f))


def test_per_step_recurrent_mode_costs_more():
    single = complexity_of("hcrnn_opt")
    per_step = complexity_of("hcrnn_opt", recurrent_mode="per_step")
    rec = 2 * 9 * 15 - 9 + 9 + 9
    assert per_step.flops_total - single.flops_total == rec * (2 - 1)
    assert per_step.params_total == single.params_total
    with pytest.raises(ValueError):
        complexity_of("hcrnn_opt", recurrent_mode="bogus")


def test_linear_only_report():
    r = complexity_of("linear")
    assert (r.flops_nn, r.params_nn, r.flops_total) == (0, 0, 128)


def test_csv_and_text_tables():
    rows = reduction_table(["poly_p5", "hcrnn_opt"], "poly_p5")
    parsed = list(csv.reader(io.StringIO(table_csv(rows))))
    assert tuple(parsed[0]) == CSV_COLUMNS
    assert parsed[2] == ["hcrnn_opt", "44.50", "229", "745", "-26.60", "-52.18"]
    text = table_text(rows)
    assert "-52.18%" in text and "hcrnn_opt" in text
