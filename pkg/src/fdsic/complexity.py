"""
Analytic FLOP and parameter counts.

One FLOP is one real multiply, add, divide or exponentiation. A complex
multiply-accumulate therefore costs 8 FLOPs (4 mul + 4 add) and the
FIR-style linear canceller costs ``10M - 2`` per output sample (``M``
complex products, ``M - 1`` complex sums). NN cancellers add their network
cost to the linear canceller's and pay 2 more FLOPs to sum the two
estimates; the polynomial canceller's sum is absorbed in its own count.

Layer costs
-----------
======================  ========================================================
conv2d                  ``(2RSZ - 1) BCL + F_act BCL + BCL``
simple recurrent        ``2 n_hr (n_i + n_hr - 1/2) + F_act n_hr + n_hr``
dense (n_in -> n_out)   ``n_out (2 n_in - 1) + F_act n_out + n_out``
======================  ========================================================

The recurrent count is for a single time step (``recurrent_mode='single'``),
which is the figure that reconciles with published totals. Pass
``recurrent_mode='per_step'`` to multiply it by the number of steps the layer
actually runs.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction

from .architectures import ArchitectureConfig, preset

#: FLOPs per activation evaluation; crelu applies ReLU to both parts of a
#: complex value and is charged 8
ACTIVATION_FLOPS = {"relu": 1, "sigmoid": 4, "tanh": 6, "linear": 0, "crelu": 8}

#: FLOPs to sum the linear and non-linear estimates (two real adds)
COMBINE_FLOPS = 2


def flops_activation(kind: str) -> int:
    try:
        return ACTIVATION_FLOPS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None


@dataclass(frozen=True)
class ComplexityReport:
    name: str
    flops_linear: int
    flops_nn: int
    flops_total: int
    params_linear: int
    params_nn: int
    params_total: int
    reduction_vs_baseline_flops: float | None = None
    reduction_vs_baseline_params: float | None = None
    si_canc_db: float | None = None


# ---------------------------------------------------------------------------
# layer formulas


def linear_canceler_flops(M: int) -> int:
    return 10 * M - 2


def linear_canceler_params(M: int) -> int:
    return 2 * M


def poly_flops(P: int, M: int) -> tuple[int, int]:
    """``(multiplications, additions)`` of the non-linear polynomial part."""
    k = ((P + 1) // 2) * ((P + 1) // 2 + 1) - 1
    return 3 * M * k, 7 * M * k


def poly_params(P: int, M: int) -> int:
    k = ((P + 1) // 2) * ((P + 1) // 2 + 1) - 1
    return 2 * M * k


def conv_flops(L, R, S, Z, B, C, act) -> int:
    return (2 * R * S * Z - 1) * B * C * L + flops_activation(act) * B * C * L + B * C * L


def conv_params(L, R, S, Z) -> int:
    return L * (R * S * Z + 1)


def recurrent_flops(n_i, n_hr, act) -> int:
    # 2 n_hr (n_i + n_hr - 1/2) is always an integer
    return 2 * n_hr * (n_i + n_hr) - n_hr + flops_activation(act) * n_hr + n_hr


def recurrent_params(n_i, n_hr) -> int:
    return n_hr * (n_i + n_hr + 1)


def dense_flops(n_in, n_out, act) -> int:
    return n_out * (2 * n_in - 1) + flops_activation(act) * n_out + n_out


def dense_params(n_in, n_out) -> int:
    return n_out * (n_in + 1)


def _nn_counts(c: ArchitectureConfig, recurrent_mode: str) -> tuple[int, int]:
    if recurrent_mode not in ("single", "per_step"):
        raise ValueError("recurrent_mode must be 'single' or 'per_step'")
    per_step = recurrent_mode == "per_step"

    if c.kind in ("hcrnn", "hcrdnn"):
        B, C = c.conv_output
        n_i = C * c.L
        F = conv_flops(c.L, c.R, c.S, c.Z, B, C, c.conv_act)
        P = conv_params(c.L, c.R, c.S, c.Z)
        F += recurrent_flops(n_i, c.n_hr, c.rec_act) * (B if per_step else 1)
        P += recurrent_params(n_i, c.n_hr)
        last = c.n_hr
        if c.kind == "hcrdnn":
            F += dense_flops(c.n_hr, c.n_hd, c.dense_act)
            P += dense_params(c.n_hr, c.n_hd)
            last = c.n_hd
        return F + dense_flops(last, 2, "linear"), P + dense_params(last, 2)

    if c.kind == "rv_tdnn":
        F = P = 0
        last = 2 * c.M
        for n in c.hidden_layer_sizes:
            F += dense_flops(last, n, c.activation)
            P += dense_params(last, n)
            last = n
        return F + dense_flops(last, 2, "linear"), P + dense_params(last, 2)

    if c.kind == "rnn":
        # each step sees one (I, Q) pair
        F = P = 0
        last = 2
        for n in c.hidden_layer_sizes:
            F += recurrent_flops(last, n, c.activation) * (c.M if per_step else 1)
            P += recurrent_params(last, n)
            last = n
        return F + dense_flops(last, 2, "linear"), P + dense_params(last, 2)

    act = flops_activation(c.activation)
    if c.kind == "cv_tdnn":
        # complex inputs: n_1 = M, one complex output
        sizes = (c.M,) + c.hidden_layer_sizes + (1,)
        pairs = list(zip(sizes[:-1], sizes[1:]))
        F = 10 * sum(a * b for a, b in pairs) + act * sum(c.hidden_layer_sizes)
        P = 2 * sum(a * b + b for a, b in pairs)
        return F, P

    n_h = c.hidden_layer_sizes[0]
    n_i = c.M
    if c.kind == "lwgs":
        tri = n_h * (n_h + 1) // 2
        return 10 * (tri + n_i) + act * n_h, 2 * (tri + n_i + n_h + 1)
    if c.kind == "mwgs":
        win = c.W * (n_h - 1)
        return 10 * (n_i + win + n_h) + act * n_h, 2 * (n_i + win + 2 * n_h + 1)
    raise ValueError(f"no network complexity model for kind {c.kind!r}")


def complexity_of(config: ArchitectureConfig | str, recurrent_mode: str = "single"
                  ) -> ComplexityReport:
    """FLOPs and parameters of one canceller, split into linear and non-linear parts."""
    c = preset(config) if isinstance(config, str) else config
    F_lin, P_lin = linear_canceler_flops(c.M), linear_canceler_params(c.M)
    if c.kind == "linear":
        F_nn = P_nn = extra = 0
    elif c.kind == "polynomial":
        F_nn, P_nn, extra = sum(poly_flops(c.P, c.M)), poly_params(c.P, c.M), 0
    else:
        F_nn, P_nn = _nn_counts(c, recurrent_mode)
        extra = COMBINE_FLOPS
    return ComplexityReport(
        name=c.label, flops_linear=F_lin, flops_nn=F_nn, flops_total=F_lin + F_nn + extra,
        params_linear=P_lin, params_nn=P_nn, params_total=P_lin + P_nn,
        si_canc_db=c.published_si_canc_db)


def percent_change(x, base) -> float:
    if base == 0:
        raise ZeroDivisionError("zero baseline")
    return float(Fraction(x - base, base) * 100)


def reduction_table(configs, baseline, recurrent_mode: str = "single") -> list[ComplexityReport]:
    """Reports for ``configs`` with signed percentage changes against ``baseline``.

    Negative percentages are reductions.
    """
    base = complexity_of(baseline, recurrent_mode)
    if base.flops_total == 0 or base.params_total == 0:
        raise ZeroDivisionError("zero baseline")
    rows = []
    for cfg in configs:
        r = complexity_of(cfg, recurrent_mode)
        rows.append(ComplexityReport(
            **{**r.__dict__,
               "reduction_vs_baseline_flops": percent_change(r.flops_total, base.flops_total),
               "reduction_vs_baseline_params": percent_change(r.params_total, base.params_total)}))
    return rows


CSV_COLUMNS = ("name", "si_canc_db_if_known", "params", "flops", "d_params_pct", "d_flops_pct")


def _fmt_opt(v, spec):
    return "" if v is None else format(v, spec)


def table_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.name, _fmt_opt(r.si_canc_db, ".2f"), r.params_total, r.flops_total,
                    _fmt_opt(r.reduction_vs_baseline_params, ".2f"),
                    _fmt_opt(r.reduction_vs_baseline_flops, ".2f")])
    return buf.getvalue()


def table_text(rows) -> str:
    head = ("Network", "SI canc (dB)", "# Params", "# FLOPs", "d Params", "d FLOPs")
    body = [(r.name, _fmt_opt(r.si_canc_db, ".2f") or "-", str(r.params_total),
             str(r.flops_total), _fmt_opt(r.reduction_vs_baseline_params, "+.2f") + "%"
             if r.reduction_vs_baseline_params is not None else "-",
             _fmt_opt(r.reduction_vs_baseline_flops, "+.2f") + "%"
             if r.reduction_vs_baseline_flops is not None else "-")
            for r in rows]
    widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
    lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                       for i, (cell, w) in enumerate(zip(row, widths)))
             for row in [head] + body]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
