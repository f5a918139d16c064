"""
Complexity budget of the cancellers
===================================

Every canceller is scored by closed-form FLOP and parameter counts. This
script prints the comparison against the P=5 polynomial baseline and then
walks a few hybrid-network geometries to show which knobs cost what.
"""

from fdsic.architectures import TABLE_PRESETS, ArchitectureConfig
from fdsic.complexity import complexity_of, reduction_table, table_text

# The full comparison, baseline first. Negative percentages are savings.
rows = reduction_table(TABLE_PRESETS, "poly_p5")
print(table_text(rows))

# A taller filter shrinks the feature maps, so FLOPs fall even though the
# filter itself has more weights.
print("HCRNN with L=3, n_hr=9 as the filter height R grows")
for R in (4, 8, 11, 12, 13):
    r = complexity_of(ArchitectureConfig("hcrnn", L=3, R=R, S=1, n_hr=9))
    print(f"  R={R:2d}: {r.params_total:4d} params  {r.flops_total:4d} FLOPs")

# Recurrent width drives cost quadratically.
print("\nHCRNN with L=3, R=12 as the recurrent width grows")
for n_hr in (4, 6, 8, 10, 12):
    r = complexity_of(ArchitectureConfig("hcrnn", L=3, R=12, S=1, n_hr=n_hr))
    print(f"  n_hr={n_hr:2d}: {r.params_total:4d} params  {r.flops_total:4d} FLOPs")

# The recurrent layer only needs its last output; counting every step instead
# shows what a naive implementation would pay.
single = complexity_of("hcrnn_opt")
per_step = complexity_of("hcrnn_opt", recurrent_mode="per_step")
print(f"\nhcrnn_opt: {single.flops_total} FLOPs (last step only), "
      f"{per_step.flops_total} FLOPs (every step)")
