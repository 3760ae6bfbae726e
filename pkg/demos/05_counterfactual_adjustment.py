"""What would the overall score be if the system also produced a missing field?

Published tables give only rounded precision and recall, so integer counts
are rebuilt first and then pooled with an assumed performance for the field.
"""

from medeval import ConfusionCounts, Scenario, adjust_with_field, derive_counts, prf

# Overall P=0.801, R=0.737 over 20,699 gold entities; the reason field has 1,342.
base = derive_counts(0.801, 0.737, 20699)
print("reconstructed baseline counts:", base.as_tuple(), "F =", prf(base).rounded()[2])

for label, scenario in [("another system's reason field", Scenario.parse("pr:0.668,0.331")),
                        ("a perfect reason field", Scenario.parse("perfect"))]:
    extra = scenario.counts(1342)
    p, r, f = adjust_with_field(base, extra).rounded()
    print(f"with {label:<30} counts {extra.as_tuple()} -> P={p} R={r} F={f}")

# When only an F-score is known, recall has to be assumed to recover precision.
base = derive_counts(0.852, 0.806, 75877)
for recall in (0.6, 0.7, 0.8):
    extra = Scenario("f_at_recall", 0.728, recall).counts(6384)
    print(f"F=0.728 at recall {recall}: adjusted F =",
          f"{adjust_with_field(base, extra).f_score:.3f}")

# Adding nothing changes nothing.
assert adjust_with_field(base, ConfusionCounts()) == prf(base)
