"""Scoring an estimate against several ground truths.

With multiple annotators there is no single correct fingering, so four
measures bracket the quality of an estimate: the general rate averages
over ground truths, the highest rate picks the closest one, the soft
rate accepts a note if anyone agrees, and the recombination rate lets
the reference switch between ground truths at unit cost wherever they
agree - rewarding estimates that are consistent with *some* coherent
way through the annotations.
"""

from pianofinger import match_rate_report, recombination_match_rate

ground_truths = [
    [1, 2, 3, 1, 2, 3, 4, 5],   # annotator A
    [1, 2, 3, 1, 2, 3, 4, 4],   # annotator B: ends on 4
    [2, 3, 4, 1, 2, 3, 4, 5],   # annotator C: starts higher
]
estimate = [2, 3, 4, 1, 2, 3, 4, 4]  # C's opening, B's ending

report = match_rate_report(estimate, ground_truths)
print(f"general match rate  {report.m_gen:.3f}")
print(f"highest match rate  {report.m_high:.3f}")
print(f"soft match rate     {report.m_soft:.3f}")
print(f"recombination rate  {report.m_rec:.3f}  (edit cost {report.e_rec:.0f})")
print("always: general <= highest <= recombination <= soft")

m_rec, e_rec, path = recombination_match_rate(estimate, ground_truths)
print("\nrecombined reference path (ground-truth index per note):")
print(" ", list(path))
print("one switch from annotator C to annotator B explains every note,")
print(f"so the only edit cost is the switch itself: E = {e_rec:.0f}")
