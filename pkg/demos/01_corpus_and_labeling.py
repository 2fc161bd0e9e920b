# Corpus ingestion, window splitting, and the two-scorer labeling funnel.
#
# Walks the front half of the pipeline on a synthetic fixture: parse a
# line-delimited corpus, split it at a time boundary, fuse the two recorded
# scorer outputs with the suspension list, and plan the scorer ordering
# under daily query quotas.

import tempfile
from datetime import timedelta
from pathlib import Path

from botsift.corpus import ingest, split_by_window
from botsift.labeling import SCORER_A, SCORER_B, plan_labeling, run_funnel
from botsift.simulate import generate_corpus, write_fixture

workdir = Path(tempfile.mkdtemp(prefix="botsift_demo_"))
print(f"working in {workdir}\n")

# --- build and ingest a fixture corpus -----------------------------------
sim = generate_corpus(n_bots=30, n_humans=50, seed=7, days=60,
                      posts_range=(10, 16))
paths = write_fixture(sim, workdir)
result = ingest(paths["corpus"])
view = result.view
print("ingest report:")
print(result.report.to_json())

# --- split into an early window (train) and a late window (evaluate) -----
boundary = view.window[0] + timedelta(days=30)
early, late = split_by_window(view, boundary)
overlap = set(early.accounts) & set(late.accounts)
print(f"\nsplit at {boundary.date()}: "
      f"{early.n_tweets} early tweets, {late.n_tweets} late tweets, "
      f"{len(overlap)} accounts active in both windows")

# --- fuse scorer verdicts with the suspension check ----------------------
scores_a = {o.user_id: o for o in sim.scores if o.scorer_id == SCORER_A}
scores_b = {o.user_id: o for o in sim.scores if o.scorer_id == SCORER_B}
labels, funnel = run_funnel(view, scores_a, scores_b, sim.suspended)
print("\nfunnel report:")
print(funnel.to_json())

agreement = sum(1 for l in labels
                if l.verdict == "bot") == funnel.final_bot
print(f"\nbot verdicts match the report: {agreement}")

# --- plan the scorer ordering under daily quotas --------------------------
# scorer_A has no daily limit; scorer_B processes 2000 accounts per day
plan = plan_labeling(n_users=1_300_000,
                     quotas={SCORER_A: None, SCORER_B: 2000.0},
                     survivor_ratio=35870 / 1300000)
print("\nquota plan:")
print(plan.to_json())
print(f"\nrecommended ordering: {' -> '.join(plan.recommended)} "
      f"({plan.recommended_days} days instead of "
      f"{max(plan.totals.values())})")
