"""
A small benchmark table
=======================

Aggregate metrics over seeded episode batches at two crowd densities.
SR counts completed episodes; NP and NT average path length and time over
the successes; UF and HA average the per-episode social-violation tick
counts. Denser crowds should never score better.

(The full harness is the ``socnav`` command line; this is the same loop
in miniature.)
"""

from socnav.metrics import aggregate, episode_metrics, results_csv_rows
from socnav.planner import plan_step
from socnav.simulator import ScenarioConfig, run_episode

EPISODES = 30

rows = []
for n_humans in (5, 10):
    records = []
    for seed in range(EPISODES):
        cfg = ScenarioConfig(n_humans=n_humans, seed=seed)
        result = run_episode(
            cfg,
            lambda f, p, e: plan_step(f, p, e, cfg.params, cfg.action_space),
        )
        records.append(episode_metrics(result, cfg.params))
    rows.append(("planner", n_humans, aggregate(records)))

print("\n".join(results_csv_rows(rows)))

sr5 = rows[0][2].sr
sr10 = rows[1][2].sr
print()
print(f"density check: SR(5 humans) = {sr5:.2f} >= SR(10 humans) = {sr10:.2f}")
