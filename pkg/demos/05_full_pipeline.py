"""The whole pipeline on a synthetic world, scored against ground truth.

Real scraped data cannot be published, so the package ships a world
generator that knows the true residence partition, true coordinates, and
true occupancy of everything it creates. The detector then runs blind on
the anonymised files, and the evaluator reports how much of the truth it
recovered. Run from the repository root:

    python demos/05_full_pipeline.py
"""

import json
import tempfile
from pathlib import Path

from rpzaudit.report import load_run_config, run_pipeline, format_summary
from rpzaudit.synth import WorldSpec, evaluate_detector, format_metrics, generate_world, write_world

workdir = Path(tempfile.mkdtemp(prefix="rpzaudit-demo-"))
print(f"working in {workdir}")

# A small market: 20 owners, a couple of zones, a fifth of residences holding
# permits, every coordinate anonymised within 150 m.
spec = WorldSpec(seed=2024, owner_count=20, embedding_dim=64, zone_count=2)
world = generate_world(spec)
paths = write_world(world, workdir / "world")
print(f"generated {len(world.listings)} listings, {len(world.reviews)} reviews, "
      f"{len(world.photos)} photos, {len(world.permits)} permit applications")

# The generator writes a ready-to-use config next to the files.
config = load_run_config(paths["run_config"], {"out": str(workdir / "out")})
result = run_pipeline(config)
print(f"\npipeline exit code: {result.exit_code}")
print(format_summary(result.summary))

# Score the findings against the world's ground truth.
metrics = evaluate_detector(workdir / "out" / "findings.jsonl", paths["ground_truth"])
print("\ndetector vs ground truth:")
print(format_metrics(metrics))

# Every finding carries its evidence; here is one breach, in full.
findings = [json.loads(line) for line in (workdir / "out" / "findings.jsonl").read_text().splitlines()]
breach = next((f for f in findings if f["verdict"] == "potential_breach"), None)
if breach:
    print(f"\nexample finding for {breach['post_id']} ({breach['rule_code']}):")
    print(json.dumps(breach["evidence"], indent=2, sort_keys=True))
