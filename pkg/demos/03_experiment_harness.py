"""Run a small multi-run experiment end to end and inspect its artefacts.

One true system is drawn per experiment; each run simulates fresh
observations from it, initialises the transition matrix by EM, and runs
its own chain.  The harness writes one JSONL chain file and one trace CSV
per run, plus per-run and averaged metric tables.
"""

import tempfile
from pathlib import Path

from sparselds import ExperimentSpec, SamplerConfig, run_experiment

with tempfile.TemporaryDirectory() as tmp:
    spec = ExperimentSpec(
        regime="iso3",
        n_runs=3,
        sampler=SamplerConfig(lambda_prior=1.0, n_iters=2_000, burn_in=500),
        seed=122,
        output_dir=tmp,
    )
    result = run_experiment(spec)

    print("summary row:", result["summary"])
    print("\nartefacts written:")
    for p in sorted(Path(tmp).iterdir()):
        print(f"  {p.name}  ({p.stat().st_size} bytes)")
    print("\nsummary.csv contents:")
    print((Path(tmp) / "summary.csv").read_text())
