"""Run the whole study on small synthetic scenes through the CLI.

Writes scenes and a config into a temporary directory, runs every stage in
order and prints the final report tables.

Run: python3 demos/04_desk_pipeline.py [workdir]
"""

import sys
import tempfile
import time
from pathlib import Path

from spxforest import synthetic
from spxforest.cli import main
from spxforest.pipeline import STAGES

root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="spxforest-"))
conf = synthetic.write_desk_study(root, n_areas=3, size=192, k_target=200, n_pure=8, n_mixed=8,
                                  extra={"learners.tune_budget": 4, "ensemble.runs": 3})
print(f"study under {root}")
for stage in STAGES:
    t0 = time.perf_counter()
    code = main([stage, "--config", str(conf), "--jobs", "2"])
    print(f"  {stage:10s} exit {code}  {time.perf_counter() - t0:5.1f} s")
    if code:
        sys.exit(code)

for name in ("table1.txt", "table2.txt", "table3.txt"):
    print()
    print((root / "run" / "report" / name).read_text())
