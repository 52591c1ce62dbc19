"""Build the 96-case tight/slack suite and benchmark a few solvers over part of it.

Run:  python demos/05_benchmark_suite.py
The same thing from the shell:
    capam generate --suite default --seed 7 --out suite/
    capam bench --instances suite/ --solvers myopic bigmrta --out-dir bench/
"""
import numpy as np

from capam.benchmark import BENCH_COLUMNS, bench_rows, completion_matrix, write_rows, write_table
from capam.instances import SuiteSpec, generate_suite, instance_filename

suite = generate_suite(SuiteSpec(), seed=7)
print(f"{len(suite)} instances")
for group in ("tight", "slack"):
    d = np.concatenate([i.deadlines for i in suite if i.metadata["group"] == group])
    print(f"  {group}: deadlines in [{d.min():.1f}, {d.max():.1f}]")

# One case per cell keeps this quick.
picked = [(instance_filename(i, k), i) for k, i in enumerate(suite) if i.metadata["case"] == 0]
rows = bench_rows(picked, ["myopic", "bigmrta", "random"], seed=0)
write_rows("bench.csv", BENCH_COLUMNS, rows)
header, table = completion_matrix(rows)
write_table("completion_matrix.csv", header, table)
print("\n" + "  ".join(f"{h:>8s}" for h in header))
for row in table:
    print("  ".join(f"{float(v):8.2f}" if isinstance(v, str) else f"{v:8d}" for v in row))
