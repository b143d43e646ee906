"""Compare the numba and pure-numpy kernel paths on synthetic batches.

    python benchmarks/bench_backends.py [--sizes 15000,30000] [--repeat 3] [--json]

Equivalent to ``evstereo bench``.  The numpy path alone can also be selected
for the whole process with ``EVSTEREO_DISABLE_NUMBA=1``.
"""

import sys

from evstereo.cli import main

if __name__ == "__main__":
    sys.exit(main(["bench", *sys.argv[1:]]))
