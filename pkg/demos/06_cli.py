"""Driving the command line tool from Python.

The same commands run from a shell as ``fracsbvp check problems/example.ini``
and so on.  Exit codes: 0 ok, 1 failed check, 2 bad input, 3 no convergence.
"""

# %%
import tempfile
from pathlib import Path

from fracsbvp.cli import main

root = Path(__file__).resolve().parents[1]
problem = root / "problems" / "example.ini"

print("check ->", main(["check", str(problem)]))

# %%
with tempfile.TemporaryDirectory() as out:
    code = main(["solve", str(problem), "--grid", "201", "--out", out])
    print("solve ->", code)
    print((Path(out) / "solution.csv").read_text().splitlines()[100])
