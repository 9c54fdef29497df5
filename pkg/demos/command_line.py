"""The ``qimimic`` command line, driven in-process.

Equivalent shell commands are shown before each call; the CSV outputs go
to a temporary directory.
"""
from __future__ import annotations

import io
import tempfile

from qimimic.cli import main


def show(argv):
    print("$ qimimic " + " ".join(argv))
    out = io.StringIO()
    code = main(argv, out, io.StringIO())
    print(out.getvalue().rstrip() or "(no output)")
    print(f"[exit {code}]\n")


show(["analytic", "point", "--eta", "0.9", "--kappa", "0.1", "--nbarb", "3.0", "--nbar", "0.5", "1.0", "2.0"])
show(["analytic", "crossover", "--eta", "0.9", "--kappa", "0.1", "--nbarb-grid", "0.3", "3", "30"])
show(["simulate", "--protocol", "mimic,fixed", "--runs", "20", "--pulses", "3000", "--points", "5",
      "--seed", "42", "--quiet"])
with tempfile.TemporaryDirectory() as tmp:
    show(["figure", "d1", "--outdir", tmp])
show(["stats", "--nbar", "0.5", "--coherent", "0.5", "--nmax", "4"])
show(["figure", "nope"])
