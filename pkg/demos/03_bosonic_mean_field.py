"""
Quantum to classical as T grows
===============================

With coupling 1/T the rescaled quantum free energy and one-body density
matrix approach the classical field theory.  A shortened sweep; the full
one lives in ``configs/bosonic.cfg`` and runs through the CLI.
"""

from pathlib import Path

from nlgibbs.config import load_config
from nlgibbs.harness import run_bosonic_convergence

cfg = load_config(Path(__file__).parent / "configs" / "bosonic.cfg", samples=100_000)
cfg = cfg.with_overrides(temperatures=(2.0, 5.0, 10.0))

print(f"{'T':>5} {'n_max':>6} {'e(T)':>10} {'+-':>8} {'d(T)':>10} {'+-':>8}")
for r in run_bosonic_convergence(cfg):
    print(f"{r.T:5.0f} {r.n_max:6d} {r.e:10.4f} {r.e_err:8.4f} {r.d:10.4f} {r.d_err:8.4f}")
