"""
Semiconvergence
===============

As the noise level shrinks the discrepancy principle lets the iteration run
longer and the reconstruction error goes down. This is the same study the
``semiconv`` command runs from a configuration file.
"""

from pathlib import Path

from tikhonov_kaczmarz.experiments import load_config, semiconvergence_study

config = Path(__file__).resolve().parents[1] / "configs" / "c_reference.ini"
cfg = load_config(config)

rows = semiconvergence_study(cfg, deltas=[1e-2, 3e-3, 1e-3, 3e-4, 1e-4], write=False)
print("   delta  stop_index  final_error  inner  loped")
for r in rows:
    print(f"{r.delta:8.0e}  {r.stop_index:10d}  {r.final_error:11.5f}  {r.total_inner_iterations:5d}  {r.loped_steps:5d}")
