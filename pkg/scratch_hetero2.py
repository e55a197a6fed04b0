"""Steady-state + mesh-robustness check of the heterogeneous cases."""
import numpy as np
import logging
logging.basicConfig(level=logging.WARNING)
from scratch_hetero import run_case

for div, tag in (((10, 10, 20), "coarse"), ((12, 12, 30), "fine")):
    for case, tfin in (("a", 3e-5), ("b", 3e-5), ("c", 2e-3)):
        frac, third, nc, tc, ch, mi = run_case(case, 3.5e14, 1e16, div=div, tfin=tfin)
        print(f"{tag} case {case}: argmax frac={frac:.3f} -> {third}; "
              f"final change={ch:.1e} max iters={mi} n range [{nc.min():.2e},{nc.max():.2e}]",
              flush=True)
