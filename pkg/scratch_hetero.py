"""Scan gamma-scale and N_ref interpretations for the heterogeneous cases."""
import sys
import numpy as np
import logging
logging.basicConfig(level=logging.WARNING)
import tecsim as ts
from tecsim import equations as eq, solver as sv
from tecsim.mesh import Surface

L = 10e-9
CASES = {
    "a": dict(mu=(3e-6, 300.0, 3e-10), kappa=(30.0, 3.0, 300.0),
              rho=(3.98e6,) * 3, c=(880.0,) * 3),
    "b": dict(mu=(300.0, 300.0, 3e-10), kappa=(0.3, 0.3, 300.0),
              rho=(3.98e6,) * 3, c=(880.0,) * 3),
    "c": dict(mu=(300.0, 3e-10, 3e-6), kappa=(0.03, 0.03, 300.0),
              rho=(3.98e9, 3.98e9, 3.98e6), c=(8800.0, 8800.0, 880.0)),
}

def run_case(case, gamma, n_ref, div=(10, 10, 20), tfin=2e-6):
    p = CASES[case]
    zones = [ts.ActiveMaterial(epsilon=8.854e-12, alpha=1e-4, kappa=p["kappa"][i],
                               rho=p["rho"][i], c=p["c"][i], mu_el=p["mu"][i])
             for i in range(3)]
    mat = ts.MaterialTable(active=zones, active_breaks=(3e-9, 7e-9),
                           n_ref=n_ref, charge_number=-1)
    mesh = ts.build_box_mesh((L, L, L), div)
    coeffs = mat.bind(mesh)
    bc = eq.BoundarySpec(
        poisson={Surface.SIGMA_B: eq.Dirichlet(0.0),
                 Surface.SIGMA_T: eq.Dirichlet(1.0),
                 Surface.SIGMA_LAT: eq.Neumann(0.0)},
        continuity={Surface.GAMMA_B: eq.Robin(2e2, 1e19),
                    Surface.GAMMA_T: eq.Robin(2e2, 1e13),
                    Surface.SIGMA_LAT_A: eq.Robin(2e2, 1e13)},
        heat={Surface.GAMMA_B: eq.Robin(gamma, 300.0),
              Surface.GAMMA_T: eq.Robin(gamma, 600.0),
              Surface.SIGMA_LAT: eq.Robin(gamma, 300.0)})
    nv = mesh.num_vertices
    state = eq.FieldState(0.0, np.zeros(nv), np.full(nv, 1e16), np.full(nv, 300.0))
    grid = sv.TimeGrid.geometric(1e-10, 2.0, tfin)
    settings = sv.GummelSettings(toll=1e-3, max_iterations=100)
    res = sv.run_transient(mesh, coeffs, bc, state, grid, settings)
    st = res.final_state
    zc, nc = ts.extract_line_cut(mesh, st.n, "z", (L / 2, L / 2), 41)
    _, tc = ts.extract_line_cut(mesh, st.T, "z", (L / 2, L / 2), 41)
    frac = zc[np.argmax(nc)] / L
    third = "bottom" if frac < 1 / 3 else ("middle" if frac < 2 / 3 else "top")
    iters = [t.iterations for t in res.traces]
    return frac, third, nc, tc, res.step_changes[-1], max(iters)

if __name__ == "__main__":
    for gamma in (1e5, 3.5e14):
        for n_ref in (1.0, 1e13, 1e16):
            row = []
            for case in "abc":
                try:
                    frac, third, nc, tc, ch, mi = run_case(case, gamma, n_ref)
                    row.append(f"{case}:{third}({frac:.2f}) T[{tc.min():.0f},{tc.max():.0f}] ch={ch:.0e} it={mi}")
                except Exception as exc:
                    row.append(f"{case}:FAIL {type(exc).__name__} {str(exc)[:60]}")
            print(f"gamma={gamma:.0e} n_ref={n_ref:.0e} | " + " | ".join(row), flush=True)
