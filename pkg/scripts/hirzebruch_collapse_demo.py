"""Collapse of the first Hirzebruch surface onto its base CP^1.

The fiber class dies at t = infinity while the base stays near Y omega_FS.
Prints the C^0 distance of phi to the limit potential psi and the scaled
fiber oscillation, both of which decay like e^{-t}.
"""
import numpy as np

from fano_continuity import ContinuityPath, ModelSpec, build_limit, default_schedule, measure


def main():
    spec = ModelSpec.hirzebruch(a=1, kappa=1.0)
    path = ContinuityPath(spec, npoints=256)
    limit = build_limit(spec, path.u0, path.volume)
    print(f"base limit: G = {limit.G_value:.6f}, psi = {limit.psi_value:.6f}")
    print(f"{'t':>6} {'|phi - psi|':>12} {'e^t |phi - psi|':>16} {'fiber osc':>11} "
          f"{'fiber diam':>11} {'newton':>6}")
    for state in path.march(default_schedule()):
        if state.t < 1 or abs(state.t - round(state.t)) > 1e-9:
            continue
        row = measure(state, limit, path)
        print(f"{state.t:6.2f} {row.c0_phi_minus_psi:12.4e} {np.exp(state.t) * row.c0_phi_minus_psi:16.6f} "
              f"{row.fiber_osc_scaled:11.4e} {row.fiber_diam:11.6f} {row.newton_iters:6d}")


if __name__ == "__main__":
    main()
