"""Tilt equations and conditioned mean profiles.

For boundary data (xi_left, xi_right, a) two tilts (u*, v*) solve the dual
moment conditions, and the conditioned mean follows by quadrature.  For the
Gaussian step the profile is the cubic t(1-t)^2 xi_left + t^2(1-t) xi_right
+ a t^2(3-2t), which makes a sharp reference; the quartic step has no closed
form and everything runs through the numerical moment generating function.
"""

import numpy as np

from semiflex.ldp import ld_rate, limit_log_mgf, mean_profile, solve_tilts
from semiflex.model import GaussianPotential, PowerLawPotential

CASES = ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.5, -0.25, 0.75))


def main():
    for pot, label in ((GaussianPotential(1.0), "gaussian"),
                       (PowerLawPotential(0.25, 4.0), "quartic")):
        mgf = limit_log_mgf(pot)
        print(f"{label} step potential")
        for xl, xr, a in CASES:
            sol = solve_tilts(xl, xr, a, 1.0, mgf)
            rate = ld_rate(xl, xr, a, 1.0, mgf)
            print(f"  (xiL, xiR, a) = ({xl:+.2f}, {xr:+.2f}, {a:+.2f})"
                  f"   u* = {sol.u_star:+9.4f}  v* = {sol.v_star:+9.4f}"
                  f"   rate = {rate:.4f}")
        ts = np.linspace(0.0, 1.0, 9)
        prof = mean_profile(ts, 0.5, -0.25, 0.75, 1.0, mgf)
        row = "  ".join(f"{v:+.4f}" for v in prof)
        print("  mean profile for (0.50, -0.25, 0.75) at t = 0, 1/8, ..., 1:")
        print(f"    {row}")


if __name__ == "__main__":
    main()
