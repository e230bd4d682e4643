"""
Show that the plain forward step diverges on a rotation.

On ``rotation2`` every forward step multiplies the distance to the solution by
``sqrt(1 + eta^2)``, whatever the step size, while one extragradient step at
the same ``eta`` contracts it.

Usage: python3 demos/forward_divergence.py
"""

import math

import numpy as np

from inclsolve import get_problem, iterate, make_config

p = get_problem("rotation2")
x0 = np.array([1.0, 0.0])
for eta in (0.1, 0.5, 0.9):
    fw = make_config("fw", p, eta=eta, override=True)
    eg = make_config("eg", p, eta=eta)
    r_fw = [float(np.linalg.norm(s.x)) for s in iterate(p, fw, x0, 20)]
    r_eg = [float(np.linalg.norm(s.x)) for s in iterate(p, eg, x0, 20)]
    print(f"eta={eta:.1f}  fw ratio {r_fw[1] / r_fw[0]:.6f} "
          f"(predicted {math.sqrt(1 + eta ** 2):.6f}), |x_20| = {r_fw[-1]:.3e}; "
          f"eg |x_20| = {r_eg[-1]:.3e}")
