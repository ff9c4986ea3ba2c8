"""Compute a 121-point spherical 10-design and write it as an `x y z` point file.

Starts from a Fibonacci spiral and drives the equal-weight cubature error for
all real spherical harmonics of degree 1..10 to zero with a trust-region
least-squares solve. Output is scaled to the requested radius.

    python3 scripts/tdesign121.py 1.5 > crates/core/data/tdesign121_r1.5.txt
"""
import sys

import numpy as np
from scipy.optimize import least_squares
from scipy.special import sph_harm_y

T = 10
N = (T + 1) ** 2


def fibonacci(n):
    i = np.arange(n) + 0.5
    theta = np.arccos(1.0 - 2.0 * i / n)
    phi = np.pi * (1.0 + 5.0 ** 0.5) * i
    return theta, phi


def residual(params):
    theta, phi = params[:N], params[N:]
    out = []
    for n in range(1, T + 1):
        for m in range(0, n + 1):
            s = sph_harm_y(n, m, theta, phi).sum()
            out.append(s.real)
            if m > 0:
                out.append(s.imag)
    return np.array(out)


def main():
    radius = float(sys.argv[1]) if len(sys.argv) > 1 else 1.5
    theta, phi = fibonacci(N)
    sol = least_squares(residual, np.concatenate([theta, phi]), method="trf",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    theta, phi = sol.x[:N], sol.x[N:]
    err = np.abs(residual(sol.x)).max()
    print(f"# {N}-point spherical {T}-design, radius {radius} m")
    print(f"# max |sum Y_nm| over degrees 1..{T}: {err:.3e}")
    print("# x y z (meters)")
    for t, p in zip(theta, phi):
        x = radius * np.sin(t) * np.cos(p)
        y = radius * np.sin(t) * np.sin(p)
        z = radius * np.cos(t)
        print(f"{x:.17e} {y:.17e} {z:.17e}")


if __name__ == "__main__":
    main()
