"""How long is the solution guaranteed to exist, and how large can it get?

For exponentially decaying data |c_n(0)| <= A e^{-rho|n|} the Picard scheme
stays inside the envelope B e^{-rho|n|/2} up to an explicit time L. This
script prints L and B for a few settings and shows the trade-off between
amplitude and horizon.
"""
from fractions import Fraction

from qpbbm import bounds
from qpbbm.spectral import DecayProfile

print("exact horizons (A = rho = 1, one frequency):")
for p in (2, 3, 4):
    L = bounds.exp_horizon_bbm(1, 1, 1) if p == 2 else bounds.exp_horizon(p, 1, 1, 1)
    B = bounds.exp_constant(p, 1, 1, 1)
    print(f"  p={p}: L = {L}  B = {B}")

print("\nmore frequencies shrink the horizon geometrically:")
for nu in (1, 2, 3):
    print(f"  nu={nu}: L = {bounds.exp_horizon_bbm(1, Fraction(1, 2), nu)}  (rho = 1/2)")

print("\npolynomial data |c_n(0)| <= A (1+|n|)^{-r}, p = 2:")
for r in (16.0, 24.0, 32.0):
    rep = bounds.horizon(2, DecayProfile.polynomial(1.0, r), 1)
    print(f"  r={r:4.0f}: L = {rep.horizon:.6f}  B = {rep.constant_B:.6f}")

target = 0.5
A = bounds.max_amplitude(2, "exp", 1.0, 1, target)
print(f"\nlargest amplitude reaching T = {target}: A = {A:.6f}")
