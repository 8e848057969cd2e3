"""What the explicit feature maps compute.

The poly2 map realizes the squared inner-product kernel exactly; the
random Fourier map approximates an RBF kernel, and its accuracy improves
as the number of cosine features grows. This script checks both claims
on random points.
"""

import math

import numpy as np

from streamkpca import FeatureMapSpec

rng = np.random.default_rng(0)

print("=== poly2: <phi(x), phi(y)> equals <x, y>^2 exactly ===")
spec = FeatureMapSpec.poly2(4)
worst = 0.0
for _ in range(5):
    x, y = rng.uniform(-2, 2, 4), rng.uniform(-2, 2, 4)
    feature_side = float(spec.apply(x) @ spec.apply(y))
    kernel_side = float(x @ y) ** 2
    worst = max(worst, abs(feature_side - kernel_side))
    print(f"  <phi(x),phi(y)> = {feature_side:+.6f}   <x,y>^2 = {kernel_side:+.6f}")
print(f"  worst discrepancy: {worst:.2e}\n")

print("=== rff: cosine features approximate exp(-||x-y||^2 / (2 sigma^2)) ===")
sigma = 1.2
x, y = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
target = math.exp(-float(np.sum((x - y) ** 2)) / (2 * sigma**2))
print(f"  target kernel value: {target:.4f}")
for m in (16, 64, 256, 1024, 4096):
    estimates = []
    for seed in range(30):
        spec = FeatureMapSpec.rff(3, m, sigma, seed)
        estimates.append(float(spec.apply(x) @ spec.apply(y)))
    mean = np.mean(estimates)
    spread = np.std(estimates)
    print(f"  m = {m:5d}: mean estimate {mean:.4f}  (std over seeds {spread:.4f})")

print("\n=== certified squared-norm bounds ===")
for spec, gbound in (
    (FeatureMapSpec.identity(4), 9.0),
    (FeatureMapSpec.poly2(4), 9.0),
    (FeatureMapSpec.rff(4, 64, 1.0, 7), 9.0),
):
    print(f"  {spec.kind:8s}: ||x||^2 <= {gbound} implies ||phi(x)||^2 <= "
          f"{spec.norm_bound(gbound)}")
