"""
Bjontegaard deltas and storage energy
=====================================

Rate-distortion comparison of two ladders, and the storage-energy model in
which energy scales with the square of the stored size.
"""

from vfrladder import metrics

reference = metrics.RDCurve([145e3, 730e3, 2e6, 4.5e6, 7.8e6], [40.0, 62.0, 78.0, 88.0, 93.0])
cheaper = metrics.RDCurve([0.8 * b for b in reference.bitrates], reference.qualities)
better = metrics.RDCurve(reference.bitrates, [q + 2.0 for q in reference.qualities])

print(f"20% fewer bits, same quality: BD-rate {metrics.bd_rate(reference, cheaper):.2f}%")
print(f"+2 VMAF at the same bitrates: BD-quality {metrics.bd_quality(reference, better):.3f}")

# %%
# Storing 1.9 GB (1.52e10 bits) costs about 0.119 J; half the size costs a quarter.
print(f"{metrics.storage_energy(1.52e10):.6f} J")
print(f"{metrics.storage_energy(0.76e10) / metrics.storage_energy(1.52e10):.2f} of the energy at half size")
