"""Composite quality profiling over corpus subsets.

Each subset gets min-max-normalized fps, bitrate, and pixel count; the
composite is their equal-weight mean. The profile sorts subsets along the
fidelity axis used to study where residual-level detection is reliable.

Run: python demos/05_quality_profiles.py
"""

from mpfscope.evaluate import QualityProfile, quality_profiles

# technical profiles in the style of published generator subsets
subsets = {
    "engine-a": QualityProfile(fps=30, bitrate_mbps=10.86, resolution_n=1430178),
    "engine-b": QualityProfile(fps=20, bitrate_mbps=1.70, resolution_n=684769),
    "engine-c": QualityProfile(fps=24, bitrate_mbps=3.59, resolution_n=808151),
    "engine-d": QualityProfile(fps=8, bitrate_mbps=1.51, resolution_n=258048),
    "engine-e": QualityProfile(fps=8, bitrate_mbps=0.38, resolution_n=184320),
}

profiled = quality_profiles(subsets)
print(f"{'subset':10s} {'fps':>6s} {'Mbps':>7s} {'pixels':>9s} {'composite':>10s}")
for name, p in sorted(profiled.items(), key=lambda kv: -kv[1].composite):
    print(f"{name:10s} {p.fps:6.1f} {p.bitrate_mbps:7.2f} "
          f"{p.resolution_n:9d} {p.composite:10.3f}")

print()
print("the highest-fps, highest-bitrate, highest-resolution subset pins")
print("composite 1.0 and the lowest pins 0.0; everything else interpolates.")
