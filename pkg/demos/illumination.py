"""
Census and NCC under illumination changes
=========================================

SAD compares raw intensities, so a brightness gain on one camera hurts it.
NCC divides the gain out, and census only keeps the sign of local
comparisons, so any strictly increasing remap leaves it unchanged.
"""

import numpy as np

from stereoeval import DisparityRange, MatchConfig, census_transform, default_registry

rng = np.random.default_rng(4)
shift = 5
canvas = rng.integers(5, 61, size=(80, 120 + shift)).astype(np.uint8)
reference, match = canvas[:, shift:shift + 120], canvas[:, :120]

registry = default_registry()
config = MatchConfig(range=DisparityRange(0, 12))

def correct(dmap):
    return np.mean(dmap.data[dmap.valid] == shift)

# doubled brightness on the match camera
bright = (match.astype(np.int64) * 2).astype(np.uint8)
for name in ("sad", "ncc"):
    before = registry.run(name, reference, match, config)
    after = registry.run(name, reference, bright, config)
    print(f"{name}: correct {correct(before):.3f} -> {correct(after):.3f}, "
          f"identical map: {before == after}")

# gamma 0.5 on both images; strictly increasing on [5, 60]
lut = np.rint(255.0 * (np.arange(256) / 255.0) ** 0.5).astype(np.uint8)
c1 = census_transform(reference, 2)
c2 = census_transform(lut[reference], 2)
print("census vectors unchanged by gamma:", np.array_equal(c1.packed, c2.packed))
shd = registry.run("shd", reference, match, config)
shd_gamma = registry.run("shd", lut[reference], lut[match], config)
print("shd map unchanged by gamma:", shd == shd_gamma)
