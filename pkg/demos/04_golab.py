"""Length is lower semicontinuous for connected cracks, and only for those.

A growing segment has lengths approaching 1 and its limit has length 1.
The oscillating family converges to the full midline in Hausdorff distance
while every member has length 1/2, so the limit is longer than the liminf.
"""

from quasifrac.scenarios import golab_demo

rep = golab_demo()
for name in ("connected", "oscillating"):
    r = rep[name]
    print(f"{name:12s} lengths {[round(float(x), 3) for x in r.lengths]}")
    print(f"{'':12s} limit length {r.limit_length}, semicontinuous: {r.semicontinuous}")
