import numpy as np
import matplotlib.pyplot as plt

nx, ny, max_h = {{nx}}, {{ny}}, {{max_height}}
color = {{color}}
rng = np.random.default_rng({{layout_seed}})
heights = rng.integers(0, max_h + 1, size=(ny, nx))
heights[0, 0] = max(1, heights[0, 0])

fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")
for y in range(ny):
    for x in range(nx):
        for z in range(heights[y, x]):
            ax.bar3d(x, y, z, 1, 1, 1, color=color, edgecolor="black", linewidth=0.6, shade=True)

top = max(nx, ny, max_h)
ax.set_xlim(0, top)
ax.set_ylim(0, top)
ax.set_zlim(0, top)
ax.set_box_aspect((1, 1, 1))
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Stacked unit cubes: %d in total" % int(heights.sum()))
plt.show()
