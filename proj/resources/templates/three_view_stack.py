import numpy as np
import matplotlib.pyplot as plt
from matplotlib.patches import Rectangle

nx, ny, nz = {{nx}}, {{ny}}, {{nz}}
fill = {{fill_color}}
rng = np.random.default_rng({{layout_seed}})
heights = rng.integers(1, nz + 1, size=(ny, nx))
heights[0, 0] = nz

front = heights.max(axis=0)  # per x column
side = heights.max(axis=1)   # per y row
top = np.ones((ny, nx), dtype=int)

fig, axes = plt.subplots(1, 3, figsize=(12, 4))
panels = [
    ("Front view", [(x, z) for x in range(nx) for z in range(front[x])], nx, nz),
    ("Left view", [(y, z) for y in range(ny) for z in range(side[y])], ny, nz),
    ("Top view", [(x, y) for y in range(ny) for x in range(nx) if top[y, x]], nx, ny),
]
for ax, (title, cells, w, h) in zip(axes, panels):
    for u, v in cells:
        ax.add_patch(Rectangle((u, v), 1, 1, facecolor=fill, edgecolor="black", linewidth=1.2))
    ax.set_xlim(-0.5, max(w, h) + 0.5)
    ax.set_ylim(-0.5, max(w, h) + 0.5)
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.axis("off")

fig.tight_layout()
plt.show()
