import itertools
import numpy as np
import matplotlib.pyplot as plt

s = {{side}}
mode = {{mode}}
radius = s / 2 if mode == "inscribed" else s * np.sqrt(3) / 2

fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")

corners = np.array(list(itertools.product([-s / 2, s / 2], repeat=3)))
for a, b in itertools.combinations(range(8), 2):
    if np.count_nonzero(corners[a] != corners[b]) == 1:
        seg = np.array([corners[a], corners[b]])
        ax.plot(seg[:, 0], seg[:, 1], seg[:, 2], color="black", linewidth=1.2)

u, v = np.meshgrid(np.linspace(0, 2 * np.pi, 40), np.linspace(0, np.pi, 20))
ax.plot_surface(radius * np.cos(u) * np.sin(v), radius * np.sin(u) * np.sin(v), radius * np.cos(v),
                color="#6fa8dc", alpha=0.25, linewidth=0)
ax.scatter([0], [0], [0], color="black", s=15)

span = max(radius, s / 2)
ax.set_xlim(-span, span)
ax.set_ylim(-span, span)
ax.set_zlim(-span, span)
ax.set_box_aspect((1, 1, 1))
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Cube of side %.1f with its %s sphere" % (s, mode))
plt.show()
