import itertools
import numpy as np
import matplotlib.pyplot as plt
from mpl_toolkits.mplot3d.art3d import Poly3DCollection

s = {{side}}
t1, t2, t3 = {{t1}}, {{t2}}, {{t3}}

fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")

corners = np.array(list(itertools.product([0, s], repeat=3)))
for a, b in itertools.combinations(range(8), 2):
    if np.count_nonzero(corners[a] != corners[b]) == 1:
        seg = np.array([corners[a], corners[b]])
        ax.plot(seg[:, 0], seg[:, 1], seg[:, 2], color="black", linewidth=1.2)

pts = np.array([[t1 * s, 0, 0], [0, t2 * s, 0], [0, 0, t3 * s]])
ax.add_collection3d(Poly3DCollection([pts], facecolor="#f4a261", edgecolor="#e76f51", alpha=0.7))
ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], color="#e76f51", s=30)
for name, p in zip("PQR", pts):
    ax.text(p[0], p[1], p[2], " " + name, fontsize=12)

ax.set_xlim(0, s)
ax.set_ylim(0, s)
ax.set_zlim(0, s)
ax.set_box_aspect((1, 1, 1))
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Section of a cube by plane PQR")
plt.show()
