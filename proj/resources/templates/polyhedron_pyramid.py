import numpy as np
import matplotlib.pyplot as plt
from mpl_toolkits.mplot3d.art3d import Poly3DCollection

n = {{n}}
r = {{radius}}
h = {{height}}

ang = 2 * np.pi * np.arange(n) / n
base = np.column_stack([r * np.cos(ang), r * np.sin(ang), np.zeros(n)])
apex = np.array([0.0, 0.0, h])
faces = [base] + [np.array([base[i], base[(i + 1) % n], apex]) for i in range(n)]

fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")
ax.add_collection3d(Poly3DCollection(faces, facecolor="#ffe599", edgecolor="black", alpha=0.55, linewidth=1))
if {{show_height}} == "yes":
    ax.plot([0, 0], [0, 0], [0, h], color="#cc0000", linestyle="--", linewidth=1.2)
    ax.text(0, 0, h / 2, " h")
ax.text(apex[0], apex[1], apex[2], " P")

span = max(r, h / 2)
ax.set_xlim(-span, span)
ax.set_ylim(-span, span)
ax.set_zlim(0, 2 * span)
ax.set_box_aspect((1, 1, 1))
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Regular %d-gonal pyramid" % n)
plt.show()
