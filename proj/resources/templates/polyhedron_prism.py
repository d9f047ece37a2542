import numpy as np
import matplotlib.pyplot as plt
from mpl_toolkits.mplot3d.art3d import Poly3DCollection

n = {{n}}
r = {{radius}}
h = {{height}}
color = {{color}}

ang = 2 * np.pi * np.arange(n) / n
bottom = np.column_stack([r * np.cos(ang), r * np.sin(ang), np.zeros(n)])
top = bottom + np.array([0, 0, h])
faces = [bottom, top]
for i in range(n):
    j = (i + 1) % n
    faces.append(np.array([bottom[i], bottom[j], top[j], top[i]]))

fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")
ax.add_collection3d(Poly3DCollection(faces, facecolor=color, edgecolor="black", alpha=0.55, linewidth=1))

span = max(r, h / 2)
ax.set_xlim(-span, span)
ax.set_ylim(-span, span)
ax.set_zlim(0, 2 * span)
ax.set_box_aspect((1, 1, 1))
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Regular %d-gonal prism" % n)
plt.show()
