import numpy as np
import matplotlib.pyplot as plt
from mpl_toolkits.mplot3d.art3d import Poly3DCollection

s = {{side}}
th = np.radians({{fold_deg}})
c, k = np.cos(th), np.sin(th)


def flap(edge):
    # Square hinged on one base edge, raised by the fold angle.
    pts = []
    for u, d in [(0, 0), (s, 0), (s, s), (0, s)]:
        if edge == "south":
            pts.append([u, -d * c, d * k])
        elif edge == "north":
            pts.append([u, s + d * c, d * k])
        elif edge == "west":
            pts.append([-d * c, u, d * k])
        else:
            pts.append([s + d * c, u, d * k])
    return np.array(pts)


base = np.array([[0, 0, 0], [s, 0, 0], [s, s, 0], [0, s, 0]])
faces = [base] + [flap(e) for e in ("south", "north", "west", "east")]
# Lid hangs off the far edge of the north flap and turns by the angle again.
c2, k2 = np.cos(2 * th), np.sin(2 * th)
far = [s + s * c, s * k]
lid = np.array([[u, far[0] + d * c2, far[1] + d * k2] for u, d in [(0, 0), (s, 0), (s, s), (0, s)]])
faces.append(lid)

colors = ["#cccccc", "#9fc5e8", "#b6d7a8", "#f9cb9c", "#d5a6bd", "#ffe599"]
fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")
ax.add_collection3d(Poly3DCollection(faces, facecolor=colors, edgecolor="black", alpha=0.7))

lo, hi = -s * 1.1, s * 2.1
ax.set_xlim(lo, hi)
ax.set_ylim(lo, hi)
ax.set_zlim(0, hi - lo)
ax.set_box_aspect((1, 1, 1))
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Cube net folded by %d degrees" % {{fold_deg}})
plt.show()
