import numpy as np
import matplotlib.pyplot as plt
from mpl_toolkits.mplot3d.art3d import Poly3DCollection

r = {{radius}}
h = {{height_ratio}} * r
slope = np.tan(np.radians({{tilt_deg}}))

theta = np.linspace(0, 2 * np.pi, 60)
T, Z = np.meshgrid(theta, np.linspace(0, h, 15))

fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")
ax.plot_surface(r * np.cos(T), r * np.sin(T), Z, color="#cfe2f3", alpha=0.35, linewidth=0)
for z in (0, h):
    ax.plot(r * np.cos(theta), r * np.sin(theta), np.full_like(theta, z), color="black", linewidth=1)

x, y = r * np.cos(theta), r * np.sin(theta)
z = h / 2 + slope * x
ax.add_collection3d(Poly3DCollection([np.column_stack([x, y, z])], facecolor="#e06666", edgecolor="#990000", alpha=0.6))

span = max(r, h / 2)
ax.set_xlim(-span, span)
ax.set_ylim(-span, span)
ax.set_zlim(0, 2 * span)
ax.set_box_aspect((1, 1, 1))
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Inclined section of a cylinder (tilt %d deg)" % {{tilt_deg}})
plt.show()
