import numpy as np
import matplotlib.pyplot as plt

r = {{radius}}
h1 = {{cyl_height}}
h2 = {{cone_height}}

theta = np.linspace(0, 2 * np.pi, 48)
fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")

T, Z = np.meshgrid(theta, np.linspace(0, h1, 12))
ax.plot_surface(r * np.cos(T), r * np.sin(T), Z, color="#9fc5e8", alpha=0.6, linewidth=0)

T, S = np.meshgrid(theta, np.linspace(0, 1, 12))
ax.plot_surface((1 - S) * r * np.cos(T), (1 - S) * r * np.sin(T), h1 + S * h2,
                color="#f9cb9c", alpha=0.7, linewidth=0)

for z in (0, h1):
    ax.plot(r * np.cos(theta), r * np.sin(theta), np.full_like(theta, z), color="black", linewidth=1)
ax.plot([0, 0], [0, 0], [0, h1 + h2], color="gray", linestyle="--", linewidth=1)

span = max(r, (h1 + h2) / 2)
ax.set_xlim(-span, span)
ax.set_ylim(-span, span)
ax.set_zlim(0, 2 * span)
ax.set_box_aspect((1, 1, 1))
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Cone on a cylinder")
plt.show()
