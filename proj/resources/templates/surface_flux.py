import numpy as np
import matplotlib.pyplot as plt

R = {{R}}
p, q, r = {{p}}, {{q}}, {{r}}

u, v = np.meshgrid(np.linspace(0, 2 * np.pi, 40), np.linspace(0, np.pi / 2, 15))
X, Y, Z = R * np.cos(u) * np.sin(v), R * np.sin(u) * np.sin(v), R * np.cos(v)

fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")
ax.plot_surface(X, Y, Z, color="#b6d7a8", alpha=0.4, linewidth=0)

su, sv = np.meshgrid(np.linspace(0, 2 * np.pi, 8, endpoint=False), np.linspace(0.3, np.pi / 2, 3))
sx, sy, sz = R * np.cos(su) * np.sin(sv), R * np.sin(su) * np.sin(sv), R * np.cos(sv)
ax.quiver(sx, sy, sz, p * sx, q * sy, r * sz, length=0.25, normalize=True, color="#3d85c6")

ax.set_xlim(-R, R)
ax.set_ylim(-R, R)
ax.set_zlim(0, R)
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Flux of F = (%dx, %dy, %dz) through the upper hemisphere" % (p, q, r))
plt.show()
