import numpy as np
import matplotlib.pyplot as plt

a = {{a}}
R = {{R}}

rho, phi = np.meshgrid(np.linspace(0, R, 30), np.linspace(0, 2 * np.pi, 60))
X, Y = rho * np.cos(phi), rho * np.sin(phi)
Z = a * (X ** 2 + Y ** 2)

fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")
ax.plot_surface(X, Y, Z, cmap={{cmap}}, alpha=0.85, linewidth=0)
ax.plot_surface(X, Y, np.zeros_like(Z), color="lightgray", alpha=0.4, linewidth=0)
circle = np.linspace(0, 2 * np.pi, 100)
ax.plot(R * np.cos(circle), R * np.sin(circle), np.zeros_like(circle), color="black", linewidth=1.2)
ax.text(0, 0, 0, "D")

ax.set_xlabel("x")
ax.set_ylabel("y")
ax.set_zlabel("z")
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("z = %.2f(x^2 + y^2) over the disk of radius %.2f" % (a, R))
plt.show()
