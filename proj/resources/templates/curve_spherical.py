import numpy as np
import matplotlib.pyplot as plt

a = {{radius}}
q = {{q}}

t = np.linspace(0, np.pi, 600)
x = a * np.sin(t) * np.cos(q * t)
y = a * np.sin(t) * np.sin(q * t)
z = a * np.cos(t)

fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")
if {{show_sphere}} == "yes":
    u, v = np.meshgrid(np.linspace(0, 2 * np.pi, 30), np.linspace(0, np.pi, 15))
    ax.plot_wireframe(a * np.cos(u) * np.sin(v), a * np.sin(u) * np.sin(v), a * np.cos(v),
                      color="lightgray", linewidth=0.5)
ax.plot(x, y, z, color="tab:red", linewidth=2)
ax.scatter([0, 0], [0, 0], [a, -a], color="black", s=20)

ax.set_xlim(-a, a)
ax.set_ylim(-a, a)
ax.set_zlim(-a, a)
ax.set_box_aspect((1, 1, 1))
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Spherical spiral with %d windings" % q)
plt.show()
