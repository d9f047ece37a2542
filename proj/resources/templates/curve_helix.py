import numpy as np
import matplotlib.pyplot as plt

r = {{radius}}
pitch = {{pitch}}
turns = {{turns}}
color = {{color}}

t = np.linspace(0, 2 * np.pi * turns, 400)
x, y, z = r * np.cos(t), r * np.sin(t), pitch * t / (2 * np.pi)

fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")
ax.plot(x, y, z, color=color, linewidth=2)
ax.scatter([x[0], x[-1]], [y[0], y[-1]], [z[0], z[-1]], color="black", s=25)
ax.text(x[0], y[0], z[0], " A")
ax.text(x[-1], y[-1], z[-1], " B")

span = max(r, z[-1] / 2)
ax.set_xlim(-span, span)
ax.set_ylim(-span, span)
ax.set_zlim(0, 2 * span)
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Helix with %d turns" % turns)
plt.show()
