import matplotlib.pyplot as plt

steps = {{steps}}
depth = {{depth}}
color = {{color}}

fig = plt.figure(figsize=(6, 6))
ax = fig.add_subplot(projection="3d")
count = 0
for i in range(steps):
    for y in range(depth):
        for z in range(steps - i):
            ax.bar3d(i, y, z, 1, 1, 1, color=color, edgecolor="black", linewidth=0.6)
            count += 1

top = max(steps, depth)
ax.set_xlim(0, top)
ax.set_ylim(0, top)
ax.set_zlim(0, top)
ax.set_box_aspect((1, 1, 1))
ax.view_init(elev={{elev}}, azim={{azim}})
ax.set_title("Staircase of %d unit cubes" % count)
plt.show()
