import matplotlib.pyplot as plt
from matplotlib.patches import Circle, Polygon, Rectangle

solid = {{solid}}
w = {{width}}
h = {{height}}

fig, axes = plt.subplots(1, 3, figsize=(12, 4))
front, left, top = axes
style = dict(facecolor="none", edgecolor="black", linewidth=1.5)

for ax in (front, left):
    if solid in ("cylinder", "prism"):
        ax.add_patch(Rectangle((-w / 2, 0), w, h, **style))
    else:
        ax.add_patch(Polygon([(-w / 2, 0), (w / 2, 0), (0, h)], closed=True, **style))

if solid in ("cylinder", "cone"):
    top.add_patch(Circle((0, 0), w / 2, **style))
    if solid == "cone":
        top.plot([0], [0], marker="o", color="black")
else:
    top.add_patch(Rectangle((-w / 2, -w / 2), w, w, **style))
    if solid == "pyramid":
        top.plot([-w / 2, w / 2], [-w / 2, w / 2], color="black", linewidth=1)
        top.plot([-w / 2, w / 2], [w / 2, -w / 2], color="black", linewidth=1)

span = max(w, h) * 0.6 + 0.2
for ax, title in zip(axes, ("Front view", "Left view", "Top view")):
    ax.set_xlim(-span, span)
    ax.set_ylim(-span if ax is top else -0.2, span if ax is top else 2 * span - 0.2)
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.axis("off")

fig.suptitle("Three views of a %s" % solid)
plt.show()
