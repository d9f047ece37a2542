import matplotlib.pyplot as plt
from matplotlib.patches import Rectangle

# (row, col) cells of the 11 cube nets
NETS = [
    [(1, 0), (1, 1), (1, 2), (1, 3), (0, 0), (2, 0)],
    [(1, 0), (1, 1), (1, 2), (1, 3), (0, 0), (2, 1)],
    [(1, 0), (1, 1), (1, 2), (1, 3), (0, 0), (2, 2)],
    [(1, 0), (1, 1), (1, 2), (1, 3), (0, 0), (2, 3)],
    [(1, 0), (1, 1), (1, 2), (1, 3), (0, 1), (2, 1)],
    [(1, 0), (1, 1), (1, 2), (1, 3), (0, 1), (2, 2)],
    [(0, 0), (0, 1), (1, 1), (1, 2), (1, 3), (2, 1)],
    [(0, 0), (0, 1), (1, 1), (1, 2), (1, 3), (2, 2)],
    [(0, 0), (0, 1), (1, 1), (1, 2), (1, 3), (2, 3)],
    [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3)],
    [(0, 0), (0, 1), (0, 2), (1, 2), (1, 3), (1, 4)],
]

net = NETS[{{net_index}}]
size = {{cell_size}}
face_color = {{face_color}}
label_style = {{label_style}}

fig, ax = plt.subplots(figsize=(7, 5))
for i, (row, col) in enumerate(net):
    x, y = col * size, -row * size
    ax.add_patch(Rectangle((x, y), size, size, facecolor=face_color, edgecolor="black", linewidth=1.5))
    if label_style == "letters":
        ax.text(x + size / 2, y + size / 2, "ABCDEF"[i], ha="center", va="center", fontsize=14)
    elif label_style == "numbers":
        ax.text(x + size / 2, y + size / 2, str(i + 1), ha="center", va="center", fontsize=14)

cols = max(c for _, c in net) + 1
rows = max(r for r, _ in net) + 1
ax.set_xlim(-0.2 * size, (cols + 0.2) * size)
ax.set_ylim(-(rows - 1 + 0.2) * size, 1.2 * size)
ax.set_aspect("equal")
ax.axis("off")
ax.set_title("Net of a cube")
plt.show()
