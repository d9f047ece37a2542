import matplotlib.pyplot as plt
import numpy as np

plt.text(0.5, 0.5, "label")
plt.show()
