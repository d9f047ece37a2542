import matplotlib.pyplot as plt
import numpy as np

plt.hist(np.arange(50) % 7, bins=7)
plt.show()
