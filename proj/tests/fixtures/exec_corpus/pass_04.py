import matplotlib.pyplot as plt
import numpy as np

x = np.linspace(0, 6.28, 100)
plt.plot(x, np.sin(x))
plt.show()
