import os

# Check if $DISPLAY is set (for handling plotting on remote machines with no X-forwarding)
import matplotlib

if 'DISPLAY' not in os.environ.keys():
    matplotlib.use('Agg')

import matplotlib.pyplot as plt

plt.rcParams['axes.formatter.useoffset'] = False

MAX_LEGEND_ENTRIES = 12    # Categories beyond this share one legend entry
