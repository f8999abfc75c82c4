from .config import *

import numpy as np


def plot_pca(points, labels, highlight=None, ax=None, **kwargs):
    """ Scatter 2-D PCA points, one colour per label

    Args:
        points (np.array): (N, 2) output of metrics.pca2d
        labels (list): N labels, e.g. category ids or 'real' / 'sage'
        highlight (str): label drawn on top with larger markers
        kwargs: keyword args to be passed to matplotlib scatter()
    """
    points = np.asarray(points)
    labels = np.asarray(labels)
    if ax is None:
        ax = plt.gca()

    unique = sorted(set(labels.tolist()))
    if highlight in unique:
        unique.remove(highlight)
        unique.append(highlight)
    for i, label in enumerate(unique):
        sel = labels == label
        size = 40 if label == highlight else 12
        name = label if i < MAX_LEGEND_ENTRIES or label == highlight else None
        ax.scatter(points[sel, 0], points[sel, 1], s=size, label=name, **kwargs)

    ax.set_xlabel("PC 1")
    ax.set_ylabel("PC 2")
    ax.legend(fontsize='small')
    return ax
