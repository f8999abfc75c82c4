from .config import *


def plot_training_log(log, logged=True, ax=None):
    """ Plot the loss components of a training run

    Args:
        log (pd.DataFrame): FactorizationModel.log (iteration, total, rec, orth, sparse)
        logged (bool): logarithmic y axis
    """
    if ax is None:
        ax = plt.gca()
    for column in ('total', 'rec', 'orth', 'sparse'):
        ax.plot(log['iteration'], log[column], label=column)
    if logged:
        ax.set_yscale('log')
    ax.set_xlabel("Iteration")
    ax.set_ylabel("Loss")
    ax.legend()
    return ax
