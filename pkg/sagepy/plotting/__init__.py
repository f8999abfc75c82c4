from .plot_pca import plot_pca
from .plot_training import plot_training_log
from . import config as plot_config
