import numpy as np

from sagepy.metrics import pca2d
from sagepy.plotting import plot_pca, plot_training_log
from sagepy.plotting.config import plt
from tests.data import small_library, small_model


def test_plot_pca(tmp_path):
    library = small_library()
    codes, labels = [], []
    for cat_id in library.ids():
        codes.append(library.codes(cat_id).reshape(library.count(cat_id), -1))
        labels += [cat_id] * library.count(cat_id)
    points = pca2d(np.concatenate(codes))

    plt.figure("TEST PCA", figsize=(8, 6))
    ax = plot_pca(points, labels, highlight='unseen_00')
    assert len(ax.collections) == len(library)
    plt.savefig(str(tmp_path / "test_plot_pca.png"))
    plt.close()


def test_plot_training_log(tmp_path):
    model = small_model()

    plt.figure("TEST TRAINING", figsize=(10, 4))
    plt.subplot(1, 2, 1)
    plot_training_log(model.log)
    plt.subplot(1, 2, 2)
    ax = plot_training_log(model.log, logged=False)
    assert len(ax.lines) == 4
    plt.tight_layout()
    plt.savefig(str(tmp_path / "test_plot_training.png"))
    plt.close()


if __name__ == "__main__":
    import tempfile
    from pathlib import Path
    test_plot_pca(Path(tempfile.mkdtemp()))
    test_plot_training_log(Path(tempfile.mkdtemp()))
