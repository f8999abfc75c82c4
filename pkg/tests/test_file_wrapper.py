import pytest
from sagepy.io.archive import write_archive
from sagepy.io.file_wrapper import describe, file_type, open_file
from sagepy.io.images import write_image
from sagepy.io.model_file import write_model
from sagepy.latent import CategoryLibrary
from sagepy.factorization import FactorizationModel
from tests.data import default_oracle, small_library, here
import numpy as np


def test_file_type(tmp_path):
    lib = str(tmp_path / 'lib.sagl')
    model = str(tmp_path / 'model.sagm')
    img = str(tmp_path / 'img.ppm')
    write_archive(lib, small_library())
    write_model(model, default_oracle())
    write_image(img, np.full((3, 4, 3), 0.5))

    assert file_type(lib) == 'archive'
    assert file_type(model) == 'model'
    assert file_type(img) == 'image'

    assert isinstance(open_file(lib), CategoryLibrary)
    assert isinstance(open_file(model), FactorizationModel)
    assert open_file(img).shape == (3, 4, 3)

    assert describe(lib)['categories'] == len(small_library())
    assert describe(model)['encoder'] is None
    assert describe(img) == {'format': 'P6', 'height': 3, 'width': 4, 'channels': 3}


def test_invalid_files():
    # script should error-out if file does not exist
    with pytest.raises(IOError):
        open_file(here + 'file_does_not_exist.sagl')

    # script should error-out if file is not a
    # valid sagepy data file
    with pytest.raises(NotImplementedError):
        open_file(here + '/run_tests.sh')


if __name__ == "__main__":
    test_invalid_files()
