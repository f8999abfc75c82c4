from __future__ import absolute_import

from . import linalg, latent, world, factorization, generation, fusion, metrics, experiments
from .latent import CategoryLibrary, RelevantDictionary
from .world import WorldSpec, make_world, sample_library
from .factorization import FactorizationModel, TrainConfig, train
from .generation import EditConfig, sage_pipeline, multi_tb_generate
from .io import file_wrapper

try:
    from importlib.metadata import version, PackageNotFoundError
    __version__ = version('sagepy')
except PackageNotFoundError:
    __version__ = '0.0.0 - please install via pip/setup.py'
