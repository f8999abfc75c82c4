"""
# config.py

JSON run configuration with sections world, train, edit, fusion and eval.
Missing keys take their defaults; unknown sections or keys, wrongly typed
values and out-of-range values raise ConfigError before any work starts.

    {"world": {"seed": 7, "n_seen": 20},
     "train": {"iterations": 3000},
     "edit":  {"alpha": 2.0, "t_b": [8, 10, 12]}}
"""
import json
import logging
import os
import typing
from dataclasses import dataclass, field, fields, asdict

from .errors import ConfigError, InvalidInputError
from .experiments import EvalConfig
from .factorization import TrainConfig
from .fusion import FusionConfig
from .generation import EditConfig
from .world import WorldSpec

logger = logging.getLogger(__name__)

SECTIONS = {
    'world': WorldSpec,
    'train': TrainConfig,
    'edit': EditConfig,
    'fusion': FusionConfig,
    'eval': EvalConfig,
}


@dataclass(frozen=True)
class RunConfig:
    """ One typed section per pipeline stage. """
    world: WorldSpec = field(default_factory=WorldSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    edit: EditConfig = field(default_factory=EditConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)


def _matches(value, annotation):
    """ True if a JSON value fits a dataclass field annotation """
    origin = typing.get_origin(annotation)
    if origin is typing.Union:
        return any(_matches(value, arg) for arg in typing.get_args(annotation))
    if origin in (list, typing.List):
        (item,) = typing.get_args(annotation) or (typing.Any,)
        return isinstance(value, list) and all(_matches(v, item) for v in value)
    if annotation is type(None):
        return value is None
    if annotation is typing.Any:
        return True
    if isinstance(value, bool):
        return annotation is bool
    if annotation is float:
        return isinstance(value, (int, float))
    return isinstance(value, annotation)


def _build_section(name, doc):
    cls = SECTIONS[name]
    if not isinstance(doc, dict):
        raise ConfigError("Config section '%s' must be a JSON object" % name)
    hints = typing.get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    for key, value in doc.items():
        if key not in known:
            raise ConfigError("Unknown config key '%s.%s'" % (name, key))
        if not _matches(value, hints[key]):
            raise ConfigError("Config key '%s.%s' has the wrong type: %r" % (name, key, value))
    values = {k: (float(v) if hints[k] is float else v) for k, v in doc.items()}
    try:
        return cls(**values).validate()
    except InvalidInputError as err:
        raise ConfigError("Invalid '%s' section: %s" % (name, err))


def config_from_dict(doc):
    """ Validate a parsed JSON document and build a RunConfig """
    if not isinstance(doc, dict):
        raise ConfigError("A run configuration must be a JSON object")
    for name in doc:
        if name not in SECTIONS:
            raise ConfigError("Unknown config section '%s'" % name)
    return RunConfig(**{name: _build_section(name, doc.get(name, {})) for name in SECTIONS})


def load_config(filename=None):
    """ Load and validate a JSON run configuration.

    Args:
        filename (str): path to a JSON file, None for the defaults

    Returns:
        RunConfig
    """
    if filename is None:
        return config_from_dict({})
    if not os.path.isfile(filename):
        raise IOError("No such file or directory: " + filename)
    with open(filename, 'r') as fh:
        try:
            doc = json.load(fh)
        except ValueError as err:
            raise ConfigError("%s is not valid JSON: %s" % (filename, err))
    logger.debug('Loaded config %s' % filename)
    return config_from_dict(doc)


def config_to_dict(cfg):
    """ Plain-dict echo of a RunConfig, suitable for JSON """
    return {name: asdict(getattr(cfg, name)) for name in SECTIONS}
