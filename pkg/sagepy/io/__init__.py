from .archive import read_archive, write_archive
from .model_file import read_model, write_model
from .images import read_image, write_image
from .file_wrapper import open_file
