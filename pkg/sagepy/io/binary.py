"""
# binary.py

Little-endian primitives shared by the archive and model readers/writers.
Every read is bounds-checked against the buffer before it happens.
"""
import os
import struct
import tempfile

import numpy as np

from ..errors import CorruptHeaderError, TruncatedPayloadError, VersionUnsupportedError

U32 = struct.Struct('<I')
U8 = struct.Struct('<B')
F32 = struct.Struct('<f')
F32_DTYPE = np.dtype('<f4')


class ByteReader(object):
    """ Cursor over an in-memory file image.

    Args:
        data (bytes): file content
        name (str): file name used in diagnostics
    """

    def __init__(self, data, name=''):
        self.data = data
        self.name = name
        self.offset = 0

    @property
    def remaining(self):
        return len(self.data) - self.offset

    def _take(self, n_bytes):
        if n_bytes < 0 or n_bytes > self.remaining:
            raise TruncatedPayloadError(self.offset, "%s: need %i bytes at offset %i, %i left"
                                        % (self.name, n_bytes, self.offset, self.remaining))
        chunk = self.data[self.offset:self.offset + n_bytes]
        self.offset += n_bytes
        return chunk

    def read_u32(self):
        return U32.unpack(self._take(4))[0]

    def read_u8(self):
        return U8.unpack(self._take(1))[0]

    def read_f32(self):
        return float(F32.unpack(self._take(4))[0])

    def read_f32_array(self, shape):
        """ float32 payload of the given shape, returned as float64 """
        count = int(np.prod(shape, dtype=object))
        if count * 4 > self.remaining:
            raise TruncatedPayloadError(self.offset, "%s: payload of %i floats at offset %i exceeds the file"
                                        % (self.name, count, self.offset))
        return np.frombuffer(self._take(count * 4), dtype=F32_DTYPE).astype(np.float64).reshape(shape)

    def read_str(self):
        """ u32 byte length followed by UTF-8 text """
        start = self.offset
        n_bytes = self.read_u32()
        raw = self._take(n_bytes)
        try:
            return raw.decode('utf-8')
        except UnicodeDecodeError:
            raise CorruptHeaderError("%s: invalid UTF-8 string at offset %i" % (self.name, start))

    def expect_end(self):
        if self.remaining:
            raise CorruptHeaderError("%s: %i unexpected trailing bytes at offset %i"
                                     % (self.name, self.remaining, self.offset))


def pack_u32(value):
    return U32.pack(int(value))


def pack_u8(value):
    return U8.pack(int(value))


def pack_f32(value):
    return F32.pack(float(value))


def pack_f32_array(a):
    return np.ascontiguousarray(a, dtype=F32_DTYPE).tobytes()


def pack_str(text):
    raw = text.encode('utf-8')
    return pack_u32(len(raw)) + raw


def read_magic(reader, magic, supported_version):
    """ Check the 4-byte magic and the u32 format version """
    if reader.remaining < len(magic):
        raise CorruptHeaderError("%s: file too short for a header" % reader.name)
    found = reader._take(len(magic))
    if found != magic:
        raise CorruptHeaderError("%s: bad magic %r at offset 0, expected %r" % (reader.name, found, magic))
    version = reader.read_u32()
    if version != supported_version:
        raise VersionUnsupportedError("%s: format version %i is not supported (expected %i)"
                                      % (reader.name, version, supported_version))
    return version


def read_file(filename):
    if not os.path.isfile(filename):
        raise IOError("No such file or directory: " + filename)
    with open(filename, 'rb') as fh:
        return fh.read()


def atomic_write(filename, payload):
    """ Write bytes to a temporary file next to filename, then rename it over filename """
    directory = os.path.dirname(os.path.abspath(filename))
    fd, tmp = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        with os.fdopen(fd, 'wb') as fh:
            fh.write(payload)
        os.replace(tmp, filename)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
