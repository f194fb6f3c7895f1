"""
Reader and writer for the IDX tensor format used by MNIST-style image and label files.

Layout: two zero bytes, a type code, the number of dimensions, one big-endian 32-bit size per
dimension, then the big-endian payload.
"""
import gzip
import logging
import zlib
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from coherentfl.utils.errors import (
    IdxDimensionOverflowError,
    IdxMagicError,
    IdxParseError,
    IdxTruncatedError,
)

logger = logging.getLogger(__name__)

GZIP_MAGIC = b"\x1f\x8b"
MAX_ELEMENTS = 2**32

TYPE_CODES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


class IdxTensor(BaseModel):
    """Decoded IDX payload with its shape and type code."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: np.ndarray
    type_code: int = 0x08

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)


def parse_idx(raw: bytes) -> IdxTensor:
    """Decode an IDX byte string; every failure names the byte offset it was detected at."""
    if len(raw) < 4:
        raise IdxTruncatedError(f"Header needs 4 bytes, got {len(raw)}", len(raw))
    if raw[0] != 0 or raw[1] != 0:
        raise IdxMagicError(f"Bad magic prefix {raw[:2].hex()}", 0)
    type_code, ndim = raw[2], raw[3]
    if type_code not in TYPE_CODES:
        raise IdxMagicError(f"Unknown type code 0x{type_code:02x}", 2)
    if ndim == 0:
        raise IdxMagicError("Tensor must have at least one dimension", 3)

    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise IdxTruncatedError(f"Header declares {ndim} dimensions", len(raw))
    dims = [int(x) for x in np.frombuffer(raw, dtype=">u4", count=ndim, offset=4)]
    elements = 1
    for i, size in enumerate(dims):
        elements *= size
        if elements > MAX_ELEMENTS:
            raise IdxDimensionOverflowError(
                f"Dimensions {dims[: i + 1]} exceed {MAX_ELEMENTS} elements", 4 + 4 * i
            )

    dtype = TYPE_CODES[type_code]
    expected = elements * dtype.itemsize
    available = len(raw) - header_end
    if available < expected:
        raise IdxTruncatedError(
            f"Payload declares {expected} bytes, {available} present", len(raw)
        )
    if available > expected:
        raise IdxParseError(
            f"{available - expected} trailing bytes after payload", header_end + expected
        )
    if elements == 0:
        return IdxTensor(data=np.zeros(dims, dtype=dtype), type_code=type_code)
    data = np.frombuffer(raw, dtype=dtype, count=elements, offset=header_end).reshape(dims)
    return IdxTensor(data=data, type_code=type_code)


def serialize_idx(tensor: IdxTensor) -> bytes:
    """Encode a tensor back into IDX bytes."""
    dtype = TYPE_CODES[tensor.type_code]
    header = bytes([0, 0, tensor.type_code, tensor.data.ndim])
    dims = np.asarray(tensor.data.shape, dtype=">u4").tobytes()
    return header + dims + np.ascontiguousarray(tensor.data, dtype=dtype).tobytes()


def load_idx_file(path: Union[str, Path]) -> IdxTensor:
    """Read a plain or gzip-wrapped IDX file."""
    raw = Path(path).read_bytes()
    if raw[:2] == GZIP_MAGIC:
        logger.debug(f"Decompressing gzip-wrapped IDX file {path}")
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError, zlib.error) as e:
            raise IdxParseError(f"Corrupt gzip stream in {path}: {e}", 0)
    return parse_idx(raw)
