"""Plain-text dumps of fundamental matrices and correspondences."""

from pathlib import Path
from typing import Union

import numpy as np

from geowarp.core.exceptions import ParseError

from .models import CorrespondenceSet, FundamentalMatrix


def write_fundamental_text(path: Union[str, Path], fundamental: FundamentalMatrix) -> None:
    """9 floats, row-major, one line."""
    np.savetxt(path, fundamental.matrix.reshape(1, 9), fmt="%.17g")


def read_fundamental_text(path: Union[str, Path]) -> FundamentalMatrix:
    tokens = Path(path).read_text().split()
    if len(tokens) != 9:
        raise ParseError(f"expected 9 floats, got {len(tokens)}", line=1)
    try:
        values = np.array([float(t) for t in tokens])
    except ValueError as e:
        raise ParseError(f"non-numeric token: {e}", line=1)
    return FundamentalMatrix.from_raw(values.reshape(3, 3))


def write_correspondences_text(path: Union[str, Path], corr: CorrespondenceSet) -> None:
    """One pair per line: u v u' v'."""
    np.savetxt(path, np.hstack([corr.src, corr.dst]), fmt="%.17g", header="u v u' v'")
