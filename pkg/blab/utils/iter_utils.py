import numpy as np


def chunked(values: np.ndarray, size: int):
    """
    Splits a flat array into consecutive slices of a specified size.

    Args:
        values (np.ndarray): One-dimensional array to be split.
        size (int): The size of each slice.

    Yields:
        np.ndarray: Views holding up to `size` entries. The last slice may be shorter.
    """
    for start in range(0, values.shape[0], size):
        yield values[start : start + size]
