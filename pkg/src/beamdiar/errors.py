"""Exception types shared across the package."""


class DataError(Exception):
    """Malformed or inconsistent input data (files, streams, references).

    The CLI maps this to exit code 2; usage errors exit with 1.
    """
