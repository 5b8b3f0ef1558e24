"""Per-criterion outcome store shared between the acceptance tests and conftest."""
import contextlib

RESULTS = {}


@contextlib.contextmanager
def criterion(number, text):
    """Record PASS/FAIL for ``number``; the summary line is printed at session end."""
    try:
        yield
    except BaseException as exc:
        RESULTS[number] = ("FAIL", f"{text} ({type(exc).__name__}: {str(exc)[:120]})")
        raise
    RESULTS[number] = ("PASS", text)
