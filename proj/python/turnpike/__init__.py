try:
    from ._turnpike import *  # noqa: F401,F403
    from ._turnpike import __version__  # noqa: F401
except ImportError:  # development layout: extension sits on sys.path, not in the package
    from _turnpike import *  # noqa: F401,F403
    from _turnpike import __version__  # noqa: F401
