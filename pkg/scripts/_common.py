from __future__ import annotations

import argparse
import dataclasses


def parse_config(cls, argv=None):
    """Expose the fields of a dataclass config as ``--field`` flags."""
    ap = argparse.ArgumentParser(description=cls.__doc__)
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        flag = "--" + f.name.replace("_", "-")
        if isinstance(default, bool):
            ap.add_argument(flag, action=argparse.BooleanOptionalAction, default=default)
        elif isinstance(default, (list, tuple)):
            kind = type(default[0]) if default else str
            ap.add_argument(flag, nargs="+", type=kind, default=list(default))
        else:
            ap.add_argument(flag, type=type(default), default=default)
    ns = ap.parse_args(argv)
    return cls(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in vars(ns).items()})
