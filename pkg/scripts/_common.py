import argparse
import json
import os

import numpy as np


def parser(desc, paths=None):
    ap = argparse.ArgumentParser(description=desc)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="directory for CSV and summary.json (optional)")
    if paths is not None:
        ap.add_argument("--paths", type=int, default=paths)
    return ap


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def save(out, summary, files):
    print(json.dumps(summary, indent=2, sort_keys=True, default=_default))
    if out is None:
        return
    os.makedirs(out, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(out, name), "w") as fh:
            fh.write(text)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_default)
