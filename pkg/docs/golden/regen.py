"""Regenerate the golden CLI outputs in this directory.

    python docs/golden/regen.py
"""

import contextlib
import io
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path

from bwave.cli import main

HERE = Path(__file__).resolve().parent


def render(name, argv):
    """Output of one golden command: the file it wrote under ``name``, else its stdout."""
    with tempfile.TemporaryDirectory() as tmp:
        shutil.copy(HERE / "default_scenario.json", tmp)
        cwd = os.getcwd()
        os.chdir(tmp)
        try:
            out, err = io.StringIO(), io.StringIO()
            with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
                code = main(argv)
            if code != 0:
                raise RuntimeError(f"{name}: exit {code}: {err.getvalue()}")
            written = Path(tmp) / name
            return written.read_text() if written.exists() else out.getvalue()
        finally:
            os.chdir(cwd)


def commands():
    return json.loads((HERE / "commands.json").read_text())


if __name__ == "__main__":
    for name, argv in commands().items():
        (HERE / name).write_text(render(name, argv))
        print(f"wrote {name}", file=sys.stderr)
