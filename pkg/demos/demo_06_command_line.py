"""
Driving runs from configuration files
=====================================

Each YAML file in ``configs/`` describes one task. The same runs are
available from the shell as ``sizestruct run configs/<file>.yaml --out DIR``.
"""

import tempfile
from pathlib import Path

from sizestruct.cli import emit_plot_script, run
from sizestruct.config import parse_config

here = Path(__file__).parent
with tempfile.TemporaryDirectory() as tmp:
    for path in sorted((here / "configs").glob("*.yaml")):
        report = run(parse_config(path.read_text()), Path(tmp) / path.stem)
        print(report.summary())
        if report.task in ("simulate", "spectral"):
            script = emit_plot_script(report)
            print("  gnuplot script:", script.name)
