"""
Figure scenarios
================

Run the four figure scenarios and print their structural checks. Each
bundle (CSV profiles, summary table, SVG panels) lands in out/<figure>.
"""

from sislab.config import figure_config
from sislab.experiments import run_scenario

for tag in ("fig1", "fig2", "fig3", "fig4"):
    bundle = run_scenario(figure_config(tag))
    print(f"{tag}: {len(bundle.files)} files in {bundle.out_dir}")
    for text, ok, value in bundle.checks:
        print(f"  [{'PASS' if ok else 'FAIL'}] {text}  ({value:.4g})")
