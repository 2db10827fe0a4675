"""Scanning ports 0-999 of the perimeter gateway, in both deployments.

With the software defined perimeter every probe is dropped silently, so the
scanner sees nothing at all. The static-perimeter comparison leaves its one
service port answering.
"""

from importlib import resources

from sdp_mtd.config import load_scenario
from sdp_mtd.report import run

scenarios = resources.files("sdp_mtd") / "scenarios"
for name in ("fig1_sdp_scan", "fig1_baseline_scan"):
    report = run(load_scenario(scenarios / f"{name}.cfg"))
    m = report.metrics
    print(f"{name:20s} open ports: {m.ports_reported_open or 'none'}"
          f"  (dropped at gateway: {m.dropped_at_gateway}, legit replies: {m.legit_replies}/{m.legit_sent})")
    for check in report.checks:
        print("   ", check.line())
