"""Supervision pipeline for accessible text simplification.

Submodules:

* textunit, metrics: deterministic segmentation and accessibility metrics
* ruledsl: trigger-rule language (parse, lint, resolve, evaluate)
* kpi: composite quality index, per-profile indicators, study statistics
* checklist: six-dimension review checklist
* workflow: item lifecycle, governance gates, routing
* audit: hash-chained append-only event log with replay
* adaptation: consolidation of review outcomes into policy proposals
* pipeline: in-process orchestrator tying the above together
* gateway: HTTP API and command-line interface
"""

__version__ = "0.1.0"
