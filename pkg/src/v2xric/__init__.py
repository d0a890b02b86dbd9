"""Discrete-time simulator of controller-assisted vehicular relaying.

A four-arm urban intersection carries seeded traffic between street-canyon
buildings; every vehicle and roadside unit measures its mmWave links and
reports them to a central controller, whose relay-assignment application
computes hop-bounded maximum-bottleneck-SNR paths and pushes forwarding
state back to the nodes. The engine scores network connectivity under
minimum-SNR constraints and sweeps it against the SNR threshold and the
per-link blockage probability.
"""

__version__ = "0.1.0"

from .channel import (Antenna, ChannelParams, LinkSample, LinkTable, geometric_los,
                      link_table, noise_floor, pathloss_los, pathloss_nlos, sample_link,
                      stochastic_blockage)
from .engine import (AuditSummary, MetricsRecord, RunOutput, SimConfig, SummaryRow,
                     SweepResult, SweepSpec, WorldConfig, connectivity, run,
                     run_with_audit, sweep_blockage, sweep_snr, time_average)
from .errors import ConfigurationError, MeasurementError
from .ran import (ControlMessage, ForwardingEntry, IndicationReport, NodeId, NodeKind,
                  NodeState, SubscriptionRequest, World, apply_control, emit_indication,
                  report_due, sense_neighbors)
from .ric import (ConnectivityGraph, RelayPath, RicState, XAppConfig, XAppDiagnostics,
                  assign_relays, build_graph, find_path, ingest, xapp_tick)
from .scenario import (Building, Lane, MobilityState, RoadLayout, RsuNode, TrafficConfig,
                       VehicleState, build_intersection, default_rsus, spawn_vehicles,
                       step_mobility)

__all__ = [
    "__version__",
    "Antenna", "ChannelParams", "LinkSample", "LinkTable", "geometric_los",
    "link_table", "noise_floor", "pathloss_los", "pathloss_nlos", "sample_link",
    "stochastic_blockage",
    "AuditSummary", "MetricsRecord", "RunOutput", "SimConfig", "SummaryRow",
    "SweepResult", "SweepSpec", "WorldConfig", "connectivity", "run",
    "run_with_audit", "sweep_blockage", "sweep_snr", "time_average",
    "ConfigurationError", "MeasurementError",
    "ControlMessage", "ForwardingEntry", "IndicationReport", "NodeId", "NodeKind",
    "NodeState", "SubscriptionRequest", "World", "apply_control", "emit_indication",
    "report_due", "sense_neighbors",
    "ConnectivityGraph", "RelayPath", "RicState", "XAppConfig", "XAppDiagnostics",
    "assign_relays", "build_graph", "find_path", "ingest", "xapp_tick",
    "Building", "Lane", "MobilityState", "RoadLayout", "RsuNode", "TrafficConfig",
    "VehicleState", "build_intersection", "default_rsus", "spawn_vehicles",
    "step_mobility",
]
