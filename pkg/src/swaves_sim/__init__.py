"""Seed-reproducible simulator of VNF lifecycle management on a mobile edge network.

A fixed-step engine moves users through a tree of base stations and edge
clouds, drives container lifecycle state machines on every edge cloud, and
measures the fraction of user packets that miss their service: because the
serving instance is not running, because the user's context is mid-migration,
or because the end-to-end delay exceeds the service deadline.
"""

__version__ = "0.1.0"
