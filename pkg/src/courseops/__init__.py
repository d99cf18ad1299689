"""Course operations engine: schedule generation and upkeep, attendance
monitoring, struggling-student outreach, and organizational scaling plans."""

__version__ = "0.1.0"
