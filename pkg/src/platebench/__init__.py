"""platebench: protocol-step language, stoichiometry, agent orchestration and
evaluation metrics for plate-based liquid-handler experiment design."""

__version__ = "0.1.0"
