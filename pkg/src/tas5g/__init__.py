"""TAS scheduling across a stochastic 5G bridge: gate math, delay models, planner, simulator and trace tools."""

__version__ = "0.1.0"
