"""Ride-pooling dispatch with integrated rebalancing, and a fleet simulator."""
