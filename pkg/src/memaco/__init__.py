"""Ant-colony edge detection and its memristive-network realization."""
