from .base_distribution import BaseDistribution, Triple
