"""
MC PeakPower - peak-power and temperature aware run-time scheduling simulator
for mixed-criticality task graphs on clustered multi-core platforms
"""

__version__ = '1.0.0'
