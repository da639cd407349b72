"""
CONTRARIAN-CASCADES Package
Sequential social learning with a nonconformity bonus and costly signals
"""
__version__ = "0.1.0"
