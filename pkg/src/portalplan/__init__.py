"""portalplan: convex-cell decomposition planning with learned portal scoring."""

__version__ = "0.1.0"
