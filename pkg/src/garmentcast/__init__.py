"""garmentcast: popularity forecasting for new garment designs.

Trainable multimodal forecasting models (feature-fusion MLP, trend-series
backbones, and their hybrid), hierarchical label-sharing classifiers, a
weekly attribute trend store, evaluation and model ranking tools, a synthetic
fashion world for end-to-end testing, and an HTTP forecast service.
"""

__version__ = "0.1.0"
