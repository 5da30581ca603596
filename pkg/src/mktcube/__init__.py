"""Market images, market-attention return models and the MarketSegNet autoencoder."""

__version__ = "0.1.0"
