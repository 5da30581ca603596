"""MarketSegNet autoencoder and the PCA baseline it is compared against."""
from .comparison import compare, embed_images, embedding_shift, segnet_error
from .network import Encoding, MarketSegNet
from .pca import PCAModel, pca_error, pca_fit, pca_roundtrip
from .training import AutoencoderResult, train_autoencoder

__all__ = [
    "AutoencoderResult",
    "Encoding",
    "MarketSegNet",
    "PCAModel",
    "compare",
    "embed_images",
    "embedding_shift",
    "pca_error",
    "pca_fit",
    "pca_roundtrip",
    "segnet_error",
    "train_autoencoder",
]
