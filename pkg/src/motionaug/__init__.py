"""Motion-data augmentation: generative variants, physics correction and virtual IMU synthesis."""

__version__ = "0.1.0"
