"""uda-forge: unsupervised domain adaptation for toy semantic segmentation."""
