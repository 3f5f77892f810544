"""Comparison models: sigmoid FCM, Hopfield memory, least squares."""
