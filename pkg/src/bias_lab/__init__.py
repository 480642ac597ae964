"""Implicit bias of gradient descent on linear fully connected, diagonal
and convolutional networks: models, training, reference solvers and
experiment runners."""
__version__ = "0.1.0"
