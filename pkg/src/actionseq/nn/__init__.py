from .tensor import Parameter, Tensor, no_grad
from . import functional, gradcheck, modules, optim

__all__ = ["Parameter", "Tensor", "no_grad", "functional", "gradcheck", "modules", "optim"]
