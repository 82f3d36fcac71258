import torch


def hvp(loss, params, v):
    grads = torch.autograd.grad(loss, params)
    return torch.autograd.grad(grads, params, grad_outputs=v)  # expect[PT-24]
