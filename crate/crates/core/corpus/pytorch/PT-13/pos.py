import torch


class Scale(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, factor):
        ctx.scaled = x * factor  # expect[PT-13]
        return x * factor

    @staticmethod
    def backward(ctx, grad):
        return grad, None
