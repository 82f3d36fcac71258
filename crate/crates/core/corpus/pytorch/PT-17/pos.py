import torch


class Square(torch.autograd.Function):
    def forward(ctx, x):  # expect[PT-17]
        ctx.save_for_backward(x)
        return x * x

    @staticmethod
    def backward(ctx, grad):
        (x,) = ctx.saved_tensors
        return 2 * x * grad
