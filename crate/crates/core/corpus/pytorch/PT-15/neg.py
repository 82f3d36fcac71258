import torch


def normalize(x):
    s = torch.sum(x, dim=1, keepdim=True)
    return x / s
