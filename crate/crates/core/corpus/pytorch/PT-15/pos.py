import torch


def pool(x):
    s = torch.sum(x, dim=1, keepdim=True)  # expect[PT-15]
    return s.squeeze(1)
