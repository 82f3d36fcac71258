import torch


def gather(model, loader):
    parts = []
    for x in loader:
        parts.append(model.embed(x))
    return torch.cat(parts)
