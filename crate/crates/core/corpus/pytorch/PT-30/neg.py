import torch


def export(model, example, paths):
    traced = torch.jit.trace(model, example)
    for p in paths:
        traced.save(p)
