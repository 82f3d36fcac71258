import torch


def export(model, examples):
    for i, ex in enumerate(examples):
        traced = torch.jit.trace(model, ex)  # expect[PT-30]
        traced.save(f"model_{i}.pt")
