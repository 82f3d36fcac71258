import torch


def evaluate(model, loader):
    outputs = []
    with torch.no_grad():
        for x in loader:
            outputs.append(model(x).cpu())
    return outputs
