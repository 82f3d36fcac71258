import torch


def step(model):
    activations = torch.randn(1024, 1024, device="cuda")
    model.consume(activations)
    del activations
    torch.cuda.empty_cache()
