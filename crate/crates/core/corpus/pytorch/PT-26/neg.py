import torch


def validate(model, batch):
    model.eval()
    with torch.no_grad():
        return model(batch)
