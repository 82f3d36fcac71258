import torch


def predict(model, batch):
    with torch.no_grad():
        return model(batch)


@torch.inference_mode()
def infer(model, batch):
    return model(batch)
