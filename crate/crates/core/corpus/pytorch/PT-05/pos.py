import torch


def predict(model, batch):
    return model(batch)  # expect[PT-05]
