import torch


def attach(model, store):
    model.fc.register_forward_hook(lambda m, i, o: store.append(o.detach()))  # expect[PT-07]
