import torch


def train(model, loader, optimizer, loss_fn):
    total = 0
    for x, y in loader:
        optimizer.zero_grad()
        loss = loss_fn(model(x), y)
        loss.backward()
        optimizer.step()
        total += loss  # expect[PT-09]
    return total
