import torch


def train(data, optimizer):
    for x, y in data:
        optimizer.zero_grad()
        model = torch.nn.Linear(4, 1)  # expect[PT-29]
        loss = ((model(x) - y) ** 2).mean()
        loss.backward()
        optimizer.step()
