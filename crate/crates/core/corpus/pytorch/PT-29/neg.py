import torch


def train(data, optimizer):
    model = torch.nn.Linear(4, 1)
    for x, y in data:
        optimizer.zero_grad()
        loss = ((model(x) - y) ** 2).mean()
        loss.backward()
        optimizer.step()
