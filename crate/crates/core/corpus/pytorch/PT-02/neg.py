import torch
import torch.nn.functional as F


def train_step(model, optimizer, x, y, z):
    optimizer.zero_grad()
    hidden = model(x)
    loss_a = F.mse_loss(hidden, y)
    loss_b = F.mse_loss(hidden, z)
    loss_a.backward(retain_graph=True)
    loss_b.backward()
    optimizer.step()
    return loss_a.item() + loss_b.item()
