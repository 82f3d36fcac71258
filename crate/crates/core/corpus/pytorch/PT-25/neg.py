import torch


class RunningNorm(torch.nn.Module):
    def __init__(self, n):
        super().__init__()
        self.register_buffer("running_mean", torch.zeros(n))

    def forward(self, x):
        mean = x.mean(0)
        self.running_mean = (0.9 * self.running_mean + 0.1 * mean).detach()
        return x - mean
