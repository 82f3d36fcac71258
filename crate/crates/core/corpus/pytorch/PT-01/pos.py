import torch


class Encoder(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.proj = torch.nn.Linear(8, 8)
        self.feature_cache = {}

    def forward(self, x, key):
        out = self.proj(x)
        self.feature_cache[key] = self.proj(out)  # expect[PT-01]
        return out
