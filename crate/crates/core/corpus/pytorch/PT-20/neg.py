import torch


class Net(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.fc = torch.nn.Linear(4, 2)
        self.register_buffer("last_input", torch.zeros(4))

    def forward(self, x):
        self.last_input = x
        return self.fc(x)
