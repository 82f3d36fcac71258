import torch


class Node(torch.nn.Module):
    def __init__(self, child):
        super().__init__()
        self.child = child
        self.child.parent = self  # expect[PT-16]
