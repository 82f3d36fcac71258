import torch


class Agent:
    def __init__(self):
        self.replay_memory = []

    def remember(self, obs, reward):
        self.replay_memory.append(torch.as_tensor(obs))  # expect[PT-19]
