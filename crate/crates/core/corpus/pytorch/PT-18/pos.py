import torch


def chain(mats):
    acc = torch.eye(4)
    for m in mats:
        acc = torch.matmul(acc, m)  # expect[PT-18]
    return acc
