import torch


def chain(mats):
    return torch.linalg.multi_dot(mats)


def pairwise(a, mats):
    prods = []
    for m in mats:
        prods.append(torch.mm(a, m))
    return prods
