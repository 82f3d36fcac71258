import torch
import torch.distributed as dist


def sync(tensors):
    for t in tensors:
        group = dist.new_group([0, 1])  # expect[PT-28]
        dist.all_reduce(t, group=group)
