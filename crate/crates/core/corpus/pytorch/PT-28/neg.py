import torch
import torch.distributed as dist


def sync(tensors):
    group = dist.new_group([0, 1])
    for t in tensors:
        dist.all_reduce(t, group=group)
